#pragma once

// Per-slot generation loop and the batch runner.
//
// run_slot: agents propose in the fixed order Enrollment -> Academic ->
// Values -> SocialCreative -> MentalHealth, each conditioning on the shared
// whiteboard; the rule engine validates; Error issues are routed to the owner
// agents, which revise within the budget. Warnings never consume budget.
// Slots whose budget runs out are re-queued once by run_batch with a fresh
// diversity seed, then counted as shortfall.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "personagen/backend.hpp"
#include "personagen/io.hpp"
#include "personagen/prompts.hpp"
#include "personagen/validator.hpp"

namespace personagen {

struct WhiteboardEntry {
    json value;
    Role writer = Role::Enrollment;
    int round = 0;
};

struct Whiteboard {
    Slot slot;
    std::uint64_t attempt = 0;
    std::map<std::string, WhiteboardEntry> fields;
    int round = 0;
    std::vector<ValidationReport> issue_history;

    void init(const Slot& s, std::uint64_t a) {
        slot = s;
        attempt = a;
        draft_[field::kSlot] = slot.index;
        draft_[field::kConstraint] = constraint_to_json(slot.constraint);
    }

    void write(const std::string& key, json value, Role writer) {
        draft_[key] = value;
        fields[key] = WhiteboardEntry{std::move(value), writer, round};
    }

    // Draft state (the prompt context every agent conditions on): fields in
    // agent write order, with the slot linkage and sampling constraint.
    const json& state() const { return draft_; }

private:
    json draft_ = json::object();
};

struct OrchestratorConfig {
    int budget = 3;  // max revision rounds per attempt
    ValidatorConfig validator;
    bool llm_validator_pass = false;  // optional second opinion, off by default
    double propose_temperature = 0.8;
    double revise_temperature = 0.2;
    int max_completion_tokens = 1024;
};

struct SlotOutcome {
    bool accepted = false;
    Persona persona;
    std::map<std::string, std::string> provenance;  // field -> writer agent
    int rounds_used = 0;                            // revise rounds executed
    std::vector<Issue> terminal_issues;
    std::string failure_cause;  // "backend", "ownership", "validation"
    std::vector<ValidationReport> history;
};

struct RoutedIssues {
    std::map<Role, std::vector<Issue>> tasks;
    std::vector<std::string> log;  // re-mappings and drops
};

// Group issues by owner role; fields outside the named owner's set are
// re-mapped through the responsibility table and logged; unmappable issues
// are dropped with a log entry. Warning-severity issues are attached for
// context to roles that already have an Error, but never create a task on
// their own.
inline RoutedIssues route_issues(const std::vector<Issue>& issues) {
    RoutedIssues out;
    std::map<Role, std::vector<Issue>> warnings;
    for (const auto& issue : issues) {
        std::optional<Role> target = role_from_owner(issue.owner);
        bool remapped = false;
        auto normalize_field = [](const std::string& f) -> std::string {
            if (f == field::kPiaget || f == field::kErikson || f == field::kKohlberg)
                return field::kStages;
            return f;
        };
        auto fields_owned = [&](Role r) {
            const auto& owned = role_fields(r);
            for (const auto& f : issue.fields) {
                const std::string nf = normalize_field(f);
                bool ok = false;
                for (const auto& o : owned)
                    if (o == nf) ok = true;
                if (!ok) return false;
            }
            return true;
        };
        if (!target || (!issue.fields.empty() && !fields_owned(*target))) {
            // re-map via the responsibility table using the first mappable field
            std::optional<Role> by_field;
            for (const auto& f : issue.fields) {
                if (auto r = role_from_owner(field_owner(normalize_field(f)))) {
                    by_field = r;
                    break;
                }
            }
            if (by_field && (!target || *by_field != *target)) {
                out.log.push_back("issue " + issue.code + " re-routed from '" + issue.owner +
                                  "' to '" + role_title(*by_field) + "' by field lookup");
                target = by_field;
                remapped = true;
            }
        }
        (void)remapped;
        if (!target) {
            out.log.push_back("issue " + issue.code + " with owner '" + issue.owner +
                              "' dropped: no responsible agent");
            continue;
        }
        if (issue.severity == Severity::Error) out.tasks[*target].push_back(issue);
        else warnings[*target].push_back(issue);
    }
    for (auto& [role, task_issues] : out.tasks) {
        auto w = warnings.find(role);
        if (w != warnings.end())
            for (auto& i : w->second) task_issues.push_back(i);
    }
    return out;
}

namespace detail {

struct AgentReply {
    bool ok = false;
    json payload;
    std::string error;
    bool foreign_keys = false;  // wrote a field outside the role's set
};

inline AgentReply parse_agent_reply(const std::string& text, Role role) {
    AgentReply reply;
    json doc;
    try {
        doc = json::parse(trim(text));
    } catch (const std::exception& e) {
        reply.error = std::string("not a JSON object: ") + e.what();
        return reply;
    }
    if (!doc.is_object()) {
        reply.error = "top-level value is not an object";
        return reply;
    }
    const auto& owned = role_fields(role);
    json normalized = json::object();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string key = canonical_field_name(it.key());
        bool is_owned = false;
        for (const auto& o : owned)
            if (o == key) is_owned = true;
        if (!is_owned) {
            reply.error = "wrote key outside the responsible set: " + key;
            reply.foreign_keys = true;
            return reply;
        }
        normalized[key] = it.value();
    }
    reply.ok = true;
    reply.payload = std::move(normalized);
    return reply;
}

inline std::string persona_id_for(const Slot& slot) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%08lld", static_cast<long long>(slot.index));
    return buf;
}

inline Persona assemble_persona(const Whiteboard& board) {
    auto parsed = persona_from_json(board.state());
    if (!parsed.ok()) {
        // unreachable for well-typed agent payloads; surfaced as an empty
        // persona so R7 reports the damage
        Persona p;
        p.id = persona_id_for(board.slot);
        return p;
    }
    parsed.persona->id = persona_id_for(board.slot);
    return *std::move(parsed.persona);
}

inline Issue format_issue(Role role, const std::string& why) {
    Issue i;
    i.code = "FORMAT";
    i.severity = Severity::Error;
    i.description = "agent reply was not a single structured object: " + why;
    i.owner = role_title(role);
    i.fields = role_fields(role);
    i.hint = "Output exactly one JSON object with only your own keys and no Markdown fences.";
    return i;
}

}  // namespace detail

inline SlotOutcome run_slot(const Slot& slot, Backend& backend, const OrchestratorConfig& cfg,
                            std::uint64_t run_seed, std::uint64_t attempt = 0) {
    SlotOutcome outcome;
    Whiteboard board;
    board.init(slot, attempt);
    const std::uint64_t diversity_seed =
        mix_seed(run_seed, static_cast<std::uint64_t>(slot.index), attempt);

    std::vector<Issue> format_issues;

    auto invoke_agent = [&](Role role, PromptMode mode,
                            const std::vector<Issue>& issues) -> std::optional<std::string> {
        CompletionRequest req;
        req.role = role;
        req.slot = slot;
        req.attempt = attempt;
        req.round = board.round;
        req.revise = mode == PromptMode::Revise;
        req.temperature =
            mode == PromptMode::Propose ? cfg.propose_temperature : cfg.revise_temperature;
        req.max_tokens = cfg.max_completion_tokens;
        req.request_id = detail::persona_id_for(slot) + ":r" + std::to_string(board.round) + ":" +
                         role_title(role);
        req.prompt =
            render_prompt(role, board.state(), mode, issues, slot.constraint, diversity_seed);
        for (int attempt_no = 0; attempt_no < 2; ++attempt_no) {
            req.retry = attempt_no;
            std::string text;
            try {
                text = backend.complete(req);
            } catch (const BackendError& e) {
                outcome.failure_cause = std::string("backend: ") + e.what();
                return std::nullopt;
            }
            auto reply = detail::parse_agent_reply(text, role);
            if (reply.ok) {
                for (auto it = reply.payload.begin(); it != reply.payload.end(); ++it)
                    board.write(it.key(), it.value(), role);
                return text;
            }
            if (mode == PromptMode::Revise && reply.foreign_keys) {
                outcome.failure_cause = "ownership: " + reply.error;
                return std::nullopt;
            }
            if (attempt_no == 1) {
                format_issues.push_back(detail::format_issue(role, reply.error));
                return text;  // recorded as an Issue; generation continues
            }
        }
        return std::nullopt;
    };

    // propose pass
    for (Role role : content_role_order()) {
        if (!invoke_agent(role, PromptMode::Propose, {})) return outcome;  // backend failure
    }

    // validate-revise loop
    while (true) {
        Persona persona = detail::assemble_persona(board);
        ValidationReport report = deep_validate(persona, cfg.validator);
        for (const auto& fi : format_issues) report.issues.push_back(fi);
        report.final_ready = report.error_count() == 0;
        format_issues.clear();

        if (cfg.llm_validator_pass) {
            CompletionRequest req;
            req.role = Role::Validator;
            req.slot = slot;
            req.round = board.round;
            req.prompt = render_prompt(Role::Validator, board.state(), PromptMode::Propose, {},
                                       slot.constraint, diversity_seed);
            try {
                const json doc = json::parse(backend.complete(req));
                for (const auto& item : doc.value("issues", json::array())) {
                    Issue extra;
                    extra.code = item.value("code", std::string("LLM"));
                    extra.severity = Severity::Warning;  // rule engine stays authoritative
                    extra.description = item.value("desc", std::string());
                    extra.owner = item.value("owner", std::string());
                    extra.hint = item.value("hint", std::string());
                    if (item.contains("fields"))
                        extra.fields = item.at("fields").get<std::vector<std::string>>();
                    report.issues.push_back(std::move(extra));
                }
            } catch (const std::exception&) {
                // advisory pass only; parsing problems are ignored
            }
        }

        board.issue_history.push_back(report);

        if (report.error_count() == 0) {
            outcome.accepted = true;
            outcome.persona = std::move(persona);
            outcome.rounds_used = board.round;
            outcome.history = board.issue_history;
            for (const auto& [name, entry] : board.fields)
                outcome.provenance[name] = role_title(entry.writer);
            return outcome;
        }
        if (board.round >= cfg.budget) {
            outcome.rounds_used = board.round;
            outcome.terminal_issues = report.issues;
            outcome.failure_cause = "validation";
            outcome.history = board.issue_history;
            return outcome;
        }

        std::vector<Issue> errors_and_context = report.issues;
        RoutedIssues routed = route_issues(errors_and_context);
        board.round += 1;
        for (Role role : content_role_order()) {
            auto task = routed.tasks.find(role);
            if (task == routed.tasks.end()) continue;
            if (!invoke_agent(role, PromptMode::Revise, task->second)) return outcome;
        }
    }
}

// ---------------------------------------------------------------------------
// Batch runner
// ---------------------------------------------------------------------------

struct RunReport {
    std::size_t total_slots = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t requeued = 0;
    double acceptance_rate = 0.0;
    std::vector<std::size_t> round_histogram;     // index = revise rounds used
    std::map<std::string, std::size_t> issue_counts;  // code -> occurrences
    std::map<std::string, std::size_t> shortfall;     // cell name -> missing
    std::map<std::string, std::size_t> failure_causes;
    std::uint64_t seed = 0;
    int budget = 0;
    std::size_t workers = 1;
    BackendStats backend;

    json to_json() const {
        json out = json::object();
        out["total_slots"] = total_slots;
        out["accepted"] = accepted;
        out["rejected"] = rejected;
        out["requeued"] = requeued;
        out["acceptance_rate"] = acceptance_rate;
        out["round_histogram"] = round_histogram;
        out["issue_counts"] = issue_counts;
        out["shortfall"] = shortfall;
        out["failure_causes"] = failure_causes;
        out["seed"] = seed;
        out["budget"] = budget;
        out["workers"] = workers;
        json stats = json::object();
        stats["requests"] = backend.requests;
        stats["retries"] = backend.retries;
        stats["failures"] = backend.failures;
        stats["total_latency_ms"] = backend.total_latency_ms;
        out["backend"] = std::move(stats);
        return out;
    }
};

// Runs every slot exactly once (plus one re-queue for budget-exhausted slots),
// streaming accepted personas to `sink` in completion order. With one worker
// and the mock backend the output is byte-reproducible.
inline RunReport run_batch(const Schedule& schedule, Backend& backend,
                           const OrchestratorConfig& cfg, std::uint64_t run_seed,
                           std::size_t workers,
                           const std::function<void(const Persona&, const SlotOutcome&)>& sink) {
    RunReport report;
    report.total_slots = schedule.slots.size();
    report.seed = run_seed;
    report.budget = cfg.budget;
    report.workers = workers == 0 ? 1 : workers;
    report.round_histogram.assign(static_cast<std::size_t>(cfg.budget) + 1, 0);

    std::mutex mutex;  // guards report + sink
    std::vector<const Slot*> requeue;

    auto note_outcome = [&](const Slot& slot, const SlotOutcome& outcome, std::uint64_t attempt,
                            bool* want_requeue) {
        std::lock_guard<std::mutex> lock(mutex);
        for (const auto& r : outcome.history)
            for (const auto& i : r.issues) report.issue_counts[i.code]++;
        if (outcome.accepted) {
            report.accepted++;
            report.round_histogram[static_cast<std::size_t>(
                std::min(outcome.rounds_used, cfg.budget))]++;
            sink(outcome.persona, outcome);
            return;
        }
        if (attempt == 0) {
            report.requeued++;
            requeue.push_back(&slot);
            *want_requeue = true;
            return;
        }
        report.rejected++;
        report.failure_causes[outcome.failure_cause.empty()
                                  ? "validation"
                                  : split(outcome.failure_cause, ':')[0]]++;
        report.shortfall[cell_name(cell_index(slot.constraint))]++;
    };

    auto process = [&](const Slot& slot, std::uint64_t attempt) {
        bool want_requeue = false;
        try {
            SlotOutcome outcome = run_slot(slot, backend, cfg, run_seed, attempt);
            if (outcome.accepted) {
                outcome.persona.slot = slot.index;
                outcome.persona.constraint = slot.constraint;
            }
            note_outcome(slot, outcome, attempt, &want_requeue);
        } catch (const std::exception& e) {
            // a crashing slot must not poison the batch
            std::lock_guard<std::mutex> lock(mutex);
            if (attempt == 0) {
                report.requeued++;
                requeue.push_back(&slot);
            } else {
                report.rejected++;
                report.failure_causes[std::string("crash: ") + e.what()]++;
                report.shortfall[cell_name(cell_index(slot.constraint))]++;
            }
        }
    };

    auto run_pass = [&](const std::vector<const Slot*>& slots, std::uint64_t attempt) {
        if (report.workers <= 1) {
            for (const Slot* s : slots) process(*s, attempt);
            return;
        }
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < report.workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t i = cursor.fetch_add(1);
                    if (i >= slots.size()) return;
                    process(*slots[i], attempt);
                }
            });
        }
        for (auto& t : pool) t.join();
    };

    std::vector<const Slot*> first_pass;
    first_pass.reserve(schedule.slots.size());
    for (const auto& s : schedule.slots) first_pass.push_back(&s);
    run_pass(first_pass, 0);

    // one re-queue with a fresh diversity seed, then shortfall
    std::vector<const Slot*> second_pass;
    {
        std::lock_guard<std::mutex> lock(mutex);
        second_pass = requeue;
    }
    run_pass(second_pass, 1);

    report.acceptance_rate = report.total_slots == 0
                                 ? 0.0
                                 : static_cast<double>(report.accepted) /
                                       static_cast<double>(report.total_slots);
    report.backend = backend.stats();
    return report;
}

}  // namespace personagen
