#include <catch2/catch_amalgamated.hpp>

#include "personagen/orchestrator.hpp"

using namespace personagen;

namespace {

Schedule small_schedule(std::int64_t n, std::uint64_t seed = 21) {
    TargetDistribution t = TargetDistribution::uniform(n, seed);
    return build_schedule(t);
}

}  // namespace

TEST_CASE("clean mock slot is accepted in round 0 with zero issues") {
    MockBackend backend(11);
    Schedule schedule = small_schedule(4);
    OrchestratorConfig cfg;
    auto outcome = run_slot(schedule.slots[0], backend, cfg, 77);
    REQUIRE(outcome.accepted);
    CHECK(outcome.rounds_used == 0);
    REQUIRE(outcome.history.size() == 1);
    CHECK(outcome.history[0].error_count() == 0);
    // accepted persona satisfies the deep validator
    CHECK(deep_validate(outcome.persona).final_ready);
    // constraint fidelity
    const auto& c = schedule.slots[0].constraint;
    CHECK(outcome.persona.grade_number() == c.grade);
    CHECK(outcome.persona.gender_value() == c.gender);
    CHECK(outcome.persona.tier() == c.tier);
}

TEST_CASE("correctable fault: accepted in round 1 with one error routed to its owner") {
    MockBackend backend(3, parse_fault_specs("r3:1.0"));
    Schedule schedule = small_schedule(2);
    OrchestratorConfig cfg;
    auto outcome = run_slot(schedule.slots[0], backend, cfg, 5);
    REQUIRE(outcome.accepted);
    CHECK(outcome.rounds_used == 1);
    REQUIRE(outcome.history.size() == 2);
    std::size_t r3_errors = 0;
    for (const auto& i : outcome.history[0].issues)
        if (i.code == "R3" && i.severity == Severity::Error) {
            ++r3_errors;
            CHECK(i.owner == owner::kAcademic);
        }
    CHECK(r3_errors == 1);
    CHECK(outcome.history[1].error_count() == 0);
}

TEST_CASE("persistent fault: rejected after exhausting the revision budget") {
    MockBackend backend(3, parse_fault_specs("r15:1.0:persistent"));
    Schedule schedule = small_schedule(2);
    OrchestratorConfig cfg;
    cfg.budget = 3;
    auto outcome = run_slot(schedule.slots[0], backend, cfg, 5);
    CHECK_FALSE(outcome.accepted);
    CHECK(outcome.rounds_used == 3);
    CHECK(outcome.failure_cause == "validation");
    bool has_r15 = false;
    for (const auto& i : outcome.terminal_issues)
        if (i.code == "R15") has_r15 = true;
    CHECK(has_r15);
    // budget bound: history = initial validation + one per revise round
    CHECK(outcome.history.size() == 4);
}

TEST_CASE("backend failure surfaces as a rejection with cause") {
    MockBackend backend(3, parse_fault_specs("backend:1.0:persistent"));
    Schedule schedule = small_schedule(2);
    OrchestratorConfig cfg;
    auto outcome = run_slot(schedule.slots[0], backend, cfg, 5);
    CHECK_FALSE(outcome.accepted);
    CHECK(outcome.failure_cause.rfind("backend", 0) == 0);
}

TEST_CASE("wrapped responses are re-requested once, then become an issue") {
    // correctable wrapper: second request (retry 1) is clean, so the slot
    // passes with no format issues at all
    MockBackend corrected(3, parse_fault_specs("wrapper:1.0"));
    Schedule schedule = small_schedule(2);
    OrchestratorConfig cfg;
    auto ok = run_slot(schedule.slots[0], corrected, cfg, 5);
    REQUIRE(ok.accepted);
    CHECK(ok.rounds_used == 0);

    // persistent wrapper: re-request fails too; FORMAT+R7 issues trigger
    // revise rounds until the budget runs out
    MockBackend broken(3, parse_fault_specs("wrapper:1.0:persistent"));
    auto bad = run_slot(schedule.slots[0], broken, cfg, 5);
    CHECK_FALSE(bad.accepted);
    bool has_format = false;
    for (const auto& i : bad.terminal_issues)
        if (i.code == "FORMAT") has_format = true;
    CHECK(has_format);
}

TEST_CASE("field ownership provenance matches the responsibility table") {
    MockBackend backend(13);
    Schedule schedule = small_schedule(3);
    OrchestratorConfig cfg;
    auto outcome = run_slot(schedule.slots[1], backend, cfg, 9);
    REQUIRE(outcome.accepted);
    for (const auto& [fieldname, writer] : outcome.provenance) {
        CHECK(writer == field_owner(fieldname));
    }
    // every agent-owned field was written
    CHECK(outcome.provenance.size() == 15 - 1);  // all but the system-owned id
}

TEST_CASE("route_issues: grouping, re-mapping by field lookup, drops") {
    Issue academic;
    academic.code = "F2";
    academic.severity = Severity::Error;
    academic.owner = owner::kAcademic;
    academic.fields = {field::kAcademicLevel};
    auto routed = route_issues({academic});
    REQUIRE(routed.tasks.size() == 1);
    CHECK(routed.tasks.count(Role::Academic) == 1);

    CHECK(route_issues({}).tasks.empty());

    // owner says Mental Health but the field belongs to Personality & Values
    Issue mislabeled;
    mislabeled.code = "R8";
    mislabeled.severity = Severity::Error;
    mislabeled.owner = owner::kMentalHealth;
    mislabeled.fields = {field::kValues};
    auto remapped = route_issues({mislabeled});
    REQUIRE(remapped.tasks.size() == 1);
    CHECK(remapped.tasks.count(Role::Values) == 1);
    REQUIRE_FALSE(remapped.log.empty());

    // unknown owner with unmappable fields is dropped with a log entry
    Issue orphan;
    orphan.code = "X";
    orphan.severity = Severity::Error;
    orphan.owner = "nobody";
    orphan.fields = {"made-up field"};
    auto dropped = route_issues({orphan});
    CHECK(dropped.tasks.empty());
    REQUIRE_FALSE(dropped.log.empty());

    // warnings attach to roles with errors but never create tasks alone
    Issue warn;
    warn.code = "ADAPT-VALUES";
    warn.severity = Severity::Warning;
    warn.owner = owner::kValues;
    warn.fields = {field::kValues};
    CHECK(route_issues({warn}).tasks.empty());
    Issue err = mislabeled;
    err.owner = owner::kValues;
    auto both = route_issues({warn, err});
    REQUIRE(both.tasks.count(Role::Values) == 1);
    CHECK(both.tasks[Role::Values].size() == 2);
}

TEST_CASE("run_batch: clean mock accepts every slot") {
    MockBackend backend(100);
    Schedule schedule = small_schedule(100);
    OrchestratorConfig cfg;
    std::vector<Persona> corpus;
    auto report = run_batch(schedule, backend, cfg, 4, 1,
                            [&](const Persona& p, const SlotOutcome&) { corpus.push_back(p); });
    CHECK(report.total_slots == 100);
    CHECK(report.accepted == 100);
    CHECK(report.rejected == 0);
    CHECK(report.acceptance_rate == 1.0);
    CHECK(corpus.size() == 100);
    // slot linkage present on every accepted persona
    for (const auto& p : corpus) {
        REQUIRE(p.slot.has_value());
        REQUIRE(p.constraint.has_value());
    }
}

TEST_CASE("run_batch: persistent faults produce rejections and shortfall") {
    MockBackend backend(100, parse_fault_specs("r15:0.1:persistent"));
    Schedule schedule = small_schedule(100);
    OrchestratorConfig cfg;
    std::size_t accepted = 0;
    auto report = run_batch(schedule, backend, cfg, 4, 1,
                            [&](const Persona&, const SlotOutcome&) { ++accepted; });
    CHECK(report.accepted == accepted);
    CHECK(report.accepted + report.rejected == 100);
    CHECK(report.rejected > 0);
    // every rejected slot was re-queued once first
    CHECK(report.requeued == report.rejected);
    std::size_t shortfall_total = 0;
    for (const auto& [cell, n] : report.shortfall) shortfall_total += n;
    CHECK(shortfall_total == report.rejected);
    CHECK(report.issue_counts.count("R15") == 1);
}

TEST_CASE("run_batch determinism: same seed and one worker give identical corpora") {
    Schedule schedule = small_schedule(40);
    OrchestratorConfig cfg;
    auto run_once = [&]() {
        MockBackend backend(55, parse_fault_specs("r3:0.15"));
        std::string lines;
        run_batch(schedule, backend, cfg, 9, 1, [&](const Persona& p, const SlotOutcome&) {
            lines += serialize_persona(p);
            lines.push_back('\n');
        });
        return lines;
    };
    const std::string a = run_once();
    const std::string b = run_once();
    CHECK(a == b);
    CHECK_FALSE(a.empty());
}

TEST_CASE("run_batch with multiple workers accepts the same set") {
    Schedule schedule = small_schedule(60);
    OrchestratorConfig cfg;
    auto collect_ids = [&](std::size_t workers) {
        MockBackend backend(55);
        std::set<std::string> ids;
        std::mutex m;
        run_batch(schedule, backend, cfg, 9, workers,
                  [&](const Persona& p, const SlotOutcome&) {
                      std::lock_guard<std::mutex> lock(m);
                      ids.insert(p.id);
                  });
        return ids;
    };
    auto serial = collect_ids(1);
    auto parallel = collect_ids(4);
    CHECK(serial == parallel);
    CHECK(serial.size() == 60);
}

TEST_CASE("mental-health prompt always sees the accepted academic level") {
    // whiteboard conditioning invariant, asserted on the rendered prompt
    class RecordingBackend : public Backend {
    public:
        MockBackend inner{7};
        std::vector<std::string> mental_prompts;
        std::string complete(const CompletionRequest& req) override {
            if (req.role == Role::MentalHealth) mental_prompts.push_back(req.prompt);
            return inner.complete(req);
        }
    };
    RecordingBackend backend;
    Schedule schedule = small_schedule(6);
    OrchestratorConfig cfg;
    for (const auto& slot : schedule.slots) {
        auto outcome = run_slot(slot, backend, cfg, 3);
        REQUIRE(outcome.accepted);
    }
    REQUIRE(backend.mental_prompts.size() == 6);
    for (std::size_t i = 0; i < schedule.slots.size(); ++i) {
        const std::string expected = academic_label(schedule.slots[i].constraint.tier);
        CHECK(backend.mental_prompts[i].find(expected) != std::string::npos);
    }
}
