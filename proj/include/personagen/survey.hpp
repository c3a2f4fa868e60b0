#pragma once

// Shadow surveys and the external consistency pipelines.
//
// A shadow survey re-administers real survey items to persona agents under an
// immersive role-playing prompt; replies must be a single JSON object of
// item-id -> integer code. Out-of-range or textual answers pass through a
// rule-based mapper (option labels, numeric words); still-invalid replies are
// re-requested once and then recorded missing. Cohort means and
// Pearson/Spearman consistency use exactly the same code path on both sides.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "personagen/backend.hpp"
#include "personagen/cohort.hpp"
#include "personagen/config.hpp"
#include "personagen/csv.hpp"
#include "personagen/stats.hpp"

namespace personagen {

// ---------------------------------------------------------------------------
// Survey items
// ---------------------------------------------------------------------------

struct SurveyItem {
    std::string id;
    std::string prompt;
    int min_code = 1;
    int max_code = 5;
    bool reverse = false;                // reverse-coded relative to the construct
    std::vector<std::string> labels;     // option text; code = min_code + index
};

inline SurveyItem survey_item_from_toml(const TomlTable& t) {
    SurveyItem item;
    item.id = t.at("id").as_string();
    item.prompt = t.get_string("prompt", "");
    item.min_code = static_cast<int>(t.get_int("min_code", 1));
    item.max_code = static_cast<int>(t.get_int("max_code", 5));
    item.reverse = t.get_bool("reverse", false);
    item.labels = t.get_string_array("labels");
    if (item.max_code < item.min_code)
        throw ConfigError("item " + item.id + ": max_code < min_code");
    return item;
}

inline std::vector<SurveyItem> load_survey_items(const TomlTable& t) {
    std::vector<SurveyItem> items;
    for (const auto& row : t.array_of_tables("item")) items.push_back(survey_item_from_toml(row));
    return items;
}

// Rule-based mapper: integer in range, numeric string, option-label match
// (exact then substring, case-insensitive), then numeric words.
inline std::optional<int> map_answer(const SurveyItem& item, const json& answer) {
    auto in_range = [&](long long code) {
        return code >= item.min_code && code <= item.max_code;
    };
    if (answer.is_number_integer() || answer.is_number_unsigned()) {
        const long long code = answer.get<long long>();
        if (in_range(code)) return static_cast<int>(code);
        return std::nullopt;
    }
    if (answer.is_number_float()) {
        const double v = answer.get<double>();
        const long long code = std::llround(v);
        if (v == static_cast<double>(code) && in_range(code)) return static_cast<int>(code);
        return std::nullopt;
    }
    if (!answer.is_string()) return std::nullopt;
    const std::string text = trim(answer.get<std::string>());
    if (!text.empty() && text.find_first_not_of("+-0123456789") == std::string::npos) {
        try {
            const long long code = std::stoll(text);
            if (in_range(code)) return static_cast<int>(code);
        } catch (...) {
        }
        return std::nullopt;
    }
    const std::string lower = to_lower(text);
    for (std::size_t i = 0; i < item.labels.size(); ++i) {
        if (to_lower(item.labels[i]) == lower) return item.min_code + static_cast<int>(i);
    }
    for (std::size_t i = 0; i < item.labels.size(); ++i) {
        if (!item.labels[i].empty() && lower.find(to_lower(item.labels[i])) != std::string::npos)
            return item.min_code + static_cast<int>(i);
    }
    static const std::map<std::string, int> numerals = {
        {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},
        {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}};
    if (auto it = numerals.find(lower); it != numerals.end() && in_range(it->second))
        return it->second;
    return std::nullopt;
}

// Immersive role-playing prompt: persona plus questionnaire, answered with a
// single JSON object of integer codes.
inline std::string render_survey_prompt(const Persona& persona,
                                        const std::vector<SurveyItem>& items) {
    std::string out =
        "Role: You are a middle-school student agent. Answer strictly from the perspective of "
        "this student persona.\n";
    out += "Persona: " + serialize_persona(persona) + "\n";
    out += "Questionnaire:\n";
    for (const auto& item : items) {
        out += "- " + item.id + ": " + item.prompt + " (options " +
               std::to_string(item.min_code) + "-" + std::to_string(item.max_code);
        if (!item.labels.empty()) {
            out += "; ";
            for (std::size_t i = 0; i < item.labels.size(); ++i) {
                if (i) out += ", ";
                out += std::to_string(item.min_code + static_cast<int>(i)) + "=" +
                       item.labels[i];
            }
        }
        out += ")\n";
    }
    out +=
        "Instructions:\n"
        "1. Stay fully in character and keep answers consistent with the persona.\n"
        "2. For each item, choose exactly one option.\n"
        "3. Output a single JSON object with integer codes.\n"
        "Answer:";
    return out;
}

// ---------------------------------------------------------------------------
// Shadow-survey execution
// ---------------------------------------------------------------------------

struct ShadowSurveyResult {
    // codes[a][i]: agent a's coded answer to item i (missing when invalid)
    std::vector<std::vector<std::optional<int>>> codes;
    std::size_t rerequested_agents = 0;
    std::size_t invalid_answers = 0;  // answers left missing after the retry
    std::size_t backend_failures = 0;
};

inline ShadowSurveyResult shadow_survey(const std::vector<Persona>& agents,
                                        const std::vector<std::optional<int>>& cohort_cells,
                                        const std::vector<SurveyItem>& items, Backend& backend) {
    if (agents.size() != cohort_cells.size())
        throw std::invalid_argument("shadow_survey: agent/cohort size mismatch");
    ShadowSurveyResult out;
    out.codes.assign(agents.size(),
                     std::vector<std::optional<int>>(items.size(), std::nullopt));

    SurveyContext base_ctx;
    for (const auto& item : items)
        base_ctx.items.push_back(SurveyItemRef{item.id, item.min_code, item.max_code});

    for (std::size_t a = 0; a < agents.size(); ++a) {
        CompletionRequest req;
        req.role = Role::Validator;  // unused by survey handling
        req.prompt = render_survey_prompt(agents[a], items);
        req.request_id = "survey:" + agents[a].id;
        req.survey = base_ctx;
        req.survey->cohort_cell = cohort_cells[a].value_or(0);

        auto attempt = [&](int retry) -> bool {
            req.retry = retry;
            std::string text;
            try {
                text = backend.complete(req);
            } catch (const BackendError&) {
                ++out.backend_failures;
                return true;  // permanent for this agent
            }
            json doc;
            try {
                doc = json::parse(trim(text));
            } catch (const std::exception&) {
                return false;
            }
            if (!doc.is_object()) return false;
            bool all_valid = true;
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (!doc.contains(items[i].id)) {
                    all_valid = false;
                    continue;
                }
                auto code = map_answer(items[i], doc.at(items[i].id));
                if (code) out.codes[a][i] = code;
                else all_valid = false;
            }
            return all_valid;
        };

        if (!attempt(0)) {
            ++out.rerequested_agents;
            attempt(1);  // re-request once, then leave gaps missing
        }
        for (std::size_t i = 0; i < items.size(); ++i)
            if (!out.codes[a][i]) ++out.invalid_answers;
    }
    return out;
}

// Agent-side construct scoring over coded answers (same aggregation rules as
// the human side).
inline MaybeColumn agent_construct_scores(const ShadowSurveyResult& responses,
                                          const std::vector<SurveyItem>& items,
                                          const ConstructSpec& spec) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < items.size(); ++i) index[items[i].id] = i;
    MaybeColumn out(responses.codes.size());
    for (std::size_t a = 0; a < responses.codes.size(); ++a) {
        StudentRecord record;
        for (const auto& id : spec.items) {
            auto it = index.find(id);
            if (it == index.end()) continue;
            const auto& code = responses.codes[a][it->second];
            if (code) record.items[id] = static_cast<double>(*code);
        }
        out[a] = construct_score(spec, record);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Consistency metrics
// ---------------------------------------------------------------------------

struct TargetConsistency {
    std::string target;
    std::string label;
    std::optional<double> spearman_rho;
    std::optional<double> pearson_r;
    std::optional<double> p_rho;
    std::size_t paired_cells = 0;
    double human_min = 0.0, human_max = 0.0;
    double agent_min = 0.0, agent_max = 0.0;
    std::string note;  // exclusion reason when correlations are undefined
};

inline TargetConsistency consistency_for_target(const std::string& target,
                                                const std::string& label,
                                                const CohortVector& human,
                                                const CohortVector& agent,
                                                std::size_t permutation_trials,
                                                std::uint64_t seed) {
    TargetConsistency out;
    out.target = target;
    out.label = label;
    std::vector<double> x, y;
    bool first = true;
    for (int c = 0; c < kCohortCount; ++c) {
        const auto& h = human.means[static_cast<std::size_t>(c)];
        const auto& a = agent.means[static_cast<std::size_t>(c)];
        if (!h || !a) continue;
        x.push_back(*h);
        y.push_back(*a);
        if (first) {
            out.human_min = out.human_max = *h;
            out.agent_min = out.agent_max = *a;
            first = false;
        } else {
            out.human_min = std::min(out.human_min, *h);
            out.human_max = std::max(out.human_max, *h);
            out.agent_min = std::min(out.agent_min, *a);
            out.agent_max = std::max(out.agent_max, *a);
        }
    }
    out.paired_cells = x.size();
    if (x.size() < 2) {
        out.note = "excluded: fewer than two paired cohorts";
        return out;
    }
    out.pearson_r = pearson(x, y);
    out.spearman_rho = spearman(x, y);
    if (!out.pearson_r || !out.spearman_rho) {
        out.note = "undefined: zero variance on one side";
        return out;
    }
    out.p_rho = spearman_permutation_p(x, y, permutation_trials,
                                       mix_seed(seed, fnv1a64(target)));
    return out;
}

inline std::string consistency_csv(const std::vector<TargetConsistency>& rows) {
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return std::string(buf);
    };
    auto range = [](double lo, double hi) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.2f-%.2f", lo, hi);
        return std::string(buf);
    };
    std::string out = csv_row({"target", "label", "spearman_rho", "pearson_r", "p_rho",
                               "paired_cells", "human_mean_range", "agent_mean_range", "note"});
    for (const auto& r : rows) {
        out += csv_row({r.target, r.label, fmt(r.spearman_rho), fmt(r.pearson_r), fmt(r.p_rho),
                        std::to_string(r.paired_cells), range(r.human_min, r.human_max),
                        range(r.agent_min, r.agent_max), r.note});
    }
    return out;
}

// Delta mode for baseline comparisons: per-target (A - B).
inline std::string consistency_delta_csv(const std::vector<TargetConsistency>& a,
                                         const std::vector<TargetConsistency>& b) {
    std::map<std::string, const TargetConsistency*> index;
    for (const auto& r : b) index[r.target] = &r;
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return std::string(buf);
    };
    std::string out = csv_row({"target", "label", "rho_a", "rho_b", "delta_rho", "r_a", "r_b",
                               "delta_r"});
    for (const auto& ra : a) {
        auto it = index.find(ra.target);
        if (it == index.end()) {
            out += csv_row({ra.target, ra.label, fmt(ra.spearman_rho), "NA", "NA",
                            fmt(ra.pearson_r), "NA", "NA"});
            continue;
        }
        const auto& rb = *it->second;
        std::optional<double> drho, dr;
        if (ra.spearman_rho && rb.spearman_rho) drho = *ra.spearman_rho - *rb.spearman_rho;
        if (ra.pearson_r && rb.pearson_r) dr = *ra.pearson_r - *rb.pearson_r;
        out += csv_row({ra.target, ra.label, fmt(ra.spearman_rho), fmt(rb.spearman_rho),
                        fmt(drho), fmt(ra.pearson_r), fmt(rb.pearson_r), fmt(dr)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Survey CSV ingestion (schema-driven; restricted microdata never ships with
// the repo, only a column-mapping file describing it)
// ---------------------------------------------------------------------------

struct ColumnMap {
    std::map<std::string, std::string> columns;  // canonical id -> csv header
    std::set<std::string> missing_markers = {"", "NA", "na", ".", "-9", "-99"};
    std::string filter_column;  // optional row filter (e.g. the grade field)
    std::string filter_value;
    std::string male_code = "1";  // numeric gender coding varies per survey
    std::string female_code = "2";

    std::string resolve(const std::string& canonical) const {
        auto it = columns.find(canonical);
        return it == columns.end() ? canonical : it->second;
    }
};

inline ColumnMap load_column_map(const TomlTable& t) {
    ColumnMap map;
    if (const auto* cols = t.find_table("columns")) {
        for (const auto& [k, v] : cols->values) map.columns[k] = v.as_string();
    }
    if (const auto* miss = t.find_table("missing")) {
        auto markers = miss->get_string_array("markers");
        if (!markers.empty())
            map.missing_markers = std::set<std::string>(markers.begin(), markers.end());
    }
    if (const auto* filter = t.find_table("filter")) {
        map.filter_column = filter->get_string("column", "");
        map.filter_value = filter->get_string("value", "");
    }
    if (const auto* gender = t.find_table("gender_codes")) {
        map.male_code = gender->get_string("male", map.male_code);
        map.female_code = gender->get_string("female", map.female_code);
    }
    return map;
}

// Reads rows into StudentRecords; every numeric-looking cell is stored under
// its CSV header name, and canonical names from the column map are stored as
// aliases.
inline std::vector<StudentRecord> load_student_records(const CsvTable& csv,
                                                       const ColumnMap& map) {
    std::vector<StudentRecord> out;
    std::optional<std::size_t> filter_idx;
    if (!map.filter_column.empty())
        filter_idx = csv.column_index(map.resolve(map.filter_column));

    std::map<std::size_t, std::vector<std::string>> canonical_by_column;
    for (const auto& [canonical, header] : map.columns) {
        if (csv.has_column(header))
            canonical_by_column[csv.column_index(header)].push_back(canonical);
    }
    const std::size_t gender_idx =
        csv.has_column(map.resolve("gender")) ? csv.column_index(map.resolve("gender"))
                                              : static_cast<std::size_t>(-1);
    const std::size_t country_idx =
        csv.has_column(map.resolve("country")) ? csv.column_index(map.resolve("country"))
                                               : static_cast<std::size_t>(-1);

    for (const auto& row : csv.rows) {
        if (filter_idx && (*filter_idx >= row.size() || trim(row[*filter_idx]) !=
                                                            map.filter_value))
            continue;
        StudentRecord record;
        for (std::size_t i = 0; i < csv.header.size() && i < row.size(); ++i) {
            const std::string cell = trim(row[i]);
            if (map.missing_markers.count(cell)) continue;
            if (i == country_idx) record.country = cell;
            char* end = nullptr;
            const double value = std::strtod(cell.c_str(), &end);
            const bool numeric = end && *end == '\0' && end != cell.c_str();
            if (!numeric) continue;
            record.items[csv.header[i]] = value;
            auto aliases = canonical_by_column.find(i);
            if (aliases != canonical_by_column.end())
                for (const auto& canonical : aliases->second) record.items[canonical] = value;
        }
        if (gender_idx != static_cast<std::size_t>(-1) && gender_idx < row.size()) {
            const std::string cell = trim(row[gender_idx]);
            if (!map.missing_markers.count(cell)) {
                if (auto g = parse_gender(cell)) record.gender = g;
                else if (cell == map.male_code) record.gender = Gender::Male;
                else if (cell == map.female_code) record.gender = Gender::Female;
            }
        }
        out.push_back(std::move(record));
    }
    return out;
}

}  // namespace personagen
