#pragma once

// End-to-end external evaluation pipelines.
//
// CEPS-style: derive tiers from z-scored subject totals (top 10% / 10-30% /
// 30-50% / bottom 50%), psychological risk from the CES-D sum (>= empirical
// 75th percentile), cross with gender into 16 cohorts, aggregate construct
// and focal-item means per cohort, run the matched shadow survey on quota-
// sampled persona agents, and correlate the 16-dimensional mean vectors.
//
// PISA-style: composite achievement as the mean of the configured plausible
// values, within-region quartile levels, risk from a pooled z-scored index at
// the region's top quartile, then the same cohort/correlation machinery per
// region and construct.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "personagen/survey.hpp"

namespace personagen {

inline ConstructSpec construct_from_toml(const TomlTable& t) {
    ConstructSpec spec;
    spec.id = t.at("id").as_string();
    spec.label = t.get_string("label", spec.id);
    spec.items = t.get_string_array("items");
    const std::string agg = t.get_string("aggregation", "mean");
    if (agg == "sum") spec.aggregation = ConstructSpec::Aggregation::Sum;
    else if (agg == "mean") spec.aggregation = ConstructSpec::Aggregation::Mean;
    else throw ConfigError("construct " + spec.id + ": unknown aggregation " + agg);
    spec.scale_min = t.get_double("scale_min", 1.0);
    spec.scale_max = t.get_double("scale_max", 5.0);
    for (const auto& r : t.get_string_array("reverse")) spec.reverse_coded.insert(r);
    return spec;
}

inline std::vector<ConstructSpec> load_construct_specs(const TomlTable& t,
                                                       const std::string& key) {
    std::vector<ConstructSpec> out;
    for (const auto& row : t.array_of_tables(key)) out.push_back(construct_from_toml(row));
    return out;
}

// ---------------------------------------------------------------------------
// CEPS-style evaluation
// ---------------------------------------------------------------------------

struct CepsConfig {
    std::size_t per_cohort = 200;
    std::uint64_t seed = 0;
    std::size_t permutation_trials = 10000;
    std::optional<int> persona_grade = 8;  // persona-side scope filter
    RiskRuleTable risk_rules = default_risk_rules();
};

struct CohortCounts {
    std::array<std::size_t, kCohortCount> cells{};
};

struct CepsResult {
    std::vector<TargetConsistency> targets;
    std::size_t admitted_students = 0;
    std::size_t dropped_students = 0;
    std::size_t imputed_gender = 0;
    bool degenerate_tiers = false;
    CohortCounts human_cohorts;
    std::size_t eligible_personas = 0;
    std::size_t excluded_personas = 0;
    CohortCounts agent_cohorts;
    std::array<std::size_t, kCohortCount> agent_shortfall{};
    ShadowSurveyResult responses;
};

namespace detail {

inline const std::vector<std::string>& cesd_item_ids() {
    static const std::vector<std::string> ids = {"d_1", "d_2", "d_3", "d_4", "d_5",
                                                 "d_6", "d_7", "d_8", "d_9", "d_10"};
    return ids;
}

}  // namespace detail

// Admission + cohort construction on the human side. Students missing any key
// field (subject scores, CES-D items, gender even after puberty imputation)
// are dropped.
struct CepsCohortData {
    std::vector<StudentRecord> admitted;
    std::vector<std::optional<int>> cells;
    std::vector<Tier> tiers;
    std::vector<bool> risk;
    std::size_t dropped = 0;
    std::size_t imputed_gender = 0;
    bool degenerate = false;
};

inline CepsCohortData ceps_cohorts(const std::vector<StudentRecord>& records) {
    CepsCohortData data;
    for (const auto& r : records) {
        StudentRecord student = r;
        if (!student.gender) {
            auto imputed = impute_gender(student.item("menarche_age"),
                                         student.item("emission_age"));
            if (imputed) {
                student.gender = imputed;
                ++data.imputed_gender;
            }
        }
        bool complete = student.gender.has_value() && student.item("s_chn") &&
                        student.item("s_mat") && student.item("s_eng");
        for (const auto& id : detail::cesd_item_ids())
            if (!student.item(id)) complete = false;
        if (!complete) {
            ++data.dropped;
            continue;
        }
        data.admitted.push_back(std::move(student));
    }
    if (data.admitted.size() < 10)
        throw std::runtime_error("ceps: fewer than 10 admitted students");

    auto column = [&](const char* id) {
        MaybeColumn col(data.admitted.size());
        for (std::size_t i = 0; i < data.admitted.size(); ++i)
            col[i] = data.admitted[i].item(id);
        return col;
    };
    const auto z_chn = zscore(column("s_chn"));
    const auto z_mat = zscore(column("s_mat"));
    const auto z_eng = zscore(column("s_eng"));
    std::vector<double> z_total(data.admitted.size());
    for (std::size_t i = 0; i < data.admitted.size(); ++i)
        z_total[i] = *z_chn[i] + *z_mat[i] + *z_eng[i];
    auto tiers = ceps_tiers(z_total);
    data.degenerate = tiers.degenerate;
    data.tiers = tiers.tiers;

    std::vector<double> cesd(data.admitted.size(), 0.0);
    for (std::size_t i = 0; i < data.admitted.size(); ++i)
        for (const auto& id : detail::cesd_item_ids()) cesd[i] += *data.admitted[i].item(id);
    data.risk = cesd_risk(cesd);

    data.cells.resize(data.admitted.size());
    for (std::size_t i = 0; i < data.admitted.size(); ++i)
        data.cells[i] =
            cohort_cell(CohortKey{data.tiers[i], *data.admitted[i].gender, data.risk[i]});
    return data;
}

// Persona-side scope filter + cohort parse + quota sampling. Returns the
// sampled agents with their cohort cells.
struct AgentSample {
    std::vector<Persona> agents;
    std::vector<std::optional<int>> cells;
    std::size_t eligible = 0;
    std::size_t excluded = 0;
    CohortCounts cohorts;
    std::array<std::size_t, kCohortCount> shortfall{};
};

inline AgentSample sample_agents(const std::vector<Persona>& corpus,
                                 std::optional<int> grade_filter, std::size_t per_cohort,
                                 std::uint64_t seed, const RiskRuleTable& rules) {
    AgentSample out;
    std::vector<const Persona*> scope;
    std::vector<std::optional<int>> cells;
    for (const auto& p : corpus) {
        if (grade_filter && p.grade_number() != *grade_filter) continue;
        auto cohort = persona_cohort(p, rules);
        if (!cohort.key) {
            ++out.excluded;
            continue;
        }
        ++out.eligible;
        scope.push_back(&p);
        cells.emplace_back(cohort_cell(*cohort.key));
    }
    auto sample = quota_sample(cells, per_cohort, seed);
    out.shortfall = sample.shortfall;
    for (std::size_t idx : sample.indices) {
        out.agents.push_back(*scope[idx]);
        out.cells.push_back(cells[idx]);
        out.cohorts.cells[static_cast<std::size_t>(*cells[idx])]++;
    }
    return out;
}

inline CepsResult ceps_evaluate(const std::vector<StudentRecord>& records,
                                const std::vector<Persona>& corpus,
                                const std::vector<ConstructSpec>& targets,
                                const std::vector<SurveyItem>& items, Backend& backend,
                                const CepsConfig& cfg = {}) {
    CepsResult result;
    auto data = ceps_cohorts(records);
    result.admitted_students = data.admitted.size();
    result.dropped_students = data.dropped;
    result.imputed_gender = data.imputed_gender;
    result.degenerate_tiers = data.degenerate;
    for (const auto& cell : data.cells)
        if (cell) result.human_cohorts.cells[static_cast<std::size_t>(*cell)]++;

    auto agents = sample_agents(corpus, cfg.persona_grade, cfg.per_cohort, cfg.seed,
                                cfg.risk_rules);
    result.eligible_personas = agents.eligible;
    result.excluded_personas = agents.excluded;
    result.agent_cohorts = agents.cohorts;
    result.agent_shortfall = agents.shortfall;

    result.responses = shadow_survey(agents.agents, agents.cells, items, backend);

    for (const auto& target : targets) {
        MaybeColumn human_scores(data.admitted.size());
        for (std::size_t i = 0; i < data.admitted.size(); ++i)
            human_scores[i] = construct_score(target, data.admitted[i]);
        const auto human = cohort_means(human_scores, data.cells);
        const auto agent_scores = agent_construct_scores(result.responses, items, target);
        const auto agent = cohort_means(agent_scores, agents.cells);
        result.targets.push_back(consistency_for_target(
            target.id, target.label, human, agent, cfg.permutation_trials, cfg.seed));
    }
    return result;
}

// ---------------------------------------------------------------------------
// PISA-style evaluation
// ---------------------------------------------------------------------------

struct PisaSpec {
    std::map<std::string, std::string> country_to_region;
    std::vector<std::string> achievement_columns;
    std::string risk_construct;
};

inline PisaSpec load_pisa_spec(const TomlTable& t) {
    PisaSpec spec;
    if (const auto* regions = t.find_table("regions")) {
        for (const auto& [country, region] : regions->values)
            spec.country_to_region[country] = region.as_string();
    }
    if (spec.country_to_region.empty()) throw ConfigError("pisa spec: no region mapping");
    spec.achievement_columns = t.table("achievement").get_string_array("columns");
    if (spec.achievement_columns.empty())
        throw ConfigError("pisa spec: no achievement columns");
    spec.risk_construct = t.table("risk").at("construct").as_string();
    return spec;
}

struct PisaConstruct {
    std::string id;
    std::string label;
    std::string column;                    // OECD index column on the human side
    std::vector<std::string> shadow_items;  // item ids answered by agents
};

inline std::vector<PisaConstruct> load_pisa_constructs(const TomlTable& t) {
    std::vector<PisaConstruct> out;
    for (const auto& row : t.array_of_tables("construct")) {
        PisaConstruct c;
        c.id = row.at("id").as_string();
        c.label = row.get_string("label", c.id);
        c.column = row.get_string("column", c.id);
        c.shadow_items = row.get_string_array("items");
        if (c.shadow_items.empty())
            throw ConfigError("pisa construct " + c.id + ": no shadow items");
        out.push_back(std::move(c));
    }
    if (out.empty()) throw ConfigError("pisa constructs: none defined");
    return out;
}

struct PisaRegionResult {
    std::string region;
    std::size_t students = 0;
    std::vector<TargetConsistency> targets;
    std::array<std::size_t, kCohortCount> agent_shortfall{};
};

struct PisaResult {
    std::vector<PisaRegionResult> regions;
    std::size_t admitted_students = 0;
    std::size_t dropped_students = 0;
    std::size_t eligible_personas = 0;
    std::size_t excluded_personas = 0;
};

struct PisaConfig {
    std::size_t per_cohort = 200;
    std::uint64_t seed = 0;
    std::size_t permutation_trials = 10000;
    std::optional<int> persona_grade;  // PISA scope is age-based; default: all
    RiskRuleTable risk_rules = default_risk_rules();
};

inline PisaResult pisa_evaluate(const std::vector<StudentRecord>& records,
                                const std::vector<Persona>& corpus, const PisaSpec& spec,
                                const std::vector<PisaConstruct>& constructs,
                                const std::vector<SurveyItem>& items, Backend& backend,
                                const PisaConfig& cfg = {}) {
    PisaResult result;

    // admission: region known, every construct column and PV present, gender
    struct Admitted {
        const StudentRecord* record;
        std::string region;
        double achievement;
    };
    std::vector<Admitted> admitted;
    for (const auto& r : records) {
        auto region = spec.country_to_region.find(r.country);
        if (region == spec.country_to_region.end() || !r.gender) {
            ++result.dropped_students;
            continue;
        }
        auto achievement = pisa_achievement(r, spec.achievement_columns);
        bool complete = achievement.has_value() && r.item(spec.risk_construct).has_value();
        for (const auto& c : constructs)
            if (!r.item(c.column)) complete = false;
        if (!complete) {
            ++result.dropped_students;
            continue;
        }
        admitted.push_back(Admitted{&r, region->second, *achievement});
    }
    result.admitted_students = admitted.size();
    if (admitted.empty()) throw std::runtime_error("pisa: no admitted students");

    // pooled z-normalisation per construct column (directionality preserved)
    std::map<std::string, MaybeColumn> pooled_z;
    {
        std::set<std::string> columns = {spec.risk_construct};
        for (const auto& c : constructs) columns.insert(c.column);
        for (const auto& col : columns) {
            MaybeColumn raw(admitted.size());
            for (std::size_t i = 0; i < admitted.size(); ++i)
                raw[i] = admitted[i].record->item(col);
            pooled_z[col] = zscore(raw);
        }
    }

    std::map<std::string, std::vector<std::size_t>> by_region;
    for (std::size_t i = 0; i < admitted.size(); ++i)
        by_region[admitted[i].region].push_back(i);

    // combined shadow item list: every construct's items, deduplicated
    std::vector<SurveyItem> shadow_items;
    {
        std::set<std::string> wanted;
        for (const auto& c : constructs)
            for (const auto& id : c.shadow_items) wanted.insert(id);
        for (const auto& item : items)
            if (wanted.count(item.id)) shadow_items.push_back(item);
        if (shadow_items.size() != wanted.size())
            throw ConfigError("pisa: shadow item list does not cover every construct item");
    }

    for (const auto& [region, member_idx] : by_region) {
        PisaRegionResult block;
        block.region = region;
        block.students = member_idx.size();

        // within-region quartile levels and top-quartile risk
        std::vector<double> achievement;
        std::vector<double> risk_z;
        achievement.reserve(member_idx.size());
        risk_z.reserve(member_idx.size());
        for (std::size_t i : member_idx) {
            achievement.push_back(admitted[i].achievement);
            risk_z.push_back(*pooled_z[spec.risk_construct][i]);
        }
        const auto levels = pisa_levels(achievement);
        const auto risk = pisa_risk(risk_z);

        std::vector<std::optional<int>> cells(member_idx.size());
        for (std::size_t k = 0; k < member_idx.size(); ++k)
            cells[k] = cohort_cell(CohortKey{levels.tiers[k],
                                             *admitted[member_idx[k]].record->gender, risk[k]});

        // matched agent population for this region
        auto agents = sample_agents(corpus, cfg.persona_grade, cfg.per_cohort,
                                    mix_seed(cfg.seed, fnv1a64(region)), cfg.risk_rules);
        result.eligible_personas = agents.eligible;
        result.excluded_personas = agents.excluded;
        block.agent_shortfall = agents.shortfall;
        const auto responses = shadow_survey(agents.agents, agents.cells, shadow_items, backend);

        for (const auto& construct : constructs) {
            MaybeColumn human_scores(member_idx.size());
            for (std::size_t k = 0; k < member_idx.size(); ++k)
                human_scores[k] = pooled_z[construct.column][member_idx[k]];
            const auto human = cohort_means(human_scores, cells);

            ConstructSpec agent_spec;
            agent_spec.id = construct.id;
            agent_spec.label = construct.label;
            agent_spec.items = construct.shadow_items;
            agent_spec.aggregation = ConstructSpec::Aggregation::Mean;
            double lo = 1.0, hi = 5.0;
            for (const auto& item : shadow_items)
                if (!construct.shadow_items.empty() && item.id == construct.shadow_items[0]) {
                    lo = item.min_code;
                    hi = item.max_code;
                }
            agent_spec.scale_min = lo;
            agent_spec.scale_max = hi;
            for (const auto& item : shadow_items)
                if (item.reverse) agent_spec.reverse_coded.insert(item.id);
            const auto agent_scores = agent_construct_scores(responses, shadow_items, agent_spec);
            const auto agent = cohort_means(agent_scores, agents.cells);

            block.targets.push_back(consistency_for_target(
                construct.id, construct.label, human, agent, cfg.permutation_trials,
                mix_seed(cfg.seed, fnv1a64(region))));
        }
        result.regions.push_back(std::move(block));
    }
    return result;
}

inline std::string pisa_result_csv(const PisaResult& result) {
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return std::string(buf);
    };
    std::string out = csv_row({"region", "construct", "label", "spearman_rho", "pearson_r",
                               "p_rho", "paired_cells", "note"});
    for (const auto& block : result.regions) {
        for (const auto& t : block.targets) {
            out += csv_row({block.region, t.target, t.label, fmt(t.spearman_rho),
                            fmt(t.pearson_r), fmt(t.p_rho), std::to_string(t.paired_cells),
                            t.note});
        }
    }
    return out;
}

}  // namespace personagen
