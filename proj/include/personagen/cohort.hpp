#pragma once

// Cohort construction math shared by the survey-consistency pipelines:
// z-scores, tier slicing by empirical percentiles, CES-D risk, gender
// imputation, construct aggregation, cohort means, persona-side cohort
// assignment and quota sampling.
//
// Canonical cohort ordering (fixed on both the human and agent side):
// tiers High -> Poor, gender M -> F, risk high -> low, flattened row-major;
// cell = tier*4 + gender*2 + (high_risk ? 0 : 1).

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "personagen/lexicon.hpp"
#include "personagen/persona.hpp"
#include "personagen/util.hpp"

namespace personagen {

inline constexpr int kCohortCount = 16;

struct CohortKey {
    Tier tier = Tier::High;
    Gender gender = Gender::Male;
    bool high_risk = false;

    bool operator==(const CohortKey&) const = default;
};

inline int cohort_cell(const CohortKey& key) {
    return static_cast<int>(key.tier) * 4 + static_cast<int>(key.gender) * 2 +
           (key.high_risk ? 0 : 1);
}

inline CohortKey cohort_from_cell(int cell) {
    CohortKey key;
    key.tier = static_cast<Tier>(cell / 4);
    key.gender = static_cast<Gender>((cell / 2) % 2);
    key.high_risk = (cell % 2) == 0;
    return key;
}

inline std::string cohort_label(int cell) {
    const CohortKey key = cohort_from_cell(cell);
    return std::string(tier_name(key.tier)) + "|" +
           (key.gender == Gender::Male ? "M" : "F") + "|" +
           (key.high_risk ? "high" : "low");
}

// ---------------------------------------------------------------------------
// Column math
// ---------------------------------------------------------------------------

using MaybeColumn = std::vector<std::optional<double>>;

// Standardize to mean 0, population variance 1 over non-missing entries;
// missing values propagate. Throws on fewer than two values or zero variance.
inline MaybeColumn zscore(const MaybeColumn& column) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : column) {
        if (!v) continue;
        sum += *v;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("zscore: fewer than two non-missing values");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : column)
        if (v) ss += (*v - mean) * (*v - mean);
    const double variance = ss / static_cast<double>(n);
    if (variance <= 0.0) throw std::invalid_argument("zscore: zero variance");
    const double sd = std::sqrt(variance);
    MaybeColumn out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i)
        if (column[i]) out[i] = (*column[i] - mean) / sd;
    return out;
}

struct TierAssignment {
    std::vector<Tier> tiers;
    bool degenerate = false;  // percentile thresholds collapsed (ties)
};

// Empirical-percentile tier slicing: High for the top 10% of the composite,
// Medium 10-30%, Low 30-50%, Poor bottom 50%. Nearest-rank thresholds with
// >= at the upper boundary (see percentile_threshold).
inline TierAssignment ceps_tiers(const std::vector<double>& z_total) {
    if (z_total.size() < 10)
        throw std::invalid_argument("ceps_tiers: fewer than 10 students");
    std::vector<double> sorted = z_total;
    std::sort(sorted.begin(), sorted.end());
    const double t90 = percentile_threshold(sorted, 0.9);
    const double t70 = percentile_threshold(sorted, 0.7);
    const double t50 = percentile_threshold(sorted, 0.5);
    TierAssignment out;
    out.degenerate = t90 == t50;
    out.tiers.reserve(z_total.size());
    for (double v : z_total) {
        if (v >= t90) out.tiers.push_back(Tier::High);
        else if (v >= t70) out.tiers.push_back(Tier::Medium);
        else if (v >= t50) out.tiers.push_back(Tier::Low);
        else out.tiers.push_back(Tier::Poor);
    }
    return out;
}

// High risk iff the CES-D sum is at or above the empirical 75th percentile.
inline std::vector<bool> cesd_risk(const std::vector<double>& cesd_sums) {
    if (cesd_sums.empty()) return {};
    std::vector<double> sorted = cesd_sums;
    std::sort(sorted.begin(), sorted.end());
    const double q75 = percentile_threshold(sorted, 0.75);
    std::vector<bool> out;
    out.reserve(cesd_sums.size());
    for (double v : cesd_sums) out.push_back(v >= q75);
    return out;
}

// Gender from mutually exclusive puberty indicators when the primary field is
// missing: F iff only the menarche item is answered, M iff only the nocturnal
// emission item is answered; ambiguous or empty records are dropped.
inline std::optional<Gender> impute_gender(std::optional<double> menarche_age,
                                           std::optional<double> emission_age) {
    if (menarche_age && !emission_age) return Gender::Female;
    if (emission_age && !menarche_age) return Gender::Male;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Construct aggregation
// ---------------------------------------------------------------------------

struct StudentRecord {
    std::map<std::string, double> items;  // item id -> numeric response
    std::optional<Gender> gender;
    std::string country;

    std::optional<double> item(const std::string& id) const {
        auto it = items.find(id);
        if (it == items.end()) return std::nullopt;
        return it->second;
    }
};

struct ConstructSpec {
    std::string id;
    std::string label;
    std::vector<std::string> items;
    enum class Aggregation { Sum, Mean } aggregation = Aggregation::Mean;
    std::set<std::string> reverse_coded;
    double scale_min = 1.0;
    double scale_max = 5.0;
};

// Reverse-coded items flip within the scale bounds, then sum or mean per
// spec; any missing constituent item excludes the student from the construct.
inline std::optional<double> construct_score(const ConstructSpec& spec,
                                             const StudentRecord& student) {
    double total = 0.0;
    for (const auto& id : spec.items) {
        auto v = student.item(id);
        if (!v) return std::nullopt;
        double value = *v;
        if (spec.reverse_coded.count(id)) value = spec.scale_min + spec.scale_max - value;
        total += value;
    }
    if (spec.items.empty()) return std::nullopt;
    if (spec.aggregation == ConstructSpec::Aggregation::Sum) return total;
    return total / static_cast<double>(spec.items.size());
}

// ---------------------------------------------------------------------------
// PISA variants
// ---------------------------------------------------------------------------

// Composite achievement: mean over the configured plausible-value columns;
// any missing PV excludes the student upstream.
inline std::optional<double> pisa_achievement(const StudentRecord& student,
                                              const std::vector<std::string>& pv_columns) {
    if (pv_columns.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& col : pv_columns) {
        auto v = student.item(col);
        if (!v) return std::nullopt;
        sum += *v;
    }
    return sum / static_cast<double>(pv_columns.size());
}

// Four achievement levels by within-region quartiles of the composite.
inline TierAssignment pisa_levels(const std::vector<double>& achievement) {
    if (achievement.size() < 4)
        throw std::invalid_argument("pisa_levels: region has fewer than 4 students");
    std::vector<double> sorted = achievement;
    std::sort(sorted.begin(), sorted.end());
    const double q75 = percentile_threshold(sorted, 0.75);
    const double q50 = percentile_threshold(sorted, 0.5);
    const double q25 = percentile_threshold(sorted, 0.25);
    TierAssignment out;
    out.degenerate = q75 == q25;
    for (double v : achievement) {
        if (v >= q75) out.tiers.push_back(Tier::High);
        else if (v >= q50) out.tiers.push_back(Tier::Medium);
        else if (v >= q25) out.tiers.push_back(Tier::Low);
        else out.tiers.push_back(Tier::Poor);
    }
    return out;
}

// High risk iff the construct z-score lies at or above the region's 75th
// percentile.
inline std::vector<bool> pisa_risk(const std::vector<double>& construct_z) {
    return cesd_risk(construct_z);  // same >= Q0.75 rule
}

// ---------------------------------------------------------------------------
// Cohort means
// ---------------------------------------------------------------------------

struct CohortVector {
    std::array<std::optional<double>, kCohortCount> means;
    std::array<std::size_t, kCohortCount> counts{};

    std::size_t populated() const {
        std::size_t n = 0;
        for (const auto& m : means)
            if (m) ++n;
        return n;
    }
};

// Unweighted mean per cohort over non-missing responses; empty cohorts stay
// missing (never zero).
inline CohortVector cohort_means(const MaybeColumn& responses,
                                 const std::vector<std::optional<int>>& cells) {
    if (responses.size() != cells.size())
        throw std::invalid_argument("cohort_means: column sizes differ");
    CohortVector out;
    // long double accumulation keeps the mean of identical values exact for
    // realistic cohort sizes, so tie structure survives on both sides
    std::array<long double, kCohortCount> sums{};
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i] || !cells[i]) continue;
        const int cell = *cells[i];
        if (cell < 0 || cell >= kCohortCount)
            throw std::invalid_argument("cohort_means: cell out of range");
        sums[static_cast<std::size_t>(cell)] += *responses[i];
        out.counts[static_cast<std::size_t>(cell)] += 1;
    }
    for (int c = 0; c < kCohortCount; ++c)
        if (out.counts[static_cast<std::size_t>(c)] > 0)
            out.means[static_cast<std::size_t>(c)] = static_cast<double>(
                sums[static_cast<std::size_t>(c)] /
                static_cast<long double>(out.counts[static_cast<std::size_t>(c)]));
    return out;
}

// ---------------------------------------------------------------------------
// Persona-side cohort assignment and sampling
// ---------------------------------------------------------------------------

enum class CohortParse { Ok, NoTier, NoGender, NoRisk };

struct PersonaCohort {
    std::optional<CohortKey> key;
    CohortParse status = CohortParse::Ok;
};

// Tier from the validated academic label, gender from the field, risk from
// the mental-health text under the shipped parsing rules. Personas whose
// three stratification variables cannot be stably parsed are excluded.
inline PersonaCohort persona_cohort(const Persona& p,
                                    const RiskRuleTable& rules = default_risk_rules()) {
    PersonaCohort out;
    const auto tier = p.tier();
    if (!tier) {
        out.status = CohortParse::NoTier;
        return out;
    }
    const auto gender = p.gender_value();
    if (!gender) {
        out.status = CohortParse::NoGender;
        return out;
    }
    const auto risk = extract_risk(p.mental_health_text, rules);
    if (!risk.parseable()) {
        out.status = CohortParse::NoRisk;
        return out;
    }
    out.key = CohortKey{*tier, *gender, risk.high(rules.threshold)};
    return out;
}

struct QuotaSampleResult {
    std::vector<std::size_t> indices;  // into the input population
    std::array<std::size_t, kCohortCount> sampled{};
    std::array<std::size_t, kCohortCount> shortfall{};
};

// Seeded uniform sample without replacement, per cohort; short cohorts take
// every member and report the shortfall.
inline QuotaSampleResult quota_sample(const std::vector<std::optional<int>>& cells,
                                      std::size_t per_cohort, std::uint64_t seed) {
    if (per_cohort < 1) throw std::invalid_argument("quota_sample: per_cohort must be >= 1");
    std::array<std::vector<std::size_t>, kCohortCount> members;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i]) continue;
        members[static_cast<std::size_t>(*cells[i])].push_back(i);
    }
    QuotaSampleResult out;
    for (int c = 0; c < kCohortCount; ++c) {
        auto& pool = members[static_cast<std::size_t>(c)];
        Rng rng(mix_seed(seed, 0xc0401u ^ static_cast<std::uint64_t>(c)));
        deterministic_shuffle(pool, rng);
        const std::size_t take = std::min(per_cohort, pool.size());
        std::vector<std::size_t> chosen(pool.begin(),
                                        pool.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(chosen.begin(), chosen.end());  // stable output order
        for (std::size_t idx : chosen) out.indices.push_back(idx);
        out.sampled[static_cast<std::size_t>(c)] = take;
        out.shortfall[static_cast<std::size_t>(c)] = per_cohort - take;
    }
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

}  // namespace personagen
