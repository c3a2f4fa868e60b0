#pragma once

// Quota scheduling: converts target marginal distributions over grade, gender,
// academic level and subject cluster into an explicit slot list via stratified
// sampling. Joint cell quotas are the product of marginals scaled to N and
// integerized by largest-remainder apportionment (ties broken by cell order);
// slots are emitted in seeded-shuffled order. Everything here is a pure
// function of (targets, seed).

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "personagen/config.hpp"
#include "personagen/persona.hpp"
#include "personagen/util.hpp"

namespace personagen {

inline constexpr int kCellCount = kGradeCount * kGenderCount * kClusterCount * kTierCount;

struct TargetDistribution {
    std::vector<double> grade = std::vector<double>(kGradeCount, 1.0 / kGradeCount);
    std::vector<double> gender = std::vector<double>(kGenderCount, 1.0 / kGenderCount);
    std::vector<double> academic_level = std::vector<double>(kTierCount, 1.0 / kTierCount);
    std::vector<double> subject_cluster = std::vector<double>(kClusterCount, 1.0 / kClusterCount);
    std::int64_t count = 0;
    std::uint64_t seed = 0;

    static TargetDistribution uniform(std::int64_t n, std::uint64_t seed) {
        TargetDistribution t;
        t.count = n;
        t.seed = seed;
        return t;
    }

    void validate() const {
        if (count < 1) throw std::invalid_argument("targets: count must be >= 1");
        auto check = [](const std::vector<double>& table, std::size_t size, const char* name) {
            if (table.size() != size)
                throw std::invalid_argument(std::string("targets: wrong table size for ") + name);
            double sum = 0.0;
            for (double p : table) {
                if (p < 0.0)
                    throw std::invalid_argument(std::string("targets: negative probability in ") +
                                                name);
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument(std::string("targets: table does not sum to 1: ") +
                                            name);
        };
        check(grade, kGradeCount, "grade");
        check(gender, kGenderCount, "gender");
        check(academic_level, kTierCount, "academic_level");
        check(subject_cluster, kClusterCount, "subject_cluster");
    }
};

// Targets file: count/seed at top level, probability tables under [targets];
// absent tables default to uniform.
inline TargetDistribution load_targets(const TomlTable& t) {
    TargetDistribution out;
    out.count = t.get_int("count", 0);
    out.seed = static_cast<std::uint64_t>(t.get_int("seed", 0));
    if (const auto* tables = t.find_table("targets")) {
        auto maybe = [&](const char* key, std::vector<double>& into) {
            auto v = tables->get_double_array(key);
            if (!v.empty()) into = v;
        };
        maybe("grade", out.grade);
        maybe("gender", out.gender);
        maybe("academic_level", out.academic_level);
        maybe("subject_cluster", out.subject_cluster);
    }
    out.validate();
    return out;
}

inline TargetDistribution load_targets_file(const std::string& path) {
    return load_targets(load_toml_file(path));
}

struct Slot {
    std::int64_t index = 0;
    SamplingConstraint constraint;
};

// Flat joint-cell index in (grade, gender, cluster, tier) lexicographic order.
inline int cell_index(const SamplingConstraint& c) {
    return ((((c.grade - 1) * kGenderCount + static_cast<int>(c.gender)) * kClusterCount +
             static_cast<int>(c.cluster)) *
            kTierCount) +
           static_cast<int>(c.tier);
}

inline SamplingConstraint cell_constraint(int cell) {
    SamplingConstraint c;
    c.tier = static_cast<Tier>(cell % kTierCount);
    cell /= kTierCount;
    c.cluster = static_cast<SubjectCluster>(cell % kClusterCount);
    cell /= kClusterCount;
    c.gender = static_cast<Gender>(cell % kGenderCount);
    cell /= kGenderCount;
    c.grade = cell + 1;
    return c;
}

inline std::string cell_name(int cell) {
    const SamplingConstraint c = cell_constraint(cell);
    return grade_name(c.grade) + "|" + gender_name(c.gender) + "|" + cluster_name(c.cluster) +
           "|" + tier_name(c.tier);
}

struct Schedule {
    std::vector<Slot> slots;
    std::array<std::int64_t, kCellCount> cell_counts{};
    std::uint64_t seed = 0;
};

// Hamilton / largest-remainder apportionment of n over weights; ties broken
// by index order. Guarantees |quota[i] - n*w[i]| < 1 for every cell.
inline std::vector<std::int64_t> largest_remainder(const std::vector<double>& weights,
                                                   std::int64_t n) {
    const std::size_t k = weights.size();
    std::vector<std::int64_t> quota(k, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    remainders.reserve(k);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double exact = static_cast<double>(n) * weights[i];
        const double fl = std::floor(exact);
        quota[i] = static_cast<std::int64_t>(fl);
        assigned += quota[i];
        remainders.emplace_back(exact - fl, i);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first > b.first;
                  return a.second < b.second;
              });
    std::int64_t leftover = n - assigned;
    for (std::size_t i = 0; leftover > 0 && i < remainders.size(); ++i, --leftover)
        quota[remainders[i].second] += 1;
    return quota;
}

inline Schedule build_schedule(const TargetDistribution& t) {
    t.validate();
    std::vector<double> joint(kCellCount, 0.0);
    for (int g = 0; g < kGradeCount; ++g)
        for (int s = 0; s < kGenderCount; ++s)
            for (int c = 0; c < kClusterCount; ++c)
                for (int l = 0; l < kTierCount; ++l) {
                    const int idx = ((g * kGenderCount + s) * kClusterCount + c) * kTierCount + l;
                    joint[idx] =
                        t.grade[g] * t.gender[s] * t.subject_cluster[c] * t.academic_level[l];
                }
    const auto quota = largest_remainder(joint, t.count);

    Schedule schedule;
    schedule.seed = t.seed;
    schedule.slots.reserve(static_cast<std::size_t>(t.count));
    for (int cell = 0; cell < kCellCount; ++cell) {
        schedule.cell_counts[cell] = quota[cell];
        for (std::int64_t i = 0; i < quota[cell]; ++i)
            schedule.slots.push_back(Slot{0, cell_constraint(cell)});
    }
    Rng rng(mix_seed(t.seed, 0x5c4edu));
    deterministic_shuffle(schedule.slots, rng);
    for (std::size_t i = 0; i < schedule.slots.size(); ++i)
        schedule.slots[i].index = static_cast<std::int64_t>(i);
    return schedule;
}

// Plan file: one slot per line.
inline std::string slot_to_line(const Slot& s) {
    json out = json::object();
    out["index"] = s.index;
    out["grade"] = grade_name(s.constraint.grade);
    out["gender"] = gender_name(s.constraint.gender);
    out["subject_cluster"] = cluster_name(s.constraint.cluster);
    out["target_academic_level"] = tier_name(s.constraint.tier);
    return out.dump();
}

inline Slot slot_from_line(const std::string& line) {
    const json doc = json::parse(line);
    Slot s;
    s.index = doc.at("index").get<std::int64_t>();
    auto grade = parse_grade(doc.at("grade").get<std::string>());
    auto gender = parse_gender(doc.at("gender").get<std::string>());
    auto cluster = parse_cluster(doc.at("subject_cluster").get<std::string>());
    auto tier = parse_tier_word(doc.at("target_academic_level").get<std::string>());
    if (!grade || !gender || !cluster || !tier)
        throw std::runtime_error("bad plan line: " + line);
    s.constraint = SamplingConstraint{*grade, *gender, *cluster, *tier};
    return s;
}

// ---------------------------------------------------------------------------
// Distribution diagnostics
// ---------------------------------------------------------------------------

enum class MarginalVariable { Grade, Gender, AcademicLevel };

struct EmpiricalDistribution {
    std::vector<double> probs;     // zero-count categories included
    std::size_t considered = 0;    // personas with a recognized value
    std::size_t unrecognized = 0;  // personas skipped (unparseable value)
};

inline EmpiricalDistribution empirical_distribution(const std::vector<Persona>& corpus,
                                                    MarginalVariable variable) {
    if (corpus.empty()) throw std::invalid_argument("empirical_distribution: empty corpus");
    std::size_t k = 0;
    switch (variable) {
        case MarginalVariable::Grade: k = kGradeCount; break;
        case MarginalVariable::Gender: k = kGenderCount; break;
        case MarginalVariable::AcademicLevel: k = kTierCount; break;
    }
    std::vector<std::int64_t> counts(k, 0);
    EmpiricalDistribution out;
    for (const auto& p : corpus) {
        int idx = -1;
        switch (variable) {
            case MarginalVariable::Grade:
                if (auto g = p.grade_number()) idx = *g - 1;
                break;
            case MarginalVariable::Gender:
                if (auto g = p.gender_value()) idx = static_cast<int>(*g);
                break;
            case MarginalVariable::AcademicLevel:
                if (auto t = p.tier()) idx = static_cast<int>(*t);
                break;
        }
        if (idx < 0) {
            ++out.unrecognized;
            continue;
        }
        ++counts[static_cast<std::size_t>(idx)];
        ++out.considered;
    }
    if (out.considered == 0)
        throw std::invalid_argument("empirical_distribution: no recognizable values");
    out.probs.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        out.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(out.considered);
    return out;
}

// KL(P'||Q') in nats after symmetric Laplace smoothing. Both tables are
// probability tables; `total` is the implied sample mass behind them, so a
// pseudo-count of `alpha` per category smooths as (p*total + alpha) /
// (total + K*alpha). With the default total=1 the tables are smoothed as unit
// masses; pass the corpus size to make smoothing vanish at scale.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                            double alpha, double total = 1.0) {
    if (p.size() != q.size() || p.empty())
        throw std::invalid_argument("kl_divergence: mismatched supports");
    if (alpha <= 0.0) throw std::invalid_argument("kl_divergence: alpha must be positive");
    if (total <= 0.0) throw std::invalid_argument("kl_divergence: total must be positive");
    const double k = static_cast<double>(p.size());
    const double denom = total + k * alpha;
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double ps = (p[i] * total + alpha) / denom;
        const double qs = (q[i] * total + alpha) / denom;
        kl += ps * std::log(ps / qs);
    }
    return kl < 0.0 ? 0.0 : kl;  // clamp tiny negative rounding residue
}

struct PlanMatchRates {
    double grade = 0.0;
    double gender = 0.0;
    double academic_level = 0.0;
    std::size_t considered = 0;
    std::size_t missing_linkage = 0;
};

// Fraction of personas whose realized labels equal the scheduled ones, per
// variable; personas without slot linkage are excluded and counted.
inline PlanMatchRates plan_match_rate(const std::vector<Persona>& corpus,
                                      const std::vector<Slot>& slots) {
    PlanMatchRates out;
    std::size_t grade_hits = 0, gender_hits = 0, tier_hits = 0;
    for (const auto& p : corpus) {
        if (!p.slot || *p.slot < 0 || static_cast<std::size_t>(*p.slot) >= slots.size()) {
            ++out.missing_linkage;
            continue;
        }
        const SamplingConstraint& want = slots[static_cast<std::size_t>(*p.slot)].constraint;
        ++out.considered;
        if (auto g = p.grade_number(); g && *g == want.grade) ++grade_hits;
        if (auto g = p.gender_value(); g && *g == want.gender) ++gender_hits;
        if (auto t = p.tier(); t && *t == want.tier) ++tier_hits;
    }
    if (out.considered > 0) {
        const double n = static_cast<double>(out.considered);
        out.grade = grade_hits / n;
        out.gender = gender_hits / n;
        out.academic_level = tier_hits / n;
    }
    return out;
}

}  // namespace personagen
