#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <map>

#include "personagen/io.hpp"
#include "personagen/schedule.hpp"

using namespace personagen;

namespace {

// Independent oracle: direct hand enumeration of largest-remainder rounding.
std::vector<std::int64_t> remainder_oracle(const std::vector<double>& w, std::int64_t n) {
    std::vector<std::int64_t> base(w.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::int64_t used = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double exact = static_cast<double>(n) * w[i];
        base[i] = static_cast<std::int64_t>(std::floor(exact));
        used += base[i];
        rem.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t k = 0; k < n - used; ++k) base[rem[static_cast<std::size_t>(k)].second]++;
    return base;
}

}  // namespace

TEST_CASE("largest remainder: N=10 uniform over 4 tiers gives (3,3,2,2)") {
    const std::vector<double> w(4, 0.25);
    auto quota = largest_remainder(w, 10);
    CHECK(quota == std::vector<std::int64_t>{3, 3, 2, 2});
    CHECK(quota == remainder_oracle(w, 10));
}

TEST_CASE("largest remainder matches oracle on random tables") {
    Rng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.index(9);
        std::vector<double> w(k);
        double sum = 0.0;
        for (auto& x : w) {
            x = rng.unit() + 1e-6;
            sum += x;
        }
        for (auto& x : w) x /= sum;
        const std::int64_t n = static_cast<std::int64_t>(rng.below(5000) + 1);
        auto quota = largest_remainder(w, n);
        std::int64_t total = 0;
        for (std::size_t i = 0; i < k; ++i) {
            total += quota[i];
            // apportionment bound
            CHECK(std::abs(static_cast<double>(quota[i]) - static_cast<double>(n) * w[i]) < 1.0);
        }
        CHECK(total == n);
        CHECK(quota == remainder_oracle(w, n));
    }
}

TEST_CASE("build_schedule: exact divisibility puts one slot per cell") {
    // 4 tiers x 2 genders x 2-of-anything: restrict grade and cluster so the
    // joint support has 16 equal cells.
    TargetDistribution t;
    t.count = 16;
    t.seed = 3;
    t.grade.assign(kGradeCount, 0.0);
    t.grade[7] = 1.0;  // Grade 8
    t.subject_cluster.assign(kClusterCount, 0.0);
    t.subject_cluster[0] = 0.5;
    t.subject_cluster[1] = 0.5;
    auto schedule = build_schedule(t);
    REQUIRE(schedule.slots.size() == 16);
    std::map<int, int> per_cell;
    for (const auto& s : schedule.slots) per_cell[cell_index(s.constraint)]++;
    CHECK(per_cell.size() == 16);
    for (const auto& [cell, count] : per_cell) CHECK(count == 1);
}

TEST_CASE("build_schedule: 1M uniform tiers yields 250k per tier") {
    TargetDistribution t = TargetDistribution::uniform(1'000'000, 1);
    auto schedule = build_schedule(t);
    std::array<std::int64_t, kTierCount> tier_counts{};
    for (int cell = 0; cell < kCellCount; ++cell)
        tier_counts[static_cast<std::size_t>(cell % kTierCount)] += schedule.cell_counts[cell];
    for (auto c : tier_counts) CHECK(c == 250'000);
}

TEST_CASE("build_schedule is deterministic and quota-faithful") {
    TargetDistribution t = TargetDistribution::uniform(997, 42);
    auto a = build_schedule(t);
    auto b = build_schedule(t);
    REQUIRE(a.slots.size() == b.slots.size());
    for (std::size_t i = 0; i < a.slots.size(); ++i)
        CHECK(a.slots[i].constraint == b.slots[i].constraint);
    // per-cell quota bound
    for (int cell = 0; cell < kCellCount; ++cell) {
        const double expected = 997.0 / kCellCount;
        CHECK(std::abs(static_cast<double>(a.cell_counts[cell]) - expected) < 1.0);
    }
    // different seed shuffles differently but keeps the same cell counts
    t.seed = 43;
    auto c = build_schedule(t);
    CHECK(c.cell_counts == a.cell_counts);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.slots.size(); ++i)
        if (!(c.slots[i].constraint == a.slots[i].constraint)) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("plan file round-trips") {
    TargetDistribution t = TargetDistribution::uniform(50, 9);
    auto schedule = build_schedule(t);
    const auto path = std::filesystem::temp_directory_path() / "pg_plan_test.jsonl";
    write_plan(path.string(), schedule);
    auto slots = load_plan(path.string());
    REQUIRE(slots.size() == schedule.slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        CHECK(slots[i].index == schedule.slots[i].index);
        CHECK(slots[i].constraint == schedule.slots[i].constraint);
    }
    std::filesystem::remove(path);
}

namespace {
Persona tiered_persona(Tier t, int grade = 8, Gender g = Gender::Female) {
    Persona p;
    p.academic_level = academic_label(t);
    p.grade = grade_name(grade);
    p.gender = gender_name(g);
    return p;
}
}  // namespace

TEST_CASE("empirical_distribution counts with zero categories included") {
    std::vector<Persona> corpus = {tiered_persona(Tier::High), tiered_persona(Tier::High),
                                   tiered_persona(Tier::Low), tiered_persona(Tier::Poor)};
    auto dist = empirical_distribution(corpus, MarginalVariable::AcademicLevel);
    REQUIRE(dist.probs.size() == 4);
    CHECK(dist.probs[0] == 0.5);
    CHECK(dist.probs[1] == 0.0);
    CHECK(dist.probs[2] == 0.25);
    CHECK(dist.probs[3] == 0.25);

    std::vector<Persona> single = {tiered_persona(Tier::Medium)};
    auto point = empirical_distribution(single, MarginalVariable::AcademicLevel);
    CHECK(point.probs[1] == 1.0);

    CHECK_THROWS(empirical_distribution({}, MarginalVariable::Grade));
}

TEST_CASE("kl_divergence: identity, derived closed form, and properties") {
    const std::vector<double> u{0.25, 0.25, 0.25, 0.25};
    CHECK(kl_divergence(u, u, 1.0) == 0.0);

    // alpha=1 over support size 2 with implied unit mass: smoothed
    // P'=(2/3,1/3), Q'=(1/2,1/2); expected value evaluated independently.
    const std::vector<double> p{1.0, 0.0};
    const std::vector<double> q{0.5, 0.5};
    const double expected =
        (2.0 / 3.0) * std::log((2.0 / 3.0) / 0.5) + (1.0 / 3.0) * std::log((1.0 / 3.0) / 0.5);
    CHECK(kl_divergence(p, q, 1.0) == Catch::Approx(expected).epsilon(1e-12));

    // non-negativity over random tables; smoothing keeps structural zeros finite
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> a(5, 0.0), b(5, 0.0);
        double sa = 0, sb = 0;
        for (int k = 0; k < 5; ++k) {
            a[k] = rng.unit() + 1e-9;
            sa += a[k];
            b[k] = (k == 0) ? 0.0 : rng.unit() + 1e-9;  // structural zero in b
            sb += b[k];
        }
        for (int k = 0; k < 5; ++k) {
            a[k] /= sa;
            b[k] /= sb;
        }
        const double kl = kl_divergence(a, b, 1.0, 1000.0);
        CHECK(kl >= 0.0);
        CHECK(std::isfinite(kl));
    }

    CHECK_THROWS(kl_divergence({0.5, 0.5}, {1.0}, 1.0));
    CHECK_THROWS(kl_divergence(u, u, 0.0));
}

TEST_CASE("plan_match_rate counts matches and exclusions") {
    TargetDistribution t = TargetDistribution::uniform(10, 3);
    auto schedule = build_schedule(t);
    std::vector<Persona> corpus;
    for (const auto& s : schedule.slots) {
        Persona p;
        p.slot = s.index;
        p.grade = grade_name(s.constraint.grade);
        p.gender = gender_name(s.constraint.gender);
        p.academic_level = academic_label(s.constraint.tier);
        corpus.push_back(p);
    }
    auto all = plan_match_rate(corpus, schedule.slots);
    CHECK(all.grade == 1.0);
    CHECK(all.gender == 1.0);
    CHECK(all.academic_level == 1.0);
    CHECK(all.missing_linkage == 0);

    // one mismatch in ten
    corpus[0].academic_level =
        academic_label(corpus[0].tier() == Tier::High ? Tier::Poor : Tier::High);
    auto nine = plan_match_rate(corpus, schedule.slots);
    CHECK(nine.academic_level == Catch::Approx(0.9));

    // personas without linkage are excluded and counted
    corpus[1].slot.reset();
    auto excl = plan_match_rate(corpus, schedule.slots);
    CHECK(excl.considered == 9);
    CHECK(excl.missing_linkage == 1);

    // randomized corpus matches a brute-force recount
    Rng rng(15);
    for (auto& p : corpus) {
        if (rng.below(3) == 0) p.grade = grade_name(static_cast<int>(rng.below(12) + 1));
    }
    std::size_t hits = 0, considered = 0;
    for (const auto& p : corpus) {
        if (!p.slot) continue;
        ++considered;
        if (p.grade_number() &&
            *p.grade_number() == schedule.slots[static_cast<std::size_t>(*p.slot)].constraint.grade)
            ++hits;
    }
    auto rates = plan_match_rate(corpus, schedule.slots);
    CHECK(rates.grade ==
          Catch::Approx(static_cast<double>(hits) / static_cast<double>(considered)));
}
