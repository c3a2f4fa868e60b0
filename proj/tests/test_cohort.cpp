#include <catch2/catch_amalgamated.hpp>

#include "personagen/cohort.hpp"
#include "support/fixtures.hpp"

using namespace personagen;

TEST_CASE("cohort ordering: 16 exhaustive, mutually exclusive cells") {
    std::set<int> seen;
    for (int t = 0; t < 4; ++t)
        for (int g = 0; g < 2; ++g)
            for (int r = 0; r < 2; ++r) {
                CohortKey key{static_cast<Tier>(t), static_cast<Gender>(g), r == 0};
                const int cell = cohort_cell(key);
                CHECK(cell >= 0);
                CHECK(cell < 16);
                CHECK(cohort_from_cell(cell) == key);
                seen.insert(cell);
            }
    CHECK(seen.size() == 16);
    CHECK(cohort_cell(CohortKey{Tier::High, Gender::Male, true}) == 0);
    CHECK(cohort_label(0) == "High|M|high");
    CHECK(cohort_label(15) == "Poor|F|low");
}

TEST_CASE("zscore: closed form, idempotence, errors") {
    MaybeColumn col = {1.0, 2.0, 3.0};
    auto z = zscore(col);
    REQUIRE(z.size() == 3);
    CHECK(*z[0] == Catch::Approx(-1.2247448714).margin(1e-9));
    CHECK(*z[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(*z[2] == Catch::Approx(1.2247448714).margin(1e-9));

    // missing propagates
    MaybeColumn with_gap = {1.0, std::nullopt, 3.0, 5.0};
    auto zg = zscore(with_gap);
    CHECK_FALSE(zg[1].has_value());

    // already standardized stays put
    auto zz = zscore(z);
    for (std::size_t i = 0; i < 3; ++i) CHECK(*zz[i] == Catch::Approx(*z[i]).margin(1e-12));

    CHECK_THROWS(zscore(MaybeColumn{2.0, 2.0, 2.0}));
    CHECK_THROWS(zscore(MaybeColumn{1.0}));
}

TEST_CASE("ceps_tiers: percentile slicing examples") {
    std::vector<double> ten;
    for (int i = 1; i <= 10; ++i) ten.push_back(i);
    auto tiers = ceps_tiers(ten);
    std::map<Tier, int> counts;
    for (Tier t : tiers.tiers) counts[t]++;
    CHECK(counts[Tier::High] == 1);
    CHECK(counts[Tier::Medium] == 2);
    CHECK(counts[Tier::Low] == 2);
    CHECK(counts[Tier::Poor] == 5);
    CHECK_FALSE(tiers.degenerate);

    // all-equal values collapse to one tier and are flagged degenerate
    std::vector<double> flat(20, 1.5);
    auto deg = ceps_tiers(flat);
    CHECK(deg.degenerate);
    for (Tier t : deg.tiers) CHECK(t == Tier::High);

    CHECK_THROWS(ceps_tiers(std::vector<double>(9, 1.0)));
}

TEST_CASE("ceps_tiers: 5000 random values give shares (10,20,20,50) +- 1/N") {
    Rng rng(20240202);
    std::vector<double> values;
    for (int i = 0; i < 5000; ++i) values.push_back(rng.unit() * 101.0 - 50.0);
    auto tiers = ceps_tiers(values);
    std::map<Tier, int> counts;
    for (Tier t : tiers.tiers) counts[t]++;
    CHECK(std::abs(counts[Tier::High] - 500) <= 1);
    CHECK(std::abs(counts[Tier::Medium] - 1000) <= 1);
    CHECK(std::abs(counts[Tier::Low] - 1000) <= 1);
    CHECK(std::abs(counts[Tier::Poor] - 2500) <= 1);
}

TEST_CASE("cesd_risk: sums and percentile rule") {
    // all items = 1 -> CESD 10 (summing is the caller's job; here the rule)
    std::vector<double> sums;
    for (int i = 0; i < 99; ++i) sums.push_back(10.0);
    sums.push_back(50.0);  // one student with the maximum
    auto risk = cesd_risk(sums);
    CHECK(risk.back());
    // random population: high-risk share ~ 25%
    Rng rng(9);
    std::vector<double> random_sums;
    for (int i = 0; i < 4000; ++i) random_sums.push_back(10.0 + rng.below(41));
    auto r = cesd_risk(random_sums);
    int high = 0;
    for (bool b : r)
        if (b) ++high;
    CHECK(high > 4000 * 0.18);
    CHECK(high < 4000 * 0.32);
}

TEST_CASE("impute_gender follows the mutually exclusive puberty rule") {
    CHECK(impute_gender(13.0, std::nullopt) == Gender::Female);
    CHECK(impute_gender(std::nullopt, 14.0) == Gender::Male);
    CHECK_FALSE(impute_gender(std::nullopt, std::nullopt).has_value());
    CHECK_FALSE(impute_gender(12.0, 13.0).has_value());  // ambiguous -> drop
}

TEST_CASE("construct_score: hand-computed fixtures") {
    StudentRecord s;
    for (int k = 1; k <= 10; ++k) s.items["d_" + std::to_string(k)] = 2.0;
    s.items["w2a2001"] = 3.0;
    s.items["w2a2005"] = 1.0;
    s.items["w2b0501"] = 4.0;
    s.items["w2b0502"] = 3.0;
    s.items["w2b0503"] = 2.0;

    ConstructSpec depression;
    depression.id = "dep";
    for (int k = 1; k <= 10; ++k) depression.items.push_back("d_" + std::to_string(k));
    depression.aggregation = ConstructSpec::Aggregation::Sum;
    CHECK(*construct_score(depression, s) == 20.0);

    ConstructSpec strictness;
    strictness.items = {"w2a2001", "w2a2005"};
    strictness.aggregation = ConstructSpec::Aggregation::Mean;
    CHECK(*construct_score(strictness, s) == 2.0);

    ConstructSpec attention;
    attention.items = {"w2b0501", "w2b0502", "w2b0503"};
    attention.aggregation = ConstructSpec::Aggregation::Mean;
    CHECK(*construct_score(attention, s) == 3.0);

    // reverse coding flips within the scale bounds
    ConstructSpec reversed;
    reversed.items = {"w2a2001", "w2a2005"};
    reversed.aggregation = ConstructSpec::Aggregation::Mean;
    reversed.reverse_coded = {"w2a2001"};
    reversed.scale_min = 1;
    reversed.scale_max = 3;
    CHECK(*construct_score(reversed, s) == 1.0);  // (4-3 + 1)/2

    // missing constituent item excludes the student
    ConstructSpec incomplete;
    incomplete.items = {"w2a2001", "nonexistent"};
    CHECK_FALSE(construct_score(incomplete, s).has_value());
}

TEST_CASE("pisa achievement, quartile levels, and risk") {
    StudentRecord s;
    s.items["PV1MATH"] = 500.0;
    s.items["PV2MATH"] = 500.0;
    CHECK(*pisa_achievement(s, {"PV1MATH", "PV2MATH"}) == 500.0);
    s.items["PV2MATH"] = 520.0;
    CHECK(*pisa_achievement(s, {"PV1MATH", "PV2MATH"}) == 510.0);
    CHECK_FALSE(pisa_achievement(s, {"PV1MATH", "PV9MATH"}).has_value());

    // eight distinct scores -> exactly two per quartile level
    std::vector<double> eight = {401, 402, 403, 404, 405, 406, 407, 408};
    auto levels = pisa_levels(eight);
    std::map<Tier, int> counts;
    for (Tier t : levels.tiers) counts[t]++;
    CHECK(counts[Tier::High] == 2);
    CHECK(counts[Tier::Medium] == 2);
    CHECK(counts[Tier::Low] == 2);
    CHECK(counts[Tier::Poor] == 2);
    CHECK_THROWS(pisa_levels({1, 2, 3}));

    // a student exactly at Q0.75 is high risk (>= rule)
    std::vector<double> z = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75};
    auto risk = pisa_risk(z);
    const double q75 = percentile_threshold([&] {
        auto s2 = z;
        std::sort(s2.begin(), s2.end());
        return s2;
    }(), 0.75);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(risk[i] == (z[i] >= q75));
    CHECK(risk[6]);  // exactly at the threshold value
}

TEST_CASE("cohort_means: recount fixture, single member, missing cells") {
    // 32 students, 2 per cohort, value = cell*10 + offset
    MaybeColumn responses;
    std::vector<std::optional<int>> cells;
    for (int cell = 0; cell < 16; ++cell) {
        for (int k = 0; k < 2; ++k) {
            responses.push_back(cell * 10.0 + k);
            cells.push_back(cell);
        }
    }
    auto means = cohort_means(responses, cells);
    for (int cell = 0; cell < 16; ++cell) {
        REQUIRE(means.means[cell].has_value());
        CHECK(*means.means[cell] == Catch::Approx(cell * 10.0 + 0.5));
        CHECK(means.counts[cell] == 2);
    }

    // single-student cohort -> that student's value; empty -> missing not zero
    MaybeColumn one = {42.0};
    std::vector<std::optional<int>> one_cell = {3};
    auto single = cohort_means(one, one_cell);
    CHECK(*single.means[3] == 42.0);
    CHECK_FALSE(single.means[0].has_value());

    // response missing for all of one cohort -> cell missing
    MaybeColumn gaps = {std::nullopt, 7.0};
    std::vector<std::optional<int>> two_cells = {0, 1};
    auto partial = cohort_means(gaps, two_cells);
    CHECK_FALSE(partial.means[0].has_value());
    CHECK(*partial.means[1] == 7.0);
}

TEST_CASE("persona_cohort: sample persona maps to (Low, F, high)") {
    const Persona sample = testsupport::load_sample_persona();
    auto cohort = persona_cohort(sample);
    REQUIRE(cohort.key);
    CHECK(cohort.key->tier == Tier::Low);
    CHECK(cohort.key->gender == Gender::Female);
    CHECK(cohort.key->high_risk);  // both risks "mid" sit at the threshold class

    Persona low = sample;
    low.mental_health_text =
        "No significant symptoms; her depression risk is low and her anxiety risk is low.";
    auto low_cohort = persona_cohort(low);
    REQUIRE(low_cohort.key);
    CHECK_FALSE(low_cohort.key->high_risk);

    Persona vague = sample;
    vague.mental_health_text = "A cheerful paragraph with no risk wording at all.";
    auto excluded = persona_cohort(vague);
    CHECK_FALSE(excluded.key.has_value());
    CHECK(excluded.status == CohortParse::NoRisk);

    Persona no_tier = sample;
    no_tier.academic_level = "Top of class";
    CHECK(persona_cohort(no_tier).status == CohortParse::NoTier);
}

TEST_CASE("quota_sample: determinism, exact take, shortfall") {
    // cohort 0: 500 members; cohort 1: 50 members
    std::vector<std::optional<int>> cells;
    for (int i = 0; i < 500; ++i) cells.push_back(0);
    for (int i = 0; i < 50; ++i) cells.push_back(1);
    auto a = quota_sample(cells, 200, 7);
    auto b = quota_sample(cells, 200, 7);
    CHECK(a.indices == b.indices);
    CHECK(a.sampled[0] == 200);
    CHECK(a.shortfall[0] == 0);
    CHECK(a.sampled[1] == 50);
    CHECK(a.shortfall[1] == 150);
    // sample without replacement
    std::set<std::size_t> unique(a.indices.begin(), a.indices.end());
    CHECK(unique.size() == a.indices.size());

    auto c = quota_sample(cells, 200, 8);
    CHECK(a.indices != c.indices);
    CHECK_THROWS(quota_sample(cells, 0, 1));
}
