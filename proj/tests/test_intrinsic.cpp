#include <catch2/catch_amalgamated.hpp>

#include "personagen/intrinsic.hpp"
#include "personagen/orchestrator.hpp"
#include "support/fixtures.hpp"

using namespace personagen;

namespace {

// clean mock corpus used by several cases
std::vector<Persona> mock_corpus(std::int64_t n, std::uint64_t seed = 77,
                                 const std::string& faults = "") {
    Schedule schedule = build_schedule(TargetDistribution::uniform(n, seed));
    MockBackend backend(seed, parse_fault_specs(faults));
    OrchestratorConfig cfg;
    std::vector<Persona> corpus;
    run_batch(schedule, backend, cfg, seed, 1,
              [&](const Persona& p, const SlotOutcome&) { corpus.push_back(p); });
    return corpus;
}

}  // namespace

TEST_CASE("golden mock fixture: error rate 0, warning rate 0, KL 0 vs own targets") {
    auto corpus = mock_corpus(10);
    REQUIRE(corpus.size() == 10);
    // the corpus's own empirical distribution as targets gives KL exactly 0
    TargetDistribution self;
    self.count = 10;
    self.grade = empirical_distribution(corpus, MarginalVariable::Grade).probs;
    self.gender = empirical_distribution(corpus, MarginalVariable::Gender).probs;
    self.academic_level = empirical_distribution(corpus, MarginalVariable::AcademicLevel).probs;
    auto report = evaluate_intrinsic(corpus, self, nullptr, 1);
    CHECK(report.persona_count == 10);
    CHECK(report.error_rate == 0.0);
    CHECK(report.warning_rate == 0.0);
    CHECK(report.kl_grade == 0.0);
    CHECK(report.kl_gender == 0.0);
    CHECK(report.kl_academic_level == 0.0);
    CHECK(report.top_problematic.empty());
}

TEST_CASE("corrupted fixture: 3 of 10 with hard errors gives error rate 0.3") {
    auto corpus = mock_corpus(10);
    corpus[1].academic_level = "Top of class";
    corpus[4].grade = "Grade 13";
    corpus[7].agent_identifier = "BAD";
    TargetDistribution t = TargetDistribution::uniform(10, 1);
    auto report = evaluate_intrinsic(corpus, t, nullptr, 1);
    CHECK(report.error_rate == Catch::Approx(0.3));
    CHECK(report.top_problematic.size() == 3);
}

TEST_CASE("anchor alignment: monotone construction gives r = 1") {
    std::vector<Persona> corpus;
    // equally spaced polarity scores 1..4 against tier anchors 1..4
    const char* words[] = {"low", "relatively low", "mid", "upper-mid"};
    for (int t = 0; t < 4; ++t) {
        for (int k = 0; k < 3; ++k) {
            Persona p;
            p.id = "a" + std::to_string(t * 3 + k);
            p.academic_level = academic_label(static_cast<Tier>(3 - t));  // Poor..High
            p.values_text = "Her moral conduct is " + std::string(words[t]) +
                            " in daily observation.";
            corpus.push_back(p);
        }
    }
    auto a = anchor_alignment(corpus, Component::Values);
    REQUIRE(a.pearson_r);
    CHECK(*a.pearson_r == Catch::Approx(1.0).margin(1e-12));
    CHECK(a.used == 12);
    CHECK(a.excluded == 0);
}

TEST_CASE("anchor alignment: random polarity independent of tier stays near zero") {
    Rng rng(424242);
    const char* words[] = {"low", "relatively low", "mid", "upper-mid", "relatively high", "high"};
    std::vector<Persona> corpus;
    for (int i = 0; i < 10000; ++i) {
        Persona p;
        p.id = "r" + std::to_string(i);
        p.academic_level = academic_label(static_cast<Tier>(rng.below(4)));
        p.values_text =
            "Her moral conduct is " + std::string(words[rng.index(6)]) + " most days.";
        corpus.push_back(p);
    }
    auto a = anchor_alignment(corpus, Component::Values);
    REQUIRE(a.pearson_r);
    CHECK(std::abs(*a.pearson_r) < 0.05);
}

TEST_CASE("anchor alignment: personas with no level mentions are excluded and counted") {
    std::vector<Persona> corpus;
    for (int i = 0; i < 4; ++i) {
        Persona p;
        p.id = std::to_string(i);
        p.academic_level = academic_label(static_cast<Tier>(i));
        p.values_text = i < 2 ? "moral conduct is " + std::string(i == 0 ? "high" : "low")
                              : "no wording that the lexicon can bind anywhere";
        corpus.push_back(p);
    }
    auto a = anchor_alignment(corpus, Component::Values);
    CHECK(a.used == 2);
    CHECK(a.excluded == 2);
}

TEST_CASE("anchor alignment is invariant under affine re-mapping of tier indices") {
    auto corpus = mock_corpus(60);
    auto base = anchor_alignment(corpus, Component::Creativity);
    REQUIRE(base.pearson_r);
    // affine invariance of Pearson: recompute against 10*anchor + 3
    std::vector<double> scores, anchors;
    for (const auto& p : corpus) {
        const auto ex = extract_level_mentions(p.creativity_text, default_level_lexicon(),
                                               creativity_dimensions());
        if (ex.mentions.empty()) continue;
        double s = 0;
        for (const auto& m : ex.mentions) s += m.score;
        scores.push_back(s / ex.mentions.size());
        anchors.push_back(10.0 * tier_anchor(*p.tier()) + 3.0);
    }
    auto remapped = pearson(scores, anchors);
    REQUIRE(remapped);
    CHECK(*remapped == Catch::Approx(*base.pearson_r).margin(1e-9));
}

TEST_CASE("subject mention coverage: the sample persona mentions Art") {
    const Persona sample = testsupport::load_sample_persona();
    CHECK(subject_mention_coverage({sample}) == 1.0);
    Persona bare = sample;
    bare.strong_subjects = {"Quantum Mechanics"};
    bare.weak_subjects = {"Alchemy"};
    CHECK(subject_mention_coverage({bare}) == 0.0);

    // mixed fixture equals a hand count
    std::vector<Persona> mixed = {sample, bare, sample};
    CHECK(subject_mention_coverage(mixed) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("contradiction scan flags seeded ids only") {
    auto corpus = mock_corpus(20);
    auto clean = contradiction_scan(corpus);
    CHECK(clean.flagged_ids.empty());

    // top tier + chronic severe difficulty wording
    corpus[3].academic_level = academic_label(Tier::High);
    corpus[3].social_relations += " Classmates notice chronic severe difficulty in Mathematics.";
    // implausible age-grade
    corpus[8].age = 6;
    corpus[8].grade = grade_name(12);
    auto scan = contradiction_scan(corpus);
    std::vector<std::string> expected = {corpus[3].id, corpus[8].id};
    std::sort(expected.begin(), expected.end());
    auto got = scan.flagged_ids;
    std::sort(got.begin(), got.end());
    CHECK(got == expected);
    CHECK(scan.fraction == Catch::Approx(0.1));
}

TEST_CASE("intrinsic report round-trips through JSON and emits CSV") {
    auto corpus = mock_corpus(30);
    TargetDistribution t = TargetDistribution::uniform(30, 77);
    auto report = evaluate_intrinsic(corpus, t, nullptr, 5);
    const json doc = report.to_json();
    auto back = IntrinsicReport::from_json(doc);
    CHECK(back.persona_count == report.persona_count);
    CHECK(back.error_rate == report.error_rate);
    CHECK(back.distinct1 == report.distinct1);
    CHECK(back.hamming_mean == report.hamming_mean);
    CHECK(back.anchor == report.anchor);

    const std::string csv = intrinsic_report_csv(report);
    CHECK(csv.find("metric,value") == 0);
    CHECK(csv.find("distinct1") != std::string::npos);
}

TEST_CASE("report determinism given corpus and seed") {
    auto corpus = mock_corpus(40);
    TargetDistribution t = TargetDistribution::uniform(40, 77);
    auto a = evaluate_intrinsic(corpus, t, nullptr, 9);
    auto b = evaluate_intrinsic(corpus, t, nullptr, 9);
    CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("error-rate recount oracle and numerator monotonicity") {
    auto corpus = mock_corpus(25, 99, "r15:0.3:persistent");
    // run_batch rejects persistent-fault slots, so corrupt post hoc instead
    corpus = mock_corpus(25, 99);
    Rng rng(31);
    for (auto& p : corpus)
        if (rng.below(3) == 0) p.agent_identifier = "NOPE";
    TargetDistribution t = TargetDistribution::uniform(25, 99);
    auto report = evaluate_intrinsic(corpus, t, nullptr, 1);
    std::size_t recount = 0;
    for (const auto& p : corpus)
        if (!offline_classify(p).errors.empty()) ++recount;
    CHECK(report.error_rate ==
          Catch::Approx(static_cast<double>(recount) / corpus.size()).epsilon(1e-12));

    // removing a clean persona cannot increase the error numerator
    std::vector<Persona> smaller;
    for (const auto& p : corpus)
        if (!offline_classify(p).errors.empty() || smaller.size() + 1 == corpus.size())
            smaller.push_back(p);
    if (smaller.size() >= 2 && smaller.size() < corpus.size()) {
        auto shrunk = evaluate_intrinsic(smaller, t, nullptr, 1);
        CHECK(static_cast<std::size_t>(shrunk.error_rate * smaller.size() + 0.5) == recount);
    }
}

TEST_CASE("compare: fault-heavy corpus shows higher error and lower diversity") {
    auto clean = mock_corpus(60, 5);
    auto faulty = mock_corpus(60, 5);
    // corrupt a third of the faulty corpus: intra-text repetition (lowers
    // per-sample distinct-n), cross-persona duplication (near-dups) and label
    // errors
    for (std::size_t i = 0; i < faulty.size(); i += 3) {
        const std::string sentence = faulty[i].values_text.substr(
            0, faulty[i].values_text.find('.') + 1);
        std::string repeated;
        for (int k = 0; k < 30; ++k) repeated += sentence + " ";
        faulty[i].values_text = trim(repeated);
        faulty[i].creativity_text = faulty[0].creativity_text;
        faulty[i].mental_health_text = faulty[0].mental_health_text;
        faulty[i].academic_level = "Top of class";
    }
    TargetDistribution t = TargetDistribution::uniform(60, 5);
    auto a = evaluate_intrinsic(clean, t, nullptr, 3);
    auto b = evaluate_intrinsic(faulty, t, nullptr, 3);
    CHECK(b.error_rate > a.error_rate);
    CHECK(b.distinct1 < a.distinct1);
    CHECK(b.distinct2 < a.distinct2);
    CHECK(b.near_duplicate_pairs > a.near_duplicate_pairs);

    const std::string csv = compare_intrinsic_csv(a, b);
    CHECK(csv.find("metric,a,b,delta") == 0);
    CHECK(csv.find("error_rate") != std::string::npos);
    CHECK(csv.find("near_duplicate_pairs") != std::string::npos);
}

TEST_CASE("plan match rates appear when a schedule is provided") {
    Schedule schedule = build_schedule(TargetDistribution::uniform(20, 3));
    MockBackend backend(3);
    OrchestratorConfig cfg;
    std::vector<Persona> corpus;
    run_batch(schedule, backend, cfg, 3, 1,
              [&](const Persona& p, const SlotOutcome&) { corpus.push_back(p); });
    TargetDistribution t = TargetDistribution::uniform(20, 3);
    auto report = evaluate_intrinsic(corpus, t, &schedule.slots, 1);
    REQUIRE(report.plan_match);
    CHECK(report.plan_match->grade == 1.0);
    CHECK(report.plan_match->gender == 1.0);
    CHECK(report.plan_match->academic_level == 1.0);
}
