#pragma once

// Corpus-level intrinsic report: validity rates, quota KL, diversity,
// redundancy, anchor alignment, subject-mention coverage, hard contradictions,
// paragraph-length statistics and worst offenders.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "personagen/csv.hpp"
#include "personagen/schedule.hpp"
#include "personagen/simhash.hpp"
#include "personagen/stats.hpp"
#include "personagen/validator.hpp"

namespace personagen {

struct IntrinsicConfig {
    ValidatorConfig validator;
    int near_dup_threshold = 3;
    std::size_t hamming_sample_pairs = 100000;
    double cross_component_threshold = 0.8;
    std::size_t top_k = 50;
    double kl_alpha = 1.0;
};

enum class Component { Values, Creativity, MentalHealth };

inline const char* component_name(Component c) {
    switch (c) {
        case Component::Values: return "values";
        case Component::Creativity: return "creativity";
        case Component::MentalHealth: return "mental_health";
    }
    return "";
}

struct AnchorAlignment {
    std::optional<double> pearson_r;  // undefined on degenerate variance
    std::size_t used = 0;
    std::size_t excluded = 0;  // personas with no extractable level mentions
};

// Per persona: mean polarity of the component's bound level mentions
// (risk-slot scores reflected so that higher always means healthier), then
// Pearson against the tier anchor High=4..Poor=1. Personas with no bound
// dimension fall back to the mean of any level words in the text; with none
// at all they are excluded and counted.
inline AnchorAlignment anchor_alignment(const std::vector<Persona>& corpus, Component component,
                                        const IntrinsicConfig& cfg = {}) {
    const auto& dims = component == Component::Values     ? values_dimensions()
                       : component == Component::Creativity ? creativity_dimensions()
                                                            : mental_health_dimensions();
    AnchorAlignment out;
    std::vector<double> scores;
    std::vector<double> anchors;
    for (const auto& p : corpus) {
        const auto tier = p.tier();
        if (!tier) {
            ++out.excluded;
            continue;
        }
        const std::string& text = component == Component::Values     ? p.values_text
                                  : component == Component::Creativity ? p.creativity_text
                                                                       : p.mental_health_text;
        const auto ex = extract_level_mentions(text, cfg.validator.lexicon, dims,
                                               cfg.validator.binding_window);
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& m : ex.mentions) {
            int dir = +1;
            for (const auto& d : dims)
                if (d.id == m.dimension) dir = d.direction;
            sum += dir > 0 ? m.score : 7 - m.score;
            ++n;
        }
        if (n == 0) {
            const auto any = all_level_scores(text, cfg.validator.lexicon);
            for (int s : any) sum += s;
            n = any.size();
        }
        if (n == 0) {
            ++out.excluded;
            continue;
        }
        scores.push_back(sum / static_cast<double>(n));
        anchors.push_back(static_cast<double>(tier_anchor(*tier)));
        ++out.used;
    }
    if (scores.size() >= 2) out.pearson_r = pearson(scores, anchors);
    return out;
}

// Fraction of personas whose strong or weak subjects appear verbatim in at
// least one narrative field.
inline double subject_mention_coverage(const std::vector<Persona>& corpus) {
    if (corpus.empty()) return 0.0;
    std::size_t covered = 0;
    for (const auto& p : corpus) {
        bool hit = false;
        std::vector<std::string> subjects = p.strong_subjects;
        subjects.insert(subjects.end(), p.weak_subjects.begin(), p.weak_subjects.end());
        for (const auto& [fname, text] : narrative_fields(p)) {
            (void)fname;
            for (const auto& s : subjects) {
                if (!s.empty() && contains_ci(*text, s)) {
                    hit = true;
                    break;
                }
            }
            if (hit) break;
        }
        if (hit) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(corpus.size());
}

struct ContradictionScan {
    std::vector<std::string> flagged_ids;
    double fraction = 0.0;
};

// Hard-contradiction patterns: the cross-field pairs behind R11, implausible
// age-grade combinations, and the mental-health slot-severity cross-check
// (high-class risk wording alongside uniformly high state and happiness).
inline ContradictionScan contradiction_scan(const std::vector<Persona>& corpus,
                                            const IntrinsicConfig& cfg = {}) {
    ContradictionScan out;
    for (const auto& p : corpus) {
        bool flagged = !check_r11(p, cfg.validator).empty();
        if (!flagged) {
            for (const auto& i : check_r1(p, cfg.validator))
                if (i.severity == Severity::Error) flagged = true;
        }
        if (!flagged && !p.mental_health_text.empty()) {
            const auto ex =
                extract_level_mentions(p.mental_health_text, cfg.validator.lexicon,
                                       mental_health_dimensions(), cfg.validator.binding_window);
            const auto overall = detail::mention_score(ex, "overall mental state");
            const auto happiness = detail::mention_score(ex, "happiness index");
            const auto risk = extract_risk(p.mental_health_text, cfg.validator.risk_rules);
            const bool high_risk = (risk.depression_class && *risk.depression_class >= 3) ||
                                   (risk.anxiety_class && *risk.anxiety_class >= 3);
            if (high_risk && overall && happiness && *overall >= 5 && *happiness >= 5)
                flagged = true;
        }
        if (flagged) out.flagged_ids.push_back(p.id);
    }
    if (!corpus.empty())
        out.fraction =
            static_cast<double>(out.flagged_ids.size()) / static_cast<double>(corpus.size());
    return out;
}

struct LengthSummary {
    double mean = 0.0;
    std::size_t min = 0;
    std::size_t max = 0;
    std::size_t below_band = 0;
    std::size_t above_band = 0;
};

struct IntrinsicReport {
    std::size_t persona_count = 0;
    double error_rate = 0.0;
    double warning_rate = 0.0;
    double distinct1 = 0.0;
    double distinct2 = 0.0;
    std::size_t near_duplicate_pairs = 0;
    double hamming_mean = 0.0;
    double hamming_std = 0.0;
    double kl_grade = 0.0;
    double kl_gender = 0.0;
    double kl_academic_level = 0.0;
    std::optional<PlanMatchRates> plan_match;
    std::map<std::string, double> anchor;  // component -> Pearson r
    std::map<std::string, std::size_t> anchor_excluded;
    double subject_coverage = 0.0;
    double contradiction_fraction = 0.0;
    std::size_t template_like_count = 0;
    std::map<std::string, LengthSummary> lengths;  // narrative field -> summary
    std::map<std::string, std::size_t> issue_counts;
    std::vector<std::string> top_problematic;
    std::uint64_t seed = 0;

    json to_json() const;
    static IntrinsicReport from_json(const json& doc);
    std::vector<std::pair<std::string, std::string>> flat_metrics() const;
};

inline IntrinsicReport evaluate_intrinsic(const std::vector<Persona>& corpus,
                                          const TargetDistribution& targets,
                                          const std::vector<Slot>* schedule, std::uint64_t seed,
                                          const IntrinsicConfig& cfg = {}) {
    if (corpus.empty()) throw std::invalid_argument("evaluate_intrinsic: empty corpus");
    IntrinsicReport report;
    report.persona_count = corpus.size();
    report.seed = seed;

    // validity + worst offenders
    struct Offender {
        std::size_t errors;
        std::size_t warnings;
        std::string id;
    };
    std::vector<Offender> offenders;
    std::size_t with_error = 0, with_warning = 0;
    for (const auto& p : corpus) {
        const auto cls = offline_classify(p, cfg.validator);
        if (!cls.errors.empty()) ++with_error;
        if (!cls.warnings.empty()) ++with_warning;
        for (const auto& i : cls.errors) report.issue_counts[i.code]++;
        for (const auto& i : cls.warnings) report.issue_counts[i.code]++;
        if (!cls.errors.empty() || !cls.warnings.empty())
            offenders.push_back(Offender{cls.errors.size(), cls.warnings.size(), p.id});
    }
    const double n = static_cast<double>(corpus.size());
    report.error_rate = static_cast<double>(with_error) / n;
    report.warning_rate = static_cast<double>(with_warning) / n;
    std::sort(offenders.begin(), offenders.end(), [](const Offender& a, const Offender& b) {
        if (a.errors != b.errors) return a.errors > b.errors;
        if (a.warnings != b.warnings) return a.warnings > b.warnings;
        return a.id < b.id;
    });
    for (std::size_t i = 0; i < offenders.size() && i < cfg.top_k; ++i)
        report.top_problematic.push_back(offenders[i].id);

    // diversity and redundancy
    report.distinct1 = corpus_distinct_n(corpus, 1).mean;
    report.distinct2 = corpus_distinct_n(corpus, 2).mean;
    std::vector<std::uint64_t> fps;
    fps.reserve(corpus.size());
    for (const auto& p : corpus) fps.push_back(simhash64_value(long_text_concat(p)));
    report.near_duplicate_pairs = near_duplicate_index_pairs(fps, cfg.near_dup_threshold).size();
    const auto hs = sampled_hamming_stats(fps, cfg.hamming_sample_pairs, seed);
    report.hamming_mean = hs.mean;
    report.hamming_std = hs.stddev;
    for (const auto& p : corpus)
        if (!cross_component_flags(p, cfg.cross_component_threshold).empty())
            ++report.template_like_count;

    // quota alignment
    report.kl_grade = kl_divergence(empirical_distribution(corpus, MarginalVariable::Grade).probs,
                                    targets.grade, cfg.kl_alpha, n);
    report.kl_gender =
        kl_divergence(empirical_distribution(corpus, MarginalVariable::Gender).probs,
                      targets.gender, cfg.kl_alpha, n);
    report.kl_academic_level =
        kl_divergence(empirical_distribution(corpus, MarginalVariable::AcademicLevel).probs,
                      targets.academic_level, cfg.kl_alpha, n);
    if (schedule) report.plan_match = plan_match_rate(corpus, *schedule);

    // anchor alignment + coherence
    for (Component c : {Component::Values, Component::Creativity, Component::MentalHealth}) {
        const auto a = anchor_alignment(corpus, c, cfg);
        if (a.pearson_r) report.anchor[component_name(c)] = *a.pearson_r;
        report.anchor_excluded[component_name(c)] = a.excluded;
    }
    report.subject_coverage = subject_mention_coverage(corpus);
    report.contradiction_fraction = contradiction_scan(corpus, cfg).fraction;

    // paragraph lengths
    const std::map<std::string, LengthBand> bands = {
        {field::kSocial, cfg.validator.social_band},
        {field::kValues, cfg.validator.values_band},
        {field::kCreativity, cfg.validator.creativity_band},
        {field::kMentalHealth, cfg.validator.mental_band},
        {field::kPersonality, LengthBand{0, static_cast<std::size_t>(-1)}},
    };
    for (const auto& p : corpus) {
        for (const auto& [fname, text] : narrative_fields(p)) {
            auto& s = report.lengths[fname];
            const std::size_t len = utf8_length(*text);
            if (s.min == 0 && s.max == 0 && s.mean == 0.0) s.min = len;
            s.mean += static_cast<double>(len);
            s.min = std::min(s.min, len);
            s.max = std::max(s.max, len);
            auto band = bands.find(fname);
            if (band != bands.end()) {
                if (len < band->second.min_chars) ++s.below_band;
                if (len > band->second.max_chars) ++s.above_band;
            }
        }
    }
    for (auto& [fname, s] : report.lengths) s.mean /= n;

    return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline json IntrinsicReport::to_json() const {
    json out = json::object();
    out["persona_count"] = persona_count;
    out["error_rate"] = error_rate;
    out["warning_rate"] = warning_rate;
    out["distinct1"] = distinct1;
    out["distinct2"] = distinct2;
    out["near_duplicate_pairs"] = near_duplicate_pairs;
    out["hamming_mean"] = hamming_mean;
    out["hamming_std"] = hamming_std;
    out["kl_grade"] = kl_grade;
    out["kl_gender"] = kl_gender;
    out["kl_academic_level"] = kl_academic_level;
    if (plan_match) {
        json pm = json::object();
        pm["grade"] = plan_match->grade;
        pm["gender"] = plan_match->gender;
        pm["academic_level"] = plan_match->academic_level;
        pm["considered"] = plan_match->considered;
        pm["missing_linkage"] = plan_match->missing_linkage;
        out["plan_match"] = std::move(pm);
    }
    out["anchor_alignment"] = anchor;
    out["anchor_excluded"] = anchor_excluded;
    out["subject_mention_coverage"] = subject_coverage;
    out["hard_contradiction_fraction"] = contradiction_fraction;
    out["template_like_count"] = template_like_count;
    json lens = json::object();
    for (const auto& [fname, s] : lengths) {
        json row = json::object();
        row["mean"] = s.mean;
        row["min"] = s.min;
        row["max"] = s.max;
        row["below_band"] = s.below_band;
        row["above_band"] = s.above_band;
        lens[fname] = std::move(row);
    }
    out["paragraph_lengths"] = std::move(lens);
    out["issue_counts"] = issue_counts;
    out["top_problematic"] = top_problematic;
    out["seed"] = seed;
    return out;
}

inline IntrinsicReport IntrinsicReport::from_json(const json& doc) {
    IntrinsicReport r;
    r.persona_count = doc.at("persona_count").get<std::size_t>();
    r.error_rate = doc.at("error_rate").get<double>();
    r.warning_rate = doc.at("warning_rate").get<double>();
    r.distinct1 = doc.at("distinct1").get<double>();
    r.distinct2 = doc.at("distinct2").get<double>();
    r.near_duplicate_pairs = doc.at("near_duplicate_pairs").get<std::size_t>();
    r.hamming_mean = doc.at("hamming_mean").get<double>();
    r.hamming_std = doc.at("hamming_std").get<double>();
    r.kl_grade = doc.at("kl_grade").get<double>();
    r.kl_gender = doc.at("kl_gender").get<double>();
    r.kl_academic_level = doc.at("kl_academic_level").get<double>();
    if (doc.contains("plan_match")) {
        PlanMatchRates pm;
        pm.grade = doc["plan_match"].at("grade").get<double>();
        pm.gender = doc["plan_match"].at("gender").get<double>();
        pm.academic_level = doc["plan_match"].at("academic_level").get<double>();
        pm.considered = doc["plan_match"].at("considered").get<std::size_t>();
        pm.missing_linkage = doc["plan_match"].at("missing_linkage").get<std::size_t>();
        r.plan_match = pm;
    }
    if (doc.contains("anchor_alignment"))
        r.anchor = doc.at("anchor_alignment").get<std::map<std::string, double>>();
    if (doc.contains("anchor_excluded"))
        r.anchor_excluded =
            doc.at("anchor_excluded").get<std::map<std::string, std::size_t>>();
    r.subject_coverage = doc.at("subject_mention_coverage").get<double>();
    r.contradiction_fraction = doc.at("hard_contradiction_fraction").get<double>();
    r.template_like_count = doc.at("template_like_count").get<std::size_t>();
    if (doc.contains("paragraph_lengths")) {
        for (auto it = doc["paragraph_lengths"].begin(); it != doc["paragraph_lengths"].end();
             ++it) {
            LengthSummary s;
            s.mean = it.value().at("mean").get<double>();
            s.min = it.value().at("min").get<std::size_t>();
            s.max = it.value().at("max").get<std::size_t>();
            s.below_band = it.value().at("below_band").get<std::size_t>();
            s.above_band = it.value().at("above_band").get<std::size_t>();
            r.lengths[it.key()] = s;
        }
    }
    if (doc.contains("issue_counts"))
        r.issue_counts = doc.at("issue_counts").get<std::map<std::string, std::size_t>>();
    if (doc.contains("top_problematic"))
        r.top_problematic = doc.at("top_problematic").get<std::vector<std::string>>();
    r.seed = doc.value("seed", 0ULL);
    return r;
}

inline std::vector<std::pair<std::string, std::string>> IntrinsicReport::flat_metrics() const {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    std::vector<std::pair<std::string, std::string>> rows = {
        {"persona_count", std::to_string(persona_count)},
        {"error_rate", fmt(error_rate)},
        {"warning_rate", fmt(warning_rate)},
        {"distinct1", fmt(distinct1)},
        {"distinct2", fmt(distinct2)},
        {"near_duplicate_pairs", std::to_string(near_duplicate_pairs)},
        {"hamming_mean", fmt(hamming_mean)},
        {"hamming_std", fmt(hamming_std)},
        {"kl_grade", fmt(kl_grade)},
        {"kl_gender", fmt(kl_gender)},
        {"kl_academic_level", fmt(kl_academic_level)},
        {"subject_mention_coverage", fmt(subject_coverage)},
        {"hard_contradiction_fraction", fmt(contradiction_fraction)},
        {"template_like_count", std::to_string(template_like_count)},
    };
    for (const auto& [name, r] : anchor) rows.emplace_back("anchor_" + name, fmt(r));
    return rows;
}

inline std::string intrinsic_report_csv(const IntrinsicReport& report) {
    std::string out = csv_row({"metric", "value"});
    for (const auto& [k, v] : report.flat_metrics()) out += csv_row({k, v});
    return out;
}

// Delta table for two intrinsic runs: metric, A, B, A-B rows matching the
// headline comparison metric set.
inline std::string compare_intrinsic_csv(const IntrinsicReport& a, const IntrinsicReport& b) {
    struct Row {
        const char* metric;
        double av;
        double bv;
    };
    const Row rows[] = {
        {"error_rate", a.error_rate, b.error_rate},
        {"warning_rate", a.warning_rate, b.warning_rate},
        {"distinct1", a.distinct1, b.distinct1},
        {"distinct2", a.distinct2, b.distinct2},
        {"near_duplicate_pairs", static_cast<double>(a.near_duplicate_pairs),
         static_cast<double>(b.near_duplicate_pairs)},
        {"hamming_mean", a.hamming_mean, b.hamming_mean},
        {"hamming_std", a.hamming_std, b.hamming_std},
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    std::string out = csv_row({"metric", "a", "b", "delta"});
    out += csv_row({"persona_count", std::to_string(a.persona_count),
                    std::to_string(b.persona_count),
                    std::to_string(static_cast<long long>(a.persona_count) -
                                   static_cast<long long>(b.persona_count))});
    for (const auto& r : rows) out += csv_row({r.metric, fmt(r.av), fmt(r.bv), fmt(r.av - r.bv)});
    return out;
}

}  // namespace personagen
