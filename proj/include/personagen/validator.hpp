#pragma once

// Executable constraint set R1-R15 plus the offline error/warning taxonomy.
//
// Three profiles:
//   fast    - low-cost structural screening (R3, R6, R7, R14, R15), no text
//             analysis;
//   deep    - all fifteen rules plus the tier-adaptive minimum-count checks
//             (warnings); used during generation-time validation;
//   offline - deep findings plus paragraph-length screens, remapped into the
//             hard-error / warning taxonomy used for corpus reporting.
//
// final_ready is definitional: no Error-severity issue in the report.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "personagen/lexicon.hpp"
#include "personagen/persona.hpp"

namespace personagen {

enum class Severity { Error, Warning };

// Machine-readable refinement of a finding; drives the offline remapping
// (e.g. a dimension whose keyword is present but whose level word cannot be
// located is a warning offline, while a fully missing dimension stays hard).
enum class IssueAspect {
    Default,
    MissingDimension,
    UnboundLevel,
    IdenticalLevels,
    Borderline,
};

struct Issue {
    std::string code;  // R1..R15 or a taxonomy code (ADAPT-*, LEN-*)
    Severity severity = Severity::Error;
    std::string description;
    std::string owner;
    std::vector<std::string> fields;
    std::string hint;
    IssueAspect aspect = IssueAspect::Default;
};

enum class ValidationProfile { Fast, Deep, Offline };

struct ValidationReport {
    std::vector<Issue> issues;
    bool final_ready = true;
    ValidationProfile profile = ValidationProfile::Deep;

    std::size_t error_count() const {
        std::size_t n = 0;
        for (const auto& i : issues)
            if (i.severity == Severity::Error) ++n;
        return n;
    }
    std::size_t warning_count() const { return issues.size() - error_count(); }

    bool has_code(const std::string& code) const {
        for (const auto& i : issues)
            if (i.code == code) return true;
        return false;
    }
};

namespace owner {
inline constexpr const char* kEnrollment = "Enrollment & Development";
inline constexpr const char* kAcademic = "Academic Profile";
inline constexpr const char* kValues = "Personality & Values";
inline constexpr const char* kSocialCreative = "Social & Creativity";
inline constexpr const char* kMentalHealth = "Mental Health";
inline constexpr const char* kSystem = "System";
}  // namespace owner

// Field-to-agent responsibility mapping.
inline std::string field_owner(const std::string& field_name) {
    static const std::map<std::string, std::string> table = {
        {field::kId, owner::kSystem},
        {field::kName, owner::kEnrollment},
        {field::kAge, owner::kEnrollment},
        {field::kGender, owner::kEnrollment},
        {field::kGrade, owner::kEnrollment},
        {field::kStages, owner::kEnrollment},
        {field::kAgentName, owner::kEnrollment},
        {field::kStrong, owner::kAcademic},
        {field::kWeak, owner::kAcademic},
        {field::kAcademicLevel, owner::kAcademic},
        {field::kPersonality, owner::kValues},
        {field::kValues, owner::kValues},
        {field::kSocial, owner::kSocialCreative},
        {field::kCreativity, owner::kSocialCreative},
        {field::kMentalHealth, owner::kMentalHealth},
    };
    auto it = table.find(field_name);
    return it == table.end() ? std::string() : it->second;
}

inline const std::vector<std::string>& agent_owned_fields(const std::string& owner_name) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {owner::kEnrollment,
         {field::kName, field::kAge, field::kGender, field::kGrade, field::kStages,
          field::kAgentName}},
        {owner::kAcademic, {field::kStrong, field::kWeak, field::kAcademicLevel}},
        {owner::kValues, {field::kPersonality, field::kValues}},
        {owner::kSocialCreative, {field::kSocial, field::kCreativity}},
        {owner::kMentalHealth, {field::kMentalHealth}},
    };
    static const std::vector<std::string> empty;
    auto it = table.find(owner_name);
    return it == table.end() ? empty : it->second;
}

struct LengthBand {
    std::size_t min_chars;
    std::size_t max_chars;
};

struct ValidatorConfig {
    LevelLexicon lexicon = default_level_lexicon();
    int binding_window = kDefaultBindingWindow;
    int age_grade_tolerance = 1;  // years beyond the g+5..g+6 band

    LengthBand social_band{160, 260};
    LengthBand values_band{150, 600};
    LengthBand creativity_band{150, 600};
    LengthBand mental_band{150, 600};

    // R12: clinical wording that must not appear in the mental-health text.
    std::vector<std::string> diagnostic_blocklist = {
        "severe depression",  "major depressive disorder",
        "bipolar disorder",   "schizophrenia",
        "need hospitalization", "needs hospitalization",
        "hospitalized",       "clinical diagnosis",
        "on medication",      "重度抑郁",
        "双相情感障碍",       "精神分裂",
        "住院治疗",
    };
    // Acceptable tendency wording (documentation of the boundary; phrases
    // here must never appear in the blocklist).
    std::vector<std::string> tendency_allowlist = {
        "may have", "tendency", "mild", "situational", "manageable", "recommend consultation",
    };

    // R5: impairment wording incompatible with a high physical/mental-health
    // value level.
    std::vector<std::string> impairment_phrases = {
        "severe functional impairment", "unable to attend school", "cannot function",
        "heavy clinical pathology",     "严重功能受损",
    };

    // R11 contradiction patterns: High tier vs chronic severe difficulty, and
    // high health level vs extreme distress wording.
    std::vector<std::string> difficulty_phrases = {
        "extremely struggling", "extreme difficulty", "chronic severe difficulty", "极度吃力",
    };
    std::vector<std::string> distress_phrases = {
        "extreme psychological distress", "extreme distress", "constant despair", "极端心理痛苦",
    };

    // R13 anti-template thresholds.
    std::size_t repeated_sentence_count = 3;
    double trigram_overlap_threshold = 0.5;

    RiskRuleTable risk_rules = default_risk_rules();
};

inline const ValidatorConfig& default_validator_config() {
    static const ValidatorConfig cfg{};
    return cfg;
}

namespace detail {

inline Issue make_issue(std::string code, Severity sev, std::string desc, std::string owner_name,
                        std::vector<std::string> fields, std::string hint,
                        IssueAspect aspect = IssueAspect::Default) {
    Issue i;
    i.code = std::move(code);
    i.severity = sev;
    i.description = std::move(desc);
    i.owner = std::move(owner_name);
    i.fields = std::move(fields);
    i.hint = std::move(hint);
    i.aspect = aspect;
    return i;
}

inline bool contains_any(std::string_view text, const std::vector<std::string>& phrases,
                         std::string* which = nullptr) {
    for (const auto& p : phrases) {
        if (contains_ci(text, p)) {
            if (which) *which = p;
            return true;
        }
    }
    return false;
}

// true when any keyword of the dimension occurs in the text at all
inline bool dimension_mentioned(std::string_view text, const Dimension& dim) {
    for (const auto& kw : dim.keywords)
        if (contains_ci(text, kw)) return true;
    return false;
}

inline std::optional<int> mention_score(const LevelExtraction& ex, const std::string& dim_id) {
    for (const auto& m : ex.mentions)
        if (m.dimension == dim_id) return m.score;
    return std::nullopt;
}

// Issues for one narrative component: every dimension needs a keyword and a
// bound level word.
inline void check_dimensions(const Persona& p, const std::string& text,
                             const std::string& field_name, const std::string& owner_name,
                             const std::vector<Dimension>& dims, const std::string& code,
                             const LevelExtraction& extraction, std::vector<Issue>& out) {
    if (text.empty()) return;  // R7 reports missing fields
    for (const auto& dim_id : extraction.missing) {
        const Dimension* dim = nullptr;
        for (const auto& d : dims)
            if (d.id == dim_id) dim = &d;
        const bool mentioned = dim && dimension_mentioned(text, *dim);
        if (mentioned) {
            out.push_back(make_issue(
                code, Severity::Error,
                "dimension '" + dim_id + "' has no locatable level word", owner_name,
                {field_name},
                "State an explicit level (High/Relatively High/Upper-Mid/Mid/Relatively "
                "Low/Low) next to '" + dim_id + "'.",
                IssueAspect::UnboundLevel));
        } else {
            out.push_back(make_issue(
                code, Severity::Error, "dimension '" + dim_id + "' is missing", owner_name,
                {field_name},
                "Cover the '" + dim_id + "' dimension explicitly with a level word.",
                IssueAspect::MissingDimension));
        }
    }
    (void)p;
}

}  // namespace detail

// Per-persona level extractions shared across the text-analysis rules so a
// deep pass scans each narrative field once.
struct ExtractionCache {
    LevelExtraction values;
    LevelExtraction creativity;
    LevelExtraction mental;
    RiskExtraction risk;
};

inline ExtractionCache make_extraction_cache(const Persona& p, const ValidatorConfig& cfg) {
    ExtractionCache c;
    c.values =
        extract_level_mentions(p.values_text, cfg.lexicon, values_dimensions(), cfg.binding_window);
    c.creativity = extract_level_mentions(p.creativity_text, cfg.lexicon, creativity_dimensions(),
                                          cfg.binding_window);
    c.mental = extract_level_mentions(p.mental_health_text, cfg.lexicon,
                                      mental_health_dimensions(), cfg.binding_window);
    c.risk = extract_risk(p.mental_health_text, cfg.risk_rules);
    return c;
}

// --- R1: age-grade norm -----------------------------------------------------
inline std::vector<Issue> check_r1(const Persona& p, const ValidatorConfig& cfg) {
    std::vector<Issue> out;
    if (!p.grade.empty() && !p.grade_number()) {
        out.push_back(detail::make_issue(
            "R1", Severity::Error, "grade '" + p.grade + "' is outside Grade 1-12",
            owner::kEnrollment, {field::kGrade}, "Use a grade between Grade 1 and Grade 12."));
        return out;
    }
    if (!p.age || !p.grade_number()) return out;  // missing pieces are R7's findings
    const int g = *p.grade_number();
    const int lo = g + 5 - cfg.age_grade_tolerance;
    const int hi = g + 6 + cfg.age_grade_tolerance;
    if (*p.age < lo || *p.age > hi) {
        out.push_back(detail::make_issue(
            "R1", Severity::Error,
            "age " + std::to_string(*p.age) + " is implausible for " + p.grade + " (expected " +
                std::to_string(lo) + "-" + std::to_string(hi) + ")",
            owner::kEnrollment, {field::kAge, field::kGrade},
            "Align Age with Grade (about grade+5 to grade+6 years, +/-1)."));
    }
    return out;
}

// --- R2: developmental-stage plausibility ------------------------------------
inline std::vector<Issue> check_r2(const Persona& p, const ValidatorConfig& cfg) {
    (void)cfg;
    std::vector<Issue> out;
    if (!p.stages || !p.age) return out;
    struct Row {
        const char* theory;
        const std::string* label;
        std::optional<StageBand> band;
    };
    const Row rows[] = {
        {"Piaget", &p.stages->piaget, piaget_band(p.stages->piaget)},
        {"Erikson", &p.stages->erikson, erikson_band(p.stages->erikson)},
        {"Kohlberg", &p.stages->kohlberg, kohlberg_band(p.stages->kohlberg)},
    };
    for (const auto& row : rows) {
        if (row.label->empty()) continue;  // R7 reports missing subkeys
        switch (stage_fit(row.band, *p.age)) {
            case StageFit::Ok:
                break;
            case StageFit::UnknownLabel:
                out.push_back(detail::make_issue(
                    "R2", Severity::Error,
                    std::string(row.theory) + " stage label '" + *row.label +
                        "' is not in the closed label set",
                    owner::kEnrollment, {field::kStages},
                    std::string("Use a standard ") + row.theory + " stage label."));
                break;
            case StageFit::Violation:
                out.push_back(detail::make_issue(
                    "R2", Severity::Error,
                    std::string(row.theory) + " stage '" + *row.label +
                        "' is incompatible with age " + std::to_string(*p.age),
                    owner::kEnrollment, {field::kStages, field::kAge},
                    std::string("Pick a ") + row.theory + " stage compatible with the age band."));
                break;
            case StageFit::Borderline:
                out.push_back(detail::make_issue(
                    "R2", Severity::Warning,
                    std::string(row.theory) + " stage '" + *row.label + "' is borderline for age " +
                        std::to_string(*p.age),
                    owner::kEnrollment, {field::kStages, field::kAge},
                    "Borderline stage assignment; acceptable but worth a second look.",
                    IssueAspect::Borderline));
                break;
        }
    }
    return out;
}

// --- R3: subject sets -------------------------------------------------------
inline std::vector<Issue> check_r3(const Persona& p, const ValidatorConfig&) {
    std::vector<Issue> out;
    if (p.strong_subjects.empty() || p.weak_subjects.empty()) {
        out.push_back(detail::make_issue(
            "R3", Severity::Error, "Strong Subjects and Weak Subjects must both be non-empty",
            owner::kAcademic, {field::kStrong, field::kWeak},
            "Provide at least one strong and one weak subject."));
        return out;
    }
    std::set<std::string> strong;
    for (const auto& s : p.strong_subjects) strong.insert(to_lower(s));
    std::vector<std::string> overlap;
    for (const auto& s : p.weak_subjects)
        if (strong.count(to_lower(s))) overlap.push_back(s);
    if (!overlap.empty()) {
        std::string joined;
        for (const auto& s : overlap) joined += (joined.empty() ? "" : ", ") + s;
        out.push_back(detail::make_issue(
            "R3", Severity::Error, "subjects appear in both strong and weak sets: " + joined,
            owner::kAcademic, {field::kStrong, field::kWeak},
            "Make Strong Subjects and Weak Subjects disjoint."));
    }
    return out;
}

// --- R4: creativity level coherence ------------------------------------------
inline std::vector<Issue> check_r4(const Persona& p, const ValidatorConfig& cfg,
                                   const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    if (p.creativity_text.empty()) return out;
    const LevelExtraction ex =
        cache ? cache->creativity
              : extract_level_mentions(p.creativity_text, cfg.lexicon, creativity_dimensions(),
                                       cfg.binding_window);
    const auto feasibility = detail::mention_score(ex, "feasibility");
    const auto proposing = detail::mention_score(ex, "proposing solutions");
    if (feasibility && proposing && *feasibility <= 2 && *proposing > 3) {
        out.push_back(detail::make_issue(
            "R4", Severity::Error,
            "proposing solutions exceeds a mid-level rating while feasibility is relatively "
            "low/low",
            owner::kSocialCreative, {field::kCreativity},
            "When feasibility is relatively low or low, cap proposing solutions at Mid."));
    }
    if (ex.missing.empty() && ex.mentions.size() == creativity_dimensions().size()) {
        bool identical = true;
        for (const auto& m : ex.mentions)
            if (m.score != ex.mentions.front().score) identical = false;
        if (identical) {
            out.push_back(detail::make_issue(
                "R4", Severity::Warning, "all eight creativity dimensions share one level",
                owner::kSocialCreative, {field::kCreativity},
                "Vary the creativity levels; profiles need ups and downs.",
                IssueAspect::IdenticalLevels));
        }
    }
    return out;
}

// --- R5: values vs mental-health compatibility --------------------------------
inline std::vector<Issue> check_r5(const Persona& p, const ValidatorConfig& cfg,
                                   const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    if (p.values_text.empty() || p.mental_health_text.empty()) return out;
    const LevelExtraction ex =
        cache ? cache->values
              : extract_level_mentions(p.values_text, cfg.lexicon, values_dimensions(),
                                       cfg.binding_window);
    const auto health = detail::mention_score(ex, "physical-mental health");
    std::string phrase;
    if (health && *health >= 5 &&
        detail::contains_any(p.mental_health_text, cfg.impairment_phrases, &phrase)) {
        out.push_back(detail::make_issue(
            "R5", Severity::Error,
            "values report stable positive physical/mental health but the mental-health text "
            "describes '" + phrase + "'",
            owner::kMentalHealth, {field::kValues, field::kMentalHealth},
            "Remove severe-impairment wording or lower the health value level."));
    }
    return out;
}

// --- R6: agent-name grammar ---------------------------------------------------
inline std::vector<Issue> check_r6(const Persona& p, const ValidatorConfig&) {
    std::vector<Issue> out;
    if (p.agent_identifier.empty()) return out;
    const auto check = validate_agent_identifier(p.agent_identifier);
    if (!check.ok) {
        out.push_back(detail::make_issue(
            "R6", Severity::Error,
            "agent name '" + p.agent_identifier + "' is invalid: " + check.reason,
            owner::kEnrollment, {field::kAgentName},
            "Use lowercase pinyin+tone syllables, surname_givenname, 1-2 surname and 1-3 given "
            "syllables (2-syllable surname cannot pair with 3-syllable given name)."));
    }
    return out;
}

// --- R7: required keys ---------------------------------------------------------
inline std::vector<Issue> check_r7(const Persona& p, const ValidatorConfig&) {
    std::vector<Issue> out;
    auto missing = [&](const std::string& f, const std::string& detail_name = {}) {
        const std::string shown = detail_name.empty() ? f : detail_name;
        out.push_back(detail::make_issue("R7", Severity::Error,
                                         "required key '" + shown + "' is missing or empty",
                                         field_owner(f), {f},
                                         "Fill in the '" + shown + "' field."));
    };
    if (p.id.empty()) missing(field::kId);
    if (p.name.empty()) missing(field::kName);
    if (!p.age) missing(field::kAge);
    if (p.gender.empty()) missing(field::kGender);
    if (p.grade.empty()) missing(field::kGrade);
    if (!p.stages) {
        missing(field::kStages);
    } else {
        if (p.stages->piaget.empty()) missing(field::kStages, field::kPiaget);
        if (p.stages->erikson.empty()) missing(field::kStages, field::kErikson);
        if (p.stages->kohlberg.empty()) missing(field::kStages, field::kKohlberg);
    }
    if (p.agent_identifier.empty()) missing(field::kAgentName);
    if (p.strong_subjects.empty()) missing(field::kStrong);
    if (p.weak_subjects.empty()) missing(field::kWeak);
    if (p.academic_level.empty()) missing(field::kAcademicLevel);
    if (p.personality.empty()) missing(field::kPersonality);
    if (p.values_text.empty()) missing(field::kValues);
    if (p.social_relations.empty()) missing(field::kSocial);
    if (p.creativity_text.empty()) missing(field::kCreativity);
    if (p.mental_health_text.empty()) missing(field::kMentalHealth);
    return out;
}

// --- R8: seven value dimensions ------------------------------------------------
inline std::vector<Issue> check_r8(const Persona& p, const ValidatorConfig& cfg,
                                   const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    const LevelExtraction ex =
        cache ? cache->values
              : extract_level_mentions(p.values_text, cfg.lexicon, values_dimensions(),
                                       cfg.binding_window);
    detail::check_dimensions(p, p.values_text, field::kValues, owner::kValues,
                             values_dimensions(), "R8", ex, out);
    return out;
}

// --- R9: eight creativity dimensions + radar summary ----------------------------
inline std::vector<Issue> check_r9(const Persona& p, const ValidatorConfig& cfg,
                                   const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    const LevelExtraction ex =
        cache ? cache->creativity
              : extract_level_mentions(p.creativity_text, cfg.lexicon, creativity_dimensions(),
                                       cfg.binding_window);
    detail::check_dimensions(p, p.creativity_text, field::kCreativity, owner::kSocialCreative,
                             creativity_dimensions(), "R9", ex, out);
    if (!p.creativity_text.empty() && !contains_ci(p.creativity_text, "radar") &&
        !contains_ci(p.creativity_text, "summary") && !contains_ci(p.creativity_text, "雷达")) {
        out.push_back(detail::make_issue(
            "R9", Severity::Error, "creativity paragraph lacks a radar-style summary",
            owner::kSocialCreative, {field::kCreativity},
            "End the paragraph with a radar summary naming strengths and shortcomings."));
    }
    return out;
}

// --- R10: mental-health slot inventory -------------------------------------------
inline std::vector<Issue> check_r10(const Persona& p, const ValidatorConfig& cfg,
                                    const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    if (p.mental_health_text.empty()) return out;
    const LevelExtraction ex =
        cache ? cache->mental
              : extract_level_mentions(p.mental_health_text, cfg.lexicon,
                                       mental_health_dimensions(), cfg.binding_window);
    detail::check_dimensions(p, p.mental_health_text, field::kMentalHealth, owner::kMentalHealth,
                             mental_health_dimensions(), "R10", ex, out);
    static const std::vector<std::string> nondiagnostic = {
        "insufficient information", "no significant symptom", "may have", "may occasionally",
        "tendency", "tendencies", "recommend further assessment", "recommend consultation",
        "无明显", "倾向", "建议进一步评估"};
    static const std::vector<std::string> background = {
        "background", "pressure", "stress", "conflict", "event", "背景", "压力", "冲突"};
    static const std::vector<std::string> support = {
        "support", "coping", "cope", "school resource", "teacher", "peer",
        "支持", "应对", "老师", "同伴"};
    struct SlotCheck {
        const char* slot;
        const std::vector<std::string>* phrases;
        const char* hint;
    };
    const SlotCheck slots[] = {
        {"non-diagnostic statement", &nondiagnostic,
         "Include a non-diagnostic risk/tendency statement (e.g. 'may have ... tendency')."},
        {"background context", &background, "Describe background stressors briefly."},
        {"support/coping", &support, "Describe current supports and coping strategies."},
    };
    for (const auto& s : slots) {
        if (!detail::contains_any(p.mental_health_text, *s.phrases)) {
            out.push_back(detail::make_issue(
                "R10", Severity::Error,
                std::string("mental-health paragraph lacks the ") + s.slot + " slot",
                owner::kMentalHealth, {field::kMentalHealth}, s.hint));
        }
    }
    return out;
}

// --- R11: cross-field hard contradictions -----------------------------------------
inline std::vector<Issue> check_r11(const Persona& p, const ValidatorConfig& cfg,
                                    const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    std::string phrase;
    if (p.tier() == Tier::High) {
        for (const auto& [fname, text] : narrative_fields(p)) {
            if (detail::contains_any(*text, cfg.difficulty_phrases, &phrase)) {
                out.push_back(detail::make_issue(
                    "R11", Severity::Error,
                    "top-tier academic level contradicts self-reported '" + phrase + "' in " +
                        fname,
                    field_owner(fname), {field::kAcademicLevel, fname},
                    "Resolve the contradiction between the academic tier and the narrative."));
            }
        }
    }
    if (!p.values_text.empty() && !p.mental_health_text.empty()) {
        const LevelExtraction ex =
            cache ? cache->values
                  : extract_level_mentions(p.values_text, cfg.lexicon, values_dimensions(),
                                           cfg.binding_window);
        const auto health = detail::mention_score(ex, "physical-mental health");
        if (health && *health >= 5 &&
            detail::contains_any(p.mental_health_text, cfg.distress_phrases, &phrase)) {
            out.push_back(detail::make_issue(
                "R11", Severity::Error,
                "high physical/mental-health level contradicts '" + phrase +
                    "' in the mental-health text",
                owner::kMentalHealth, {field::kValues, field::kMentalHealth},
                "Soften the distress wording or lower the health value level."));
        }
    }
    return out;
}

// --- R12: non-diagnostic language ---------------------------------------------------
inline std::vector<Issue> check_r12(const Persona& p, const ValidatorConfig& cfg) {
    std::vector<Issue> out;
    std::string phrase;
    if (!p.mental_health_text.empty() &&
        detail::contains_any(p.mental_health_text, cfg.diagnostic_blocklist, &phrase)) {
        out.push_back(detail::make_issue(
            "R12", Severity::Error, "clinical wording '" + phrase + "' in the mental-health text",
            owner::kMentalHealth, {field::kMentalHealth},
            "Use non-diagnostic educational language ('may have ... tendency', 'mild ... "
            "experience', 'recommend further assessment')."));
    }
    return out;
}

// --- R13: readability / anti-template ------------------------------------------------
inline std::vector<Issue> check_r13(const Persona& p, const ValidatorConfig& cfg) {
    std::vector<Issue> out;
    // sentence repeated >= threshold within the persona
    std::map<std::string, int> sentence_counts;
    for (const auto& [fname, text] : narrative_fields(p)) {
        (void)fname;
        std::string current;
        auto flush = [&] {
            const std::string norm = normalize_text(current);
            if (norm.size() > 10) sentence_counts[norm]++;
            current.clear();
        };
        for (std::size_t i = 0; i < text->size(); ++i) {
            const char c = (*text)[i];
            current.push_back(c);
            if (c == '.' || c == '!' || c == '?' || c == ';') flush();
            // CJK sentence enders
            if (i >= 2) {
                const std::string_view tail(text->data() + i - 2, 3);
                if (tail == "\xe3\x80\x82" || tail == "\xef\xbc\x81" || tail == "\xef\xbc\x9f")
                    flush();
            }
        }
        flush();
    }
    for (const auto& [sentence, count] : sentence_counts) {
        if (static_cast<std::size_t>(count) >= cfg.repeated_sentence_count) {
            out.push_back(detail::make_issue(
                "R13", Severity::Warning,
                "a sentence repeats " + std::to_string(count) + " times: '" +
                    sentence.substr(0, 60) + "...'",
                owner::kValues, {field::kValues, field::kCreativity, field::kMentalHealth},
                "Rewrite repeated sentences with varied phrasing."));
            break;
        }
    }
    // trigram-set Jaccard between two narrative fields (trigrams packed into
    // 24-bit keys and kept as sorted unique vectors)
    auto trigrams = [](const std::string& text) {
        std::vector<std::uint32_t> grams;
        const std::string norm = normalize_text(text);
        if (norm.size() >= 3) {
            grams.reserve(norm.size());
            for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
                grams.push_back((static_cast<std::uint32_t>(static_cast<unsigned char>(norm[i]))
                                 << 16) |
                                (static_cast<std::uint32_t>(static_cast<unsigned char>(norm[i + 1]))
                                 << 8) |
                                static_cast<std::uint32_t>(static_cast<unsigned char>(norm[i + 2])));
            }
            std::sort(grams.begin(), grams.end());
            grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        }
        return grams;
    };
    const auto fields = narrative_fields(p);
    std::array<std::vector<std::uint32_t>, 5> gram_sets;
    for (std::size_t i = 0; i < fields.size(); ++i) gram_sets[i] = trigrams(*fields[i].second);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        for (std::size_t j = i + 1; j < fields.size(); ++j) {
            const auto& a = gram_sets[i];
            const auto& b = gram_sets[j];
            if (a.empty() || b.empty()) continue;
            std::size_t inter = 0;
            for (std::size_t x = 0, y = 0; x < a.size() && y < b.size();) {
                if (a[x] == b[y]) {
                    ++inter;
                    ++x;
                    ++y;
                } else if (a[x] < b[y]) {
                    ++x;
                } else {
                    ++y;
                }
            }
            const double overlap = static_cast<double>(inter) /
                                   static_cast<double>(a.size() + b.size() - inter);
            if (overlap > cfg.trigram_overlap_threshold) {
                out.push_back(detail::make_issue(
                    "R13", Severity::Warning,
                    "trigram overlap between " + fields[i].first + " and " + fields[j].first +
                        " is " + std::to_string(overlap),
                    field_owner(fields[j].first), {fields[i].first, fields[j].first},
                    "Reduce shared boilerplate between narrative fields."));
            }
        }
    }
    return out;
}

// --- R14: single-paragraph rule ---------------------------------------------------------
inline std::vector<Issue> check_r14(const Persona& p, const ValidatorConfig&) {
    std::vector<Issue> out;
    const std::array<std::pair<const char*, const std::string*>, 3> fields = {{
        {field::kValues, &p.values_text},
        {field::kCreativity, &p.creativity_text},
        {field::kMentalHealth, &p.mental_health_text},
    }};
    auto has_list_marker = [](const std::string& text) {
        for (std::size_t i = 0; i < text.size(); ++i) {
            const bool at_boundary =
                i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1]));
            if (!at_boundary) continue;
            const char c = text[i];
            if ((c == '-' || c == '*') && i + 1 < text.size() && text[i + 1] == ' ') return true;
            if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                if (j < text.size() && (text[j] == '.' || text[j] == ')') && j + 1 < text.size() &&
                    text[j + 1] == ' ')
                    return true;
            }
        }
        return text.find("```") != std::string::npos || text.find("\xe2\x80\xa2") != std::string::npos;
    };
    for (const auto& [fname, text] : fields) {
        if (text->empty()) continue;
        if (text->find('\n') != std::string::npos) {
            out.push_back(detail::make_issue(
                "R14", Severity::Error,
                std::string(fname) + " must be a single continuous paragraph (line break found)",
                field_owner(fname), {fname}, "Join the text into one paragraph."));
        } else if (has_list_marker(*text)) {
            out.push_back(detail::make_issue(
                "R14", Severity::Error,
                std::string(fname) + " contains list/bullet/numbering markers", field_owner(fname),
                {fname}, "Remove list markers; write one continuous paragraph."));
        }
    }
    return out;
}

// --- R15: fixed academic labels ------------------------------------------------------------
inline std::vector<Issue> check_r15(const Persona& p, const ValidatorConfig&) {
    std::vector<Issue> out;
    if (!p.academic_level.empty() && !parse_academic_label(p.academic_level)) {
        out.push_back(detail::make_issue(
            "R15", Severity::Error,
            "academic level '" + p.academic_level + "' is not one of the four fixed labels",
            owner::kAcademic, {field::kAcademicLevel},
            std::string("Use exactly one of: '") + academic_label(Tier::High) + "', '" +
                academic_label(Tier::Medium) + "', '" + academic_label(Tier::Low) + "', '" +
                academic_label(Tier::Poor) + "'."));
    }
    return out;
}

// --- Tier-adaptive minimum-count checks (warnings) -------------------------------------------
inline std::vector<Issue> check_adaptive(const Persona& p, const ValidatorConfig& cfg,
                                         const ExtractionCache* cache = nullptr) {
    std::vector<Issue> out;
    const auto tier = p.tier();
    if (!tier) return out;

    ExtractionCache local;
    if (!cache) {
        local = make_extraction_cache(p, cfg);
        cache = &local;
    }
    auto count_at_most_mid = [&](const LevelExtraction& ex) {
        int n = 0;
        for (const auto& m : ex.mentions)
            if (m.score <= 3) ++n;
        return n;
    };

    int need_values = 0, need_creativity = 0;
    switch (*tier) {
        case Tier::Medium: need_values = 1; need_creativity = 2; break;
        case Tier::Low: need_values = 2; need_creativity = 3; break;
        case Tier::Poor: need_values = 3; need_creativity = 4; break;
        case Tier::High: break;
    }
    if (need_values > 0 && !p.values_text.empty()) {
        const int have = count_at_most_mid(cache->values);
        if (have < need_values) {
            out.push_back(detail::make_issue(
                "ADAPT-VALUES", Severity::Warning,
                "tier " + std::string(tier_name(*tier)) + " expects at least " +
                    std::to_string(need_values) + " value dimensions at Mid/Relatively Low/Low (" +
                    std::to_string(have) + " found)",
                owner::kValues, {field::kValues},
                "Describe more value dimensions at Mid/Relatively Low/Low."));
        }
    }
    if (need_creativity > 0 && !p.creativity_text.empty()) {
        const int have = count_at_most_mid(cache->creativity);
        if (have < need_creativity) {
            out.push_back(detail::make_issue(
                "ADAPT-CREATIVITY", Severity::Warning,
                "tier " + std::string(tier_name(*tier)) + " expects at least " +
                    std::to_string(need_creativity) +
                    " creativity dimensions at Mid/Relatively Low/Low (" + std::to_string(have) +
                    " found)",
                owner::kSocialCreative, {field::kCreativity},
                "Lower some creativity dimension levels to Mid/Relatively Low/Low."));
        }
    }
    if ((*tier == Tier::Low || *tier == Tier::Poor) && !p.mental_health_text.empty()) {
        const auto& ex = cache->mental;
        const auto overall = detail::mention_score(ex, "overall mental state");
        const auto happiness = detail::mention_score(ex, "happiness index");
        const bool states_ok = (overall && *overall <= 3) || (happiness && *happiness <= 3);
        const auto& risk = cache->risk;
        const bool risk_ok = (risk.depression_class && *risk.depression_class >= 2) ||
                             (risk.anxiety_class && *risk.anxiety_class >= 2);
        if ((overall || happiness) && !states_ok) {
            out.push_back(detail::make_issue(
                "ADAPT-MENTAL", Severity::Warning,
                "low-tier persona reports uniformly high mental state and happiness",
                owner::kMentalHealth, {field::kMentalHealth},
                "Use a mid-to-low description for at least one of overall mental state or "
                "happiness index."));
        }
        if (risk.parseable() && !risk_ok) {
            out.push_back(detail::make_issue(
                "ADAPT-MENTAL", Severity::Warning,
                "low-tier persona reports no depression/anxiety risk at all", owner::kMentalHealth,
                {field::kMentalHealth},
                "Give at least one risk a 'Mild/Some Possibility/Needs Attention' description."));
        }
    }
    return out;
}

// --- Paragraph-length screens (offline profile) -----------------------------------------------
inline std::vector<Issue> check_lengths(const Persona& p, const ValidatorConfig& cfg) {
    std::vector<Issue> out;
    struct Row {
        const char* code;
        const char* fname;
        const std::string* text;
        LengthBand band;
    };
    const Row rows[] = {
        {"LEN-SOCIAL", field::kSocial, &p.social_relations, cfg.social_band},
        {"LEN-VALUES", field::kValues, &p.values_text, cfg.values_band},
        {"LEN-CREATIVITY", field::kCreativity, &p.creativity_text, cfg.creativity_band},
        {"LEN-MENTAL", field::kMentalHealth, &p.mental_health_text, cfg.mental_band},
    };
    for (const auto& row : rows) {
        if (row.text->empty()) continue;
        const std::size_t len = utf8_length(*row.text);
        if (len < row.band.min_chars || len > row.band.max_chars) {
            out.push_back(detail::make_issue(
                row.code, Severity::Warning,
                std::string(row.fname) + " length " + std::to_string(len) +
                    " is outside the target band " + std::to_string(row.band.min_chars) + "-" +
                    std::to_string(row.band.max_chars),
                field_owner(row.fname), {row.fname},
                "Adjust the paragraph length toward the target band."));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

inline ValidationReport fast_validate(const Persona& p,
                                      const ValidatorConfig& cfg = default_validator_config()) {
    ValidationReport report;
    report.profile = ValidationProfile::Fast;
    for (auto&& issues : {check_r6(p, cfg), check_r7(p, cfg), check_r14(p, cfg),
                          check_r15(p, cfg), check_r3(p, cfg)})
        for (auto&& i : issues) report.issues.push_back(std::move(i));
    report.final_ready = report.error_count() == 0;
    return report;
}

inline ValidationReport deep_validate(const Persona& p,
                                      const ValidatorConfig& cfg = default_validator_config()) {
    ValidationReport report;
    report.profile = ValidationProfile::Deep;
    const ExtractionCache cache = make_extraction_cache(p, cfg);
    for (auto&& issues :
         {check_r1(p, cfg), check_r2(p, cfg), check_r3(p, cfg), check_r4(p, cfg, &cache),
          check_r5(p, cfg, &cache), check_r6(p, cfg), check_r7(p, cfg), check_r8(p, cfg, &cache),
          check_r9(p, cfg, &cache), check_r10(p, cfg, &cache), check_r11(p, cfg, &cache),
          check_r12(p, cfg), check_r13(p, cfg), check_r14(p, cfg), check_r15(p, cfg),
          check_adaptive(p, cfg, &cache)})
        for (auto&& i : issues) report.issues.push_back(std::move(i));
    report.final_ready = report.error_count() == 0;
    return report;
}

inline std::vector<Issue> check_rule(const std::string& rule_id, const Persona& p,
                                     const ValidatorConfig& cfg = default_validator_config()) {
    using Check = std::vector<Issue> (*)(const Persona&, const ValidatorConfig&);
    static const std::map<std::string, Check> dispatch = {
        {"R1", check_r1},
        {"R2", check_r2},
        {"R3", check_r3},
        {"R4", [](const Persona& q, const ValidatorConfig& c) { return check_r4(q, c); }},
        {"R5", [](const Persona& q, const ValidatorConfig& c) { return check_r5(q, c); }},
        {"R6", check_r6},
        {"R7", check_r7},
        {"R8", [](const Persona& q, const ValidatorConfig& c) { return check_r8(q, c); }},
        {"R9", [](const Persona& q, const ValidatorConfig& c) { return check_r9(q, c); }},
        {"R10", [](const Persona& q, const ValidatorConfig& c) { return check_r10(q, c); }},
        {"R11", [](const Persona& q, const ValidatorConfig& c) { return check_r11(q, c); }},
        {"R12", check_r12},
        {"R13", check_r13},
        {"R14", check_r14},
        {"R15", check_r15},
    };
    auto it = dispatch.find(rule_id);
    if (it == dispatch.end()) throw std::invalid_argument("unknown rule id: " + rule_id);
    return it->second(p, cfg);
}

// Offline taxonomy: deep findings plus length screens, remapped into hard
// errors vs warnings. Hard: missing/empty fields, invalid labels, malformed
// identifier, paragraph-format violations, fully missing mandated dimensions,
// non-borderline age/stage violations. Soft: everything else (length bands,
// unbound level words, radar contradictions, diagnostic-label tension,
// borderline stages, template repetition, adaptive shortfalls).
struct OfflineClassification {
    std::vector<Issue> errors;
    std::vector<Issue> warnings;
};

inline OfflineClassification offline_classify(const Persona& p,
                                              const ValidatorConfig& cfg =
                                                  default_validator_config()) {
    OfflineClassification out;
    auto deep = deep_validate(p, cfg);
    for (auto& issue : deep.issues) {
        bool hard = false;
        const std::string& c = issue.code;
        if (c == "R1" || c == "R3" || c == "R6" || c == "R7" || c == "R14" || c == "R15") {
            hard = issue.severity == Severity::Error;
        } else if (c == "R2") {
            hard = issue.severity == Severity::Error;  // borderline is a warning already
        } else if (c == "R8" || c == "R9" || c == "R10") {
            // fully missing dimension/slot stays hard; unbound level word softens
            hard = issue.aspect != IssueAspect::UnboundLevel;
        } else {
            hard = false;  // R4, R5, R11, R12, R13, ADAPT-*
        }
        issue.severity = hard ? Severity::Error : Severity::Warning;
        (hard ? out.errors : out.warnings).push_back(std::move(issue));
    }
    for (auto&& issue : check_lengths(p, cfg)) out.warnings.push_back(std::move(issue));
    return out;
}

// ---------------------------------------------------------------------------
// Issue report serialization (issues.jsonl mirrors the validator output
// schema: {"issues": [{code, desc, owner, fields, hint}], "final_ready": b}).
// ---------------------------------------------------------------------------

inline json issue_to_json(const Issue& i) {
    json out = json::object();
    out["code"] = i.code;
    out["severity"] = i.severity == Severity::Error ? "Error" : "Warning";
    out["desc"] = i.description;
    out["owner"] = i.owner;
    out["fields"] = i.fields;
    out["hint"] = i.hint;
    return out;
}

inline std::string report_to_line(const std::string& persona_id, const ValidationReport& report) {
    json out = json::object();
    out["persona_id"] = persona_id;
    json issues = json::array();
    for (const auto& i : report.issues) issues.push_back(issue_to_json(i));
    out["issues"] = std::move(issues);
    out["final_ready"] = report.final_ready;
    return out.dump();
}

}  // namespace personagen
