#pragma once

// Persona data model and the JSONL corpus format.
//
// A persona is a hybrid record: categorical labels (grade, gender, academic
// tier, developmental stages) plus five construct-driven narrative fields.
// Canonical field names are English; Chinese originals are accepted through
// an alias map and resolved during parsing. Canonical key order (documented
// here, relied on by the byte-reproducibility guarantees):
//
//   id, Name, Age, Gender, Grade, Developmental Stage, Agent Name,
//   Strong Subjects, Weak Subjects, Academic Level, Personality, Values,
//   Social Relationships, Creativity, Mental Health, _slot,
//   _sampling-constraint, then unknown keys in sorted order.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "personagen/util.hpp"

namespace personagen {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Categorical vocabularies
// ---------------------------------------------------------------------------

enum class Gender { Male, Female };

enum class Tier { High = 0, Medium = 1, Low = 2, Poor = 3 };

enum class SubjectCluster { Stem = 0, HumanitiesSocial = 1, ArtsPe = 2, LanguagesBiology = 3 };

inline constexpr int kGradeCount = 12;
inline constexpr int kTierCount = 4;
inline constexpr int kGenderCount = 2;
inline constexpr int kClusterCount = 4;

inline const char* gender_name(Gender g) { return g == Gender::Male ? "Male" : "Female"; }

inline const char* tier_name(Tier t) {
    switch (t) {
        case Tier::High: return "High";
        case Tier::Medium: return "Medium";
        case Tier::Low: return "Low";
        case Tier::Poor: return "Poor";
    }
    return "";
}

// The four fixed academic-level labels. Any other string is a rule violation.
inline const char* academic_label(Tier t) {
    switch (t) {
        case Tier::High: return "High: Top 10%";
        case Tier::Medium: return "Medium: Top 10%-30%";
        case Tier::Low: return "Low: Top 30%-50%";
        case Tier::Poor: return "Poor: Bottom 50%";
    }
    return "";
}

// Numeric anchor used for correlations: High=4 ... Poor=1.
inline int tier_anchor(Tier t) { return 4 - static_cast<int>(t); }

inline const char* cluster_name(SubjectCluster c) {
    switch (c) {
        case SubjectCluster::Stem: return "STEM";
        case SubjectCluster::HumanitiesSocial: return "humanities/social";
        case SubjectCluster::ArtsPe: return "arts/PE";
        case SubjectCluster::LanguagesBiology: return "languages/biology";
    }
    return "";
}

inline const std::vector<std::string>& cluster_subjects(SubjectCluster c) {
    static const std::vector<std::string> stem = {"Mathematics", "Physics", "Chemistry",
                                                  "Information Technology"};
    static const std::vector<std::string> hum = {"History", "Geography", "Politics"};
    static const std::vector<std::string> arts = {"Art", "Music", "Physical Education"};
    static const std::vector<std::string> lang = {"Chinese", "English", "Biology"};
    switch (c) {
        case SubjectCluster::Stem: return stem;
        case SubjectCluster::HumanitiesSocial: return hum;
        case SubjectCluster::ArtsPe: return arts;
        case SubjectCluster::LanguagesBiology: return lang;
    }
    return stem;
}

inline std::optional<Gender> parse_gender(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "male" || v == "m" || v == "男") return Gender::Male;
    if (v == "female" || v == "f" || v == "女") return Gender::Female;
    return std::nullopt;
}

// Lenient tier word parser (constraint hints, plan files, report axes).
inline std::optional<Tier> parse_tier_word(std::string_view s) {
    std::string v = to_lower(trim(s));
    const auto colon = v.find(':');
    if (colon != std::string::npos) v = trim(v.substr(0, colon));
    if (v == "high" || v == "高") return Tier::High;
    if (v == "medium" || v == "mid" || v == "中") return Tier::Medium;
    if (v == "low" || v == "低") return Tier::Low;
    if (v == "poor" || v == "差") return Tier::Poor;
    return std::nullopt;
}

// Strict label check: exactly one of the four fixed strings.
inline std::optional<Tier> parse_academic_label(std::string_view s) {
    for (int i = 0; i < kTierCount; ++i) {
        const Tier t = static_cast<Tier>(i);
        if (s == academic_label(t)) return t;
    }
    return std::nullopt;
}

inline std::optional<SubjectCluster> parse_cluster(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "stem" || v == "理科") return SubjectCluster::Stem;
    if (v == "humanities/social" || v == "humanities" || v == "文科")
        return SubjectCluster::HumanitiesSocial;
    if (v == "arts/pe" || v == "arts" || v == "art/music/sports" || v == "艺体")
        return SubjectCluster::ArtsPe;
    if (v == "languages/biology" || v == "languages" || v == "语言生物")
        return SubjectCluster::LanguagesBiology;
    return std::nullopt;
}

// Grade parsing with aliases: "Grade 7", "7", "Junior Year 1", "初一", "七年级".
inline std::optional<int> parse_grade(std::string_view s) {
    static const std::map<std::string, int> aliases = {
        {"一年级", 1},  {"二年级", 2},  {"三年级", 3},  {"四年级", 4},  {"五年级", 5},
        {"六年级", 6},  {"七年级", 7},  {"八年级", 8},  {"九年级", 9},  {"初一", 7},
        {"初二", 8},    {"初三", 9},    {"高一", 10},   {"高二", 11},   {"高三", 12},
        {"junior year 1", 7},  {"junior year 2", 8},  {"junior year 3", 9},
        {"senior year 1", 10}, {"senior year 2", 11}, {"senior year 3", 12},
    };
    const std::string v = to_lower(trim(s));
    if (v.empty()) return std::nullopt;
    if (auto it = aliases.find(v); it != aliases.end()) return it->second;
    std::size_t pos = 0;
    if (starts_with(v, "grade")) pos = 5;
    while (pos < v.size() && (v[pos] == ' ' || v[pos] == '\t')) ++pos;
    if (pos >= v.size()) return std::nullopt;
    int value = 0;
    std::size_t digits = 0;
    while (pos < v.size() && std::isdigit(static_cast<unsigned char>(v[pos]))) {
        value = value * 10 + (v[pos] - '0');
        ++pos;
        ++digits;
    }
    if (digits == 0) return std::nullopt;
    // anything after the number (e.g. "(Junior Year 1)") is tolerated
    if (value < 1 || value > kGradeCount) return std::nullopt;
    return value;
}

inline std::string grade_name(int grade) { return "Grade " + std::to_string(grade); }

inline std::string canonical_subject(std::string_view s) {
    static const std::map<std::string, std::string> aliases = {
        {"数学", "Mathematics"}, {"物理", "Physics"},   {"化学", "Chemistry"},
        {"信息技术", "Information Technology"},         {"历史", "History"},
        {"地理", "Geography"},   {"政治", "Politics"},  {"美术", "Art"},
        {"音乐", "Music"},       {"体育", "Physical Education"},
        {"语文", "Chinese"},     {"英语", "English"},   {"生物", "Biology"},
    };
    const std::string v = trim(s);
    if (auto it = aliases.find(v); it != aliases.end()) return it->second;
    return v;
}

// ---------------------------------------------------------------------------
// Developmental stages
// ---------------------------------------------------------------------------

struct DevelopmentalStages {
    std::string piaget;
    std::string erikson;
    std::string kohlberg;

    bool operator==(const DevelopmentalStages&) const = default;
};

struct StageBand {
    int min_age;
    int max_age;
};

// Recognized-stage lookup. Returns the plausible age band, or nullopt when the
// label is not in the closed set for that theory. Kohlberg accepts either level
// or stage granularity. Bands are documented configuration, not ground truth.
inline std::optional<StageBand> piaget_band(std::string_view label) {
    const std::string v = to_lower(label);
    if (v.find("sensorimotor") != std::string::npos) return StageBand{0, 2};
    if (v.find("pre-operational") != std::string::npos ||
        v.find("preoperational") != std::string::npos)
        return StageBand{2, 7};
    if (v.find("concrete") != std::string::npos) return StageBand{7, 11};
    if (v.find("formal") != std::string::npos) return StageBand{11, 25};
    return std::nullopt;
}

inline std::optional<StageBand> erikson_band(std::string_view label) {
    const std::string v = to_lower(label);
    if (v.find("industry") != std::string::npos) return StageBand{6, 12};
    if (v.find("identity") != std::string::npos) return StageBand{12, 18};
    if (v.find("initiative") != std::string::npos) return StageBand{3, 6};
    if (v.find("autonomy") != std::string::npos) return StageBand{1, 3};
    if (v.find("intimacy") != std::string::npos) return StageBand{18, 40};
    if (v.find("generativity") != std::string::npos) return StageBand{40, 65};
    if (v.find("integrity") != std::string::npos) return StageBand{65, 120};
    if (v.find("trust") != std::string::npos) return StageBand{0, 2};
    return std::nullopt;
}

inline std::optional<StageBand> kohlberg_band(std::string_view label) {
    const std::string v = to_lower(label);
    if (v.find("post-conventional") != std::string::npos ||
        v.find("postconventional") != std::string::npos ||
        v.find("social contract") != std::string::npos ||
        v.find("universal ethical") != std::string::npos)
        return StageBand{12, 120};
    if (v.find("pre-conventional") != std::string::npos ||
        v.find("preconventional") != std::string::npos ||
        v.find("obedience") != std::string::npos || v.find("punishment") != std::string::npos ||
        v.find("self-interest") != std::string::npos ||
        v.find("instrumental") != std::string::npos)
        return StageBand{0, 10};
    if (v.find("conventional") != std::string::npos ||
        v.find("interpersonal") != std::string::npos ||
        v.find("conformity") != std::string::npos || v.find("authority") != std::string::npos ||
        v.find("social order") != std::string::npos ||
        v.find("law and order") != std::string::npos)
        return StageBand{9, 20};
    return std::nullopt;
}

enum class StageFit { Ok, Borderline, Violation, UnknownLabel };

// Borderline = at most one year outside the band.
inline StageFit stage_fit(const std::optional<StageBand>& band, int age) {
    if (!band) return StageFit::UnknownLabel;
    if (age >= band->min_age && age <= band->max_age) return StageFit::Ok;
    if (age >= band->min_age - 1 && age <= band->max_age + 1) return StageFit::Borderline;
    return StageFit::Violation;
}

// ---------------------------------------------------------------------------
// Sampling constraint and persona record
// ---------------------------------------------------------------------------

struct SamplingConstraint {
    int grade = 0;  // 1..12
    Gender gender = Gender::Male;
    SubjectCluster cluster = SubjectCluster::Stem;
    Tier tier = Tier::High;

    bool operator==(const SamplingConstraint&) const = default;
};

struct Persona {
    std::string id;
    std::string name;
    std::optional<int> age;
    std::string gender;          // canonical "Male"/"Female" when recognized
    std::string grade;           // canonical "Grade k" when recognized
    std::optional<DevelopmentalStages> stages;
    std::string agent_identifier;
    std::vector<std::string> strong_subjects;
    std::vector<std::string> weak_subjects;
    std::string academic_level;  // full label string
    std::string personality;
    std::string values_text;
    std::string social_relations;
    std::string creativity_text;
    std::string mental_health_text;
    std::optional<std::int64_t> slot;
    std::optional<SamplingConstraint> constraint;
    std::map<std::string, json> extra;  // unknown keys, preserved

    bool operator==(const Persona&) const = default;

    std::optional<Gender> gender_value() const { return parse_gender(gender); }
    std::optional<int> grade_number() const { return parse_grade(grade); }
    std::optional<Tier> tier() const { return parse_academic_label(academic_level); }
};

// ---------------------------------------------------------------------------
// Agent identifier grammar
// ---------------------------------------------------------------------------

struct IdentifierCheck {
    bool ok = false;
    std::string reason;
};

// Accepts ^(?:[a-z]+[1-5]){1,2}_(?:[a-z]+[1-5]){1,3}$ except the combination
// of a 2-syllable surname with a 3-syllable given name.
inline IdentifierCheck validate_agent_identifier(std::string_view s) {
    auto count_syllables = [](std::string_view part) -> int {
        // returns -1 on malformed input
        int count = 0;
        std::size_t i = 0;
        while (i < part.size()) {
            std::size_t letters = 0;
            while (i < part.size() && part[i] >= 'a' && part[i] <= 'z') {
                ++i;
                ++letters;
            }
            if (letters == 0) return -1;
            if (i >= part.size() || part[i] < '1' || part[i] > '5') return -1;
            ++i;
            ++count;
        }
        return count;
    };

    if (s.empty()) return {false, "identifier is empty"};
    const auto underscore = s.find('_');
    if (underscore == std::string_view::npos)
        return {false, "missing underscore between surname and given name"};
    if (s.find('_', underscore + 1) != std::string_view::npos)
        return {false, "more than one underscore"};
    const auto surname = s.substr(0, underscore);
    const auto given = s.substr(underscore + 1);
    const int ns = count_syllables(surname);
    if (ns < 0) return {false, "surname is not a sequence of lowercase pinyin+tone syllables"};
    const int ng = count_syllables(given);
    if (ng < 0) return {false, "given name is not a sequence of lowercase pinyin+tone syllables"};
    if (ns < 1 || ns > 2) return {false, "surname must have 1-2 syllables"};
    if (ng < 1 || ng > 3) return {false, "given name must have 1-3 syllables"};
    if (ns == 2 && ng == 3)
        return {false, "a 2-syllable surname cannot pair with a 3-syllable given name"};
    return {true, ""};
}

// ---------------------------------------------------------------------------
// Corpus-format field names and aliases
// ---------------------------------------------------------------------------

namespace field {
inline constexpr const char* kId = "id";
inline constexpr const char* kName = "Name";
inline constexpr const char* kAge = "Age";
inline constexpr const char* kGender = "Gender";
inline constexpr const char* kGrade = "Grade";
inline constexpr const char* kStages = "Developmental Stage";
inline constexpr const char* kAgentName = "Agent Name";
inline constexpr const char* kStrong = "Strong Subjects";
inline constexpr const char* kWeak = "Weak Subjects";
inline constexpr const char* kAcademicLevel = "Academic Level";
inline constexpr const char* kPersonality = "Personality";
inline constexpr const char* kValues = "Values";
inline constexpr const char* kSocial = "Social Relationships";
inline constexpr const char* kCreativity = "Creativity";
inline constexpr const char* kMentalHealth = "Mental Health";
inline constexpr const char* kSlot = "_slot";
inline constexpr const char* kConstraint = "_sampling-constraint";

inline constexpr const char* kPiaget = "Piaget Cognitive Development Stage";
inline constexpr const char* kErikson = "Erikson Psychosocial Development Stage";
inline constexpr const char* kKohlberg = "Kohlberg Moral Development Stage";

inline constexpr const char* kConstraintGrade = "Grade";
inline constexpr const char* kConstraintGender = "Gender";
inline constexpr const char* kConstraintCluster = "Subject Cluster";
inline constexpr const char* kConstraintTier = "Target Academic Level";
}  // namespace field

// The fifteen required persona keys (the id is system-assigned).
inline const std::vector<std::string>& required_fields() {
    static const std::vector<std::string> fields = {
        field::kId,     field::kName,   field::kAge,           field::kStrong,
        field::kWeak,   field::kGrade,  field::kPersonality,   field::kSocial,
        field::kAcademicLevel, field::kGender, field::kStages, field::kAgentName,
        field::kValues, field::kCreativity, field::kMentalHealth,
    };
    return fields;
}

inline std::string canonical_field_name(std::string_view key) {
    static const std::map<std::string, std::string> aliases = {
        {"姓名", field::kName},
        {"年龄", field::kAge},
        {"性别", field::kGender},
        {"年级", field::kGrade},
        {"发展阶段", field::kStages},
        {"智能体名称", field::kAgentName},
        {"代理名", field::kAgentName},
        {"擅长科目", field::kStrong},
        {"薄弱科目", field::kWeak},
        {"学业水平", field::kAcademicLevel},
        {"性格", field::kPersonality},
        {"价值观", field::kValues},
        {"社交关系", field::kSocial},
        {"创造力", field::kCreativity},
        {"心理健康", field::kMentalHealth},
        {"_抽样约束", field::kConstraint},
        {"皮亚杰认知发展阶段", field::kPiaget},
        {"埃里克森心理社会发展阶段", field::kErikson},
        {"科尔伯格道德发展阶段", field::kKohlberg},
    };
    if (auto it = aliases.find(std::string(key)); it != aliases.end()) return it->second;
    return std::string(key);
}

// ---------------------------------------------------------------------------
// Parsing / serialization
// ---------------------------------------------------------------------------

enum class ParseErrorKind { EmptyRecord, Syntax, DuplicateKey, TypeMismatch, BadConstraint };

struct ParseError {
    ParseErrorKind kind;
    std::string message;
};

struct PersonaParseResult {
    std::optional<Persona> persona;
    std::optional<ParseError> error;

    bool ok() const { return persona.has_value(); }
    const Persona& value() const { return *persona; }
};

namespace detail {

// SAX walker that rejects duplicate keys within any object scope; nlohmann's
// DOM parser silently keeps the last duplicate, which would mask data bugs.
class DuplicateKeyScanner : public nlohmann::json_sax<json> {
public:
    bool duplicate_found = false;
    std::string duplicate_key;

    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }
    bool start_object(std::size_t) override {
        scopes_.emplace_back();
        return true;
    }
    bool key(string_t& k) override {
        if (!scopes_.empty() && !scopes_.back().insert(k).second) {
            duplicate_found = true;
            duplicate_key = k;
            return false;
        }
        return true;
    }
    bool end_object() override {
        scopes_.pop_back();
        return true;
    }
    bool start_array(std::size_t) override { return true; }
    bool end_array() override { return true; }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
        return false;
    }

private:
    std::vector<std::set<std::string>> scopes_;
};

inline std::optional<int> json_to_int(const json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_unsigned()) return static_cast<int>(v.get<unsigned>());
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        if (s.empty() || s.find_first_not_of("+-0123456789") != std::string::npos)
            return std::nullopt;
        try {
            return std::stoi(s);
        } catch (...) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace detail

inline PersonaParseResult persona_from_json(const json& doc) {
    Persona p;
    auto type_error = [](const std::string& key, const std::string& detail) {
        return PersonaParseResult{
            std::nullopt, ParseError{ParseErrorKind::TypeMismatch, key + ": " + detail}};
    };

    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string key = canonical_field_name(it.key());
        const json& v = it.value();
        auto as_text = [&](std::string& target) -> bool {
            if (!v.is_string()) return false;
            target = v.get<std::string>();
            return true;
        };
        if (key == field::kId) {
            if (!as_text(p.id)) return type_error(key, "expected string");
        } else if (key == field::kName) {
            if (!as_text(p.name)) return type_error(key, "expected string");
        } else if (key == field::kAge) {
            auto n = detail::json_to_int(v);
            if (!n) return type_error(key, "expected integer");
            p.age = *n;
        } else if (key == field::kGender) {
            std::string raw;
            if (!as_text(raw)) return type_error(key, "expected string");
            auto g = parse_gender(raw);
            p.gender = g ? gender_name(*g) : raw;
        } else if (key == field::kGrade) {
            std::string raw;
            if (!as_text(raw)) return type_error(key, "expected string");
            auto g = parse_grade(raw);
            p.grade = g ? grade_name(*g) : raw;
        } else if (key == field::kStages) {
            if (!v.is_object()) return type_error(key, "expected object");
            DevelopmentalStages st;
            for (auto sit = v.begin(); sit != v.end(); ++sit) {
                const std::string skey = canonical_field_name(sit.key());
                if (!sit.value().is_string()) return type_error(skey, "expected string");
                const std::string sval = sit.value().get<std::string>();
                if (skey == field::kPiaget) st.piaget = sval;
                else if (skey == field::kErikson) st.erikson = sval;
                else if (skey == field::kKohlberg) st.kohlberg = sval;
            }
            p.stages = st;
        } else if (key == field::kAgentName) {
            if (!as_text(p.agent_identifier)) return type_error(key, "expected string");
        } else if (key == field::kStrong || key == field::kWeak) {
            if (!v.is_array()) return type_error(key, "expected array");
            auto& target = (key == field::kStrong) ? p.strong_subjects : p.weak_subjects;
            for (const auto& e : v) {
                if (!e.is_string()) return type_error(key, "expected array of strings");
                target.push_back(canonical_subject(e.get<std::string>()));
            }
        } else if (key == field::kAcademicLevel) {
            if (!as_text(p.academic_level)) return type_error(key, "expected string");
        } else if (key == field::kPersonality) {
            if (!as_text(p.personality)) return type_error(key, "expected string");
        } else if (key == field::kValues) {
            if (!as_text(p.values_text)) return type_error(key, "expected string");
        } else if (key == field::kSocial) {
            if (!as_text(p.social_relations)) return type_error(key, "expected string");
        } else if (key == field::kCreativity) {
            if (!as_text(p.creativity_text)) return type_error(key, "expected string");
        } else if (key == field::kMentalHealth) {
            if (!as_text(p.mental_health_text)) return type_error(key, "expected string");
        } else if (key == field::kSlot) {
            if (!v.is_number_integer() && !v.is_number_unsigned())
                return type_error(key, "expected integer");
            p.slot = v.get<std::int64_t>();
        } else if (key == field::kConstraint) {
            if (!v.is_object())
                return {std::nullopt,
                        ParseError{ParseErrorKind::BadConstraint, "constraint is not an object"}};
            SamplingConstraint c;
            bool have_grade = false, have_gender = false, have_cluster = false, have_tier = false;
            for (auto cit = v.begin(); cit != v.end(); ++cit) {
                const std::string ckey = canonical_field_name(cit.key());
                if (!cit.value().is_string())
                    return {std::nullopt, ParseError{ParseErrorKind::BadConstraint,
                                                     "constraint values must be strings"}};
                const std::string cval = cit.value().get<std::string>();
                if (ckey == field::kConstraintGrade) {
                    auto g = parse_grade(cval);
                    if (!g)
                        return {std::nullopt, ParseError{ParseErrorKind::BadConstraint,
                                                         "bad constraint grade: " + cval}};
                    c.grade = *g;
                    have_grade = true;
                } else if (ckey == field::kConstraintGender) {
                    auto g = parse_gender(cval);
                    if (!g)
                        return {std::nullopt, ParseError{ParseErrorKind::BadConstraint,
                                                         "bad constraint gender: " + cval}};
                    c.gender = *g;
                    have_gender = true;
                } else if (ckey == field::kConstraintCluster) {
                    auto cl = parse_cluster(cval);
                    if (!cl)
                        return {std::nullopt, ParseError{ParseErrorKind::BadConstraint,
                                                         "bad constraint cluster: " + cval}};
                    c.cluster = *cl;
                    have_cluster = true;
                } else if (ckey == field::kConstraintTier) {
                    auto t = parse_tier_word(cval);
                    if (!t)
                        return {std::nullopt, ParseError{ParseErrorKind::BadConstraint,
                                                         "bad constraint tier: " + cval}};
                    c.tier = *t;
                    have_tier = true;
                }
            }
            if (!(have_grade && have_gender && have_cluster && have_tier))
                return {std::nullopt, ParseError{ParseErrorKind::BadConstraint,
                                                 "constraint must carry all four fields"}};
            p.constraint = c;
        } else {
            p.extra[key] = it.value();
        }
    }
    return {std::move(p), std::nullopt};
}

inline PersonaParseResult parse_persona(std::string_view record) {
    const std::string line = trim(record);
    if (line.empty())
        return {std::nullopt, ParseError{ParseErrorKind::EmptyRecord, "empty record"}};

    {
        detail::DuplicateKeyScanner scanner;
        if (!json::sax_parse(line, &scanner) && scanner.duplicate_found) {
            return {std::nullopt, ParseError{ParseErrorKind::DuplicateKey,
                                             "duplicate key: " + scanner.duplicate_key}};
        }
    }

    json doc;
    try {
        doc = json::parse(line);
    } catch (const std::exception& e) {
        return {std::nullopt, ParseError{ParseErrorKind::Syntax, e.what()}};
    }
    if (!doc.is_object())
        return {std::nullopt, ParseError{ParseErrorKind::Syntax, "record is not a JSON object"}};
    return persona_from_json(doc);
}

inline json constraint_to_json(const SamplingConstraint& c) {
    json out = json::object();
    out[field::kConstraintGrade] = grade_name(c.grade);
    out[field::kConstraintGender] = gender_name(c.gender);
    out[field::kConstraintCluster] = cluster_name(c.cluster);
    out[field::kConstraintTier] = tier_name(c.tier);
    return out;
}

// One corpus line (no trailing newline). Missing optional fields are omitted;
// key order is the canonical order above, unknown keys last in sorted order.
inline std::string serialize_persona(const Persona& p) {
    json out = json::object();
    if (!p.id.empty()) out[field::kId] = p.id;
    if (!p.name.empty()) out[field::kName] = p.name;
    if (p.age) out[field::kAge] = *p.age;
    if (!p.gender.empty()) out[field::kGender] = p.gender;
    if (!p.grade.empty()) out[field::kGrade] = p.grade;
    if (p.stages) {
        json st = json::object();
        if (!p.stages->piaget.empty()) st[field::kPiaget] = p.stages->piaget;
        if (!p.stages->erikson.empty()) st[field::kErikson] = p.stages->erikson;
        if (!p.stages->kohlberg.empty()) st[field::kKohlberg] = p.stages->kohlberg;
        out[field::kStages] = std::move(st);
    }
    if (!p.agent_identifier.empty()) out[field::kAgentName] = p.agent_identifier;
    if (!p.strong_subjects.empty()) out[field::kStrong] = p.strong_subjects;
    if (!p.weak_subjects.empty()) out[field::kWeak] = p.weak_subjects;
    if (!p.academic_level.empty()) out[field::kAcademicLevel] = p.academic_level;
    if (!p.personality.empty()) out[field::kPersonality] = p.personality;
    if (!p.values_text.empty()) out[field::kValues] = p.values_text;
    if (!p.social_relations.empty()) out[field::kSocial] = p.social_relations;
    if (!p.creativity_text.empty()) out[field::kCreativity] = p.creativity_text;
    if (!p.mental_health_text.empty()) out[field::kMentalHealth] = p.mental_health_text;
    if (p.slot) out[field::kSlot] = *p.slot;
    if (p.constraint) out[field::kConstraint] = constraint_to_json(*p.constraint);
    for (const auto& [k, v] : p.extra) out[k] = v;
    return out.dump();
}

// All narrative fields, in canonical order, for text-level metrics.
inline std::vector<std::pair<std::string, const std::string*>> narrative_fields(const Persona& p) {
    return {
        {field::kPersonality, &p.personality}, {field::kValues, &p.values_text},
        {field::kSocial, &p.social_relations}, {field::kCreativity, &p.creativity_text},
        {field::kMentalHealth, &p.mental_health_text},
    };
}

// The three long-text components that diversity metrics operate on.
inline std::string long_text_concat(const Persona& p) {
    std::string out = p.values_text;
    out.push_back('\n');
    out += p.creativity_text;
    out.push_back('\n');
    out += p.mental_health_text;
    return out;
}

}  // namespace personagen
