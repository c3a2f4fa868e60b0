#pragma once

// Level-word lexicon and keyword->level binding.
//
// Narrative fields grade themselves with a closed six-point vocabulary
// (High / Relatively High / Upper-Mid / Mid / Relatively Low / Low). The
// lexicon maps surface forms (English, Chinese, and common synonyms such as
// "medium"/"moderate") to their polarity scores 6..1, and the extractor binds
// the nearest level word within a character window to each dimension keyword.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "personagen/config.hpp"
#include "personagen/util.hpp"

namespace personagen {

inline constexpr int kDefaultBindingWindow = 30;  // characters between keyword and level word

struct LevelEntry {
    std::string canonical;              // documented level word
    int score = 0;                      // 6 (High) .. 1 (Low)
    std::vector<std::string> surfaces;  // lowercase match forms, incl. variants
};

struct LevelLexicon {
    std::vector<LevelEntry> entries;  // ordered high-to-low

    const LevelEntry* by_score(int score) const {
        for (const auto& e : entries)
            if (e.score == score) return &e;
        return nullptr;
    }

    // Strictly decreasing unique scores along the documented order.
    bool monotone() const {
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].score >= entries[i - 1].score) return false;
        return true;
    }
};

inline const LevelLexicon& default_level_lexicon() {
    static const LevelLexicon lex{{
        {"High", 6, {"very high", "high", "很高", "高"}},
        {"Relatively High", 5, {"relatively high", "较高"}},
        {"Upper-Mid", 4, {"upper-mid", "upper mid", "中上"}},
        {"Mid", 3, {"mid", "medium", "moderate", "average", "中等", "中"}},
        {"Relatively Low", 2, {"relatively low", "below average", "mild", "较低", "轻度"}},
        {"Low", 1, {"very low", "low", "很低", "低"}},
    }};
    return lex;
}

// Lexicon file rows: [[word]] surface = "...", lang = "en", score = 6.
// Surfaces sharing a score are treated as variants of one level word; the
// first listed surface per score becomes the canonical form.
inline LevelLexicon load_level_lexicon(const TomlTable& t) {
    LevelLexicon lex;
    for (const auto& row : t.array_of_tables("word")) {
        const std::string surface = row.at("surface").as_string();
        const int score = static_cast<int>(row.at("score").as_int());
        LevelEntry* entry = nullptr;
        for (auto& e : lex.entries)
            if (e.score == score) entry = &e;
        if (!entry) {
            lex.entries.push_back(LevelEntry{surface, score, {}});
            entry = &lex.entries.back();
        }
        entry->surfaces.push_back(to_lower(surface));
    }
    std::sort(lex.entries.begin(), lex.entries.end(),
              [](const LevelEntry& a, const LevelEntry& b) { return a.score > b.score; });
    for (std::size_t i = 1; i < lex.entries.size(); ++i)
        if (lex.entries[i].score == lex.entries[i - 1].score)
            throw ConfigError("lexicon: duplicate score");
    return lex;
}

// A narrative dimension: id, keyword forms, and polarity direction (+1 for
// "higher is better", -1 for risk slots where a high level means trouble).
struct Dimension {
    std::string id;
    std::vector<std::string> keywords;
    int direction = +1;
};

inline const std::vector<Dimension>& values_dimensions() {
    static const std::vector<Dimension> dims = {
        {"moral character", {"moral", "道德"}, +1},
        {"physical-mental health", {"physical and mental", "physical-mental", "身心"}, +1},
        {"rule of law", {"rule of law", "rule-of-law", "法治"}, +1},
        {"social responsibility", {"social responsibility", "社会责任"}, +1},
        {"political identity", {"political", "政治"}, +1},
        {"cultural literacy", {"cultural", "文化"}, +1},
        {"family values", {"family", "家庭"}, +1},
    };
    return dims;
}

inline const std::vector<Dimension>& creativity_dimensions() {
    static const std::vector<Dimension> dims = {
        {"fluency", {"fluency", "流畅"}, +1},
        {"novelty", {"novelty", "originality", "新颖"}, +1},
        {"flexibility", {"flexibility", "灵活"}, +1},
        {"feasibility", {"feasibility", "可行"}, +1},
        {"problem finding", {"problem finding", "problem discovery", "发现问题"}, +1},
        {"problem analysis", {"problem analysis", "分析问题"}, +1},
        {"proposing solutions",
         {"proposing solutions", "solution proposing", "solution generation", "提出方案"},
         +1},
        {"improving solutions",
         {"improving solutions", "solution improvement", "solution refinement", "改进方案"},
         +1},
    };
    return dims;
}

// The four mandated mental-health slots. Risk slots carry negative direction.
inline const std::vector<Dimension>& mental_health_dimensions() {
    static const std::vector<Dimension> dims = {
        {"overall mental state",
         {"overall mental state", "overall mental status", "心理状态"},
         +1},
        {"happiness index", {"happiness index", "happiness", "幸福指数"}, +1},
        {"depression risk", {"depression", "depressive", "抑郁"}, -1},
        {"anxiety risk", {"anxiety", "anxious", "焦虑"}, -1},
    };
    return dims;
}

struct LevelMention {
    std::string dimension;
    std::string word;  // canonical level word
    int score = 0;
    std::size_t keyword_pos = 0;
};

struct LevelExtraction {
    std::vector<LevelMention> mentions;
    std::vector<std::string> missing;
};

namespace detail {

struct TextMatch {
    std::size_t begin;
    std::size_t end;
    int score;
    const std::string* canonical;
};

// Leftmost-longest, non-overlapping occurrences of lexicon surfaces.
inline std::vector<TextMatch> find_level_matches(const std::string& lower_text,
                                                 const LevelLexicon& lexicon) {
    std::vector<TextMatch> candidates;
    for (const auto& entry : lexicon.entries) {
        for (const auto& surface : entry.surfaces) {
            if (surface.empty()) continue;
            std::size_t from = 0;
            while (true) {
                const std::size_t at = lower_text.find(surface, from);
                if (at == std::string::npos) break;
                candidates.push_back(
                    TextMatch{at, at + surface.size(), entry.score, &entry.canonical});
                from = at + 1;
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const TextMatch& a, const TextMatch& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        return (a.end - a.begin) > (b.end - b.begin);
    });
    std::vector<TextMatch> kept;
    std::size_t covered_until = 0;
    for (const auto& m : candidates) {
        if (m.begin < covered_until) continue;
        kept.push_back(m);
        covered_until = m.end;
    }
    return kept;
}

inline std::size_t gap_between(std::size_t a_begin, std::size_t a_end, std::size_t b_begin,
                               std::size_t b_end) {
    if (b_begin >= a_end) return b_begin - a_end;
    if (a_begin >= b_end) return a_begin - b_end;
    return 0;  // overlap
}

}  // namespace detail

// For each dimension, bind the nearest level word within `window` characters
// of any keyword occurrence. Level words after the keyword win over ones
// before it (narratives write "dimension ... level"; a preceding level word
// usually belongs to the previous clause), distance breaks ties within each
// group.
inline LevelExtraction extract_level_mentions(std::string_view text,
                                              const LevelLexicon& lexicon,
                                              const std::vector<Dimension>& dimensions,
                                              int window = kDefaultBindingWindow) {
    LevelExtraction out;
    const std::string lower = to_lower(text);
    const auto levels = detail::find_level_matches(lower, lexicon);
    for (const auto& dim : dimensions) {
        bool bound = false;
        std::size_t best_gap = 0;
        int best_before = 0;
        LevelMention best;
        for (const auto& kw : dim.keywords) {
            const std::string k = to_lower(kw);
            std::size_t from = 0;
            while (true) {
                const std::size_t at = lower.find(k, from);
                if (at == std::string::npos) break;
                const std::size_t kw_end = at + k.size();
                for (const auto& lv : levels) {
                    const std::size_t gap = detail::gap_between(at, kw_end, lv.begin, lv.end);
                    if (gap > static_cast<std::size_t>(window)) continue;
                    const int before = lv.end <= at ? 1 : 0;
                    if (!bound || before < best_before ||
                        (before == best_before && gap < best_gap)) {
                        bound = true;
                        best_gap = gap;
                        best_before = before;
                        best = LevelMention{dim.id, *lv.canonical, lv.score, at};
                    }
                }
                from = at + 1;
            }
        }
        if (bound) out.mentions.push_back(best);
        else out.missing.push_back(dim.id);
    }
    return out;
}

// Any level word present in the text at all (per-mention fallback scoring).
inline std::vector<int> all_level_scores(std::string_view text, const LevelLexicon& lexicon) {
    std::vector<int> out;
    for (const auto& m : detail::find_level_matches(to_lower(text), lexicon)) out.push_back(m.score);
    return out;
}

// ---------------------------------------------------------------------------
// Psychological-risk parsing rules (persona-side cohort assignment).
//
// Risk wording classes: 3 = high ("high", "severe"), 2 = needs attention
// ("mild", "mid", "some possibility", ...), 1 = low ("low", "no significant",
// ...). A persona counts as high-risk when its extracted depression OR anxiety
// risk class is at or above the threshold (default: class 2).
// ---------------------------------------------------------------------------

struct RiskRuleTable {
    LevelLexicon classes;
    int threshold = 2;
    int window = kDefaultBindingWindow;
};

inline const RiskRuleTable& default_risk_rules() {
    static const RiskRuleTable table{
        LevelLexicon{{
            {"high", 3, {"very high", "high", "severe", "strong", "较高", "高", "严重"}},
            {"needs attention",
             2,
             {"mild", "some possibility", "needs attention", "needs further attention", "mid",
              "medium", "moderate", "periodic", "轻度", "中等", "中", "需要关注"}},
            {"low", 1, {"very low", "low", "no significant", "minimal", "almost no", "低", "无明显"}},
        }},
        2,
        kDefaultBindingWindow,
    };
    return table;
}

struct RiskExtraction {
    std::optional<int> depression_class;
    std::optional<int> anxiety_class;

    bool parseable() const { return depression_class || anxiety_class; }
    bool high(int threshold) const {
        return (depression_class && *depression_class >= threshold) ||
               (anxiety_class && *anxiety_class >= threshold);
    }
};

inline RiskExtraction extract_risk(std::string_view mental_health_text,
                                   const RiskRuleTable& rules = default_risk_rules()) {
    static const std::vector<Dimension> risk_dims = {
        {"depression", {"depression", "depressive", "抑郁"}, -1},
        {"anxiety", {"anxiety", "anxious", "焦虑"}, -1},
    };
    RiskExtraction out;
    const auto extraction =
        extract_level_mentions(mental_health_text, rules.classes, risk_dims, rules.window);
    for (const auto& m : extraction.mentions) {
        if (m.dimension == "depression") out.depression_class = m.score;
        else out.anxiety_class = m.score;
    }
    return out;
}

}  // namespace personagen
