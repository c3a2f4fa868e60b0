#pragma once

// Prompt rendering for the five content agents, the validator agent, and the
// shadow-survey role player. Templates embed: the universal preamble, the
// role's requirements, the sampling-constraint hint, the diversity seed, the
// tier-adaptive constraint block, and (in revise mode) the structured issue
// list with each issue's hint verbatim.

#include <optional>
#include <string>
#include <vector>

#include "personagen/agents.hpp"
#include "personagen/persona.hpp"

namespace personagen {

enum class PromptMode { Propose, Revise };

inline std::string universal_preamble() {
    return
        "You are a student-profile production member collaborating with other agents on a "
        "shared public whiteboard.\n"
        "Rules (must follow):\n"
        "- All output must be valid JSON objects, and only contain keys you are responsible "
        "for.\n"
        "- Do not quote template phrases; use natural English; avoid empty cliches; avoid "
        "contradicting the whiteboard draft.\n"
        "- If asked to revise, only change keys you are responsible for; leave nothing empty; "
        "ensure logical consistency with other fields.\n"
        "- If a _sampling-constraint exists in the whiteboard, strictly follow its Grade, "
        "Gender, Subject Cluster and Target Academic Level; on conflict, follow the sampling "
        "constraint and keep the profile coherent.\n"
        "- Every student has both strengths and weaknesses. Never write all dimensions as "
        "uniformly strong. When the target academic level is Medium/Low/Poor, your fields must "
        "include some Mid/Relatively Low/Low descriptions.\n"
        "[Universal Output Hard Constraints] (all agents must follow):\n"
        "- Output exactly one JSON object; no arrays, no explanatory text outside JSON.\n"
        "- Never wrap the output in ```json, ``` or any Markdown fence.\n"
        "- The outermost object may only contain the keys this agent is responsible for; do "
        "not add id or wrapper objects.\n";
}

namespace detail {

inline std::string adaptive_block(Role role, Tier tier) {
    const bool low_band = tier == Tier::Medium || tier == Tier::Low || tier == Tier::Poor;
    switch (role) {
        case Role::Values: {
            if (!low_band) return {};
            int need = tier == Tier::Medium ? 1 : tier == Tier::Low ? 2 : 3;
            std::string out =
                "[7-Dimension Mandatory Distribution (strongly bound to system filters)]\n"
                "- Cover both strengths and weaknesses across the seven dimensions; they cannot "
                "all be 'Relatively High/High'.\n"
                "- Only these level words are allowed: High / Relatively High / Upper-Mid / Mid "
                "/ Relatively Low / Low.\n";
            out += "- Target academic level '" + std::string(tier_name(tier)) +
                   "': among the seven dimensions, at least " + std::to_string(need) +
                   " dimensions must be described with 'Mid/Relatively Low/Low'.\n"
                   "- Give a brief justification for each dimension written as Mid/Relatively "
                   "Low/Low.\n";
            return out;
        }
        case Role::SocialCreative: {
            if (!low_band) return {};
            int need = tier == Tier::Medium ? 2 : tier == Tier::Low ? 3 : 4;
            std::string out =
                "[8-Dimension Level Mandatory Distribution (strongly bound to filters)]\n"
                "- Assign a level word to each of the 8 dimensions, chosen only from "
                "High/Relatively High/Upper-Mid/Mid/Relatively Low/Low, then weave them into "
                "one paragraph with clear ups and downs.\n";
            out += "- Target academic level '" + std::string(tier_name(tier)) +
                   "': at least " + std::to_string(need) +
                   " dimensions must be at 'Mid/Relatively Low/Low'.\n"
                   "- If Feasibility is Relatively Low/Low, Proposing Solutions may not exceed "
                   "Mid.\n"
                   "- The closing radar summary must name the strengths and the clear "
                   "shortcomings, and must contain the word 'radar' or 'summary'.\n";
            return out;
        }
        case Role::MentalHealth: {
            if (tier != Tier::Low && tier != Tier::Poor) return {};
            return
                "[Psychological Index Distribution (strongly bound to filters)]\n"
                "- Give explicit levels for Overall Mental State, Happiness Index, Depression "
                "Risk and Anxiety Risk.\n"
                "- Among Overall Mental State and Happiness Index, at least 1 item must use a "
                "'Mid/Relatively Low' class description; they cannot both be 'Relatively "
                "High/High'.\n"
                "- Depression Risk and Anxiety Risk cannot both be 'Low/Very Low'; at least 1 "
                "needs a 'Mild/Some Possibility/Needs Attention' description.\n"
                "- Keep a non-diagnostic tone: never use clinical terms such as 'severe "
                "depression', 'bipolar disorder' or 'need hospitalization'; prefer 'may "
                "have ... tendency', 'periodic emotional lows', 'recommend further "
                "assessment'.\n";
        }
        default:
            return {};
    }
}

inline std::string role_requirements(Role role) {
    switch (role) {
        case Role::Enrollment:
            return
                "Generation constraints (required):\n"
                "- Age 6-18, an Arabic-numeral integer; Grade must match Age (+/-1 year for "
                "skip/retention).\n"
                "- 'Developmental Stage' must be an object with exactly three subkeys: 'Piaget "
                "Cognitive Development Stage', 'Erikson Psychosocial Development Stage', "
                "'Kohlberg Moral Development Stage'.\n"
                "- 'Agent Name' format: surname of 1-2 syllables, given name of 1-3 syllables, "
                "but a 2-syllable surname cannot pair with a 3-syllable given name; each "
                "syllable is lowercase pinyin plus a tone digit 1-5; underscore between "
                "surname and given name, e.g. li3_gan4, jiang3_jie4shi2, ou1yang2_chen2fei1.\n"
                "- 'Gender' is exactly 'Male' or 'Female'; 'Grade' looks like 'Grade 7'.\n"
                "Top-level keys: \"Name\", \"Age\", \"Gender\", \"Grade\", \"Developmental "
                "Stage\", \"Agent Name\".\n";
        case Role::Academic:
            return
                "Field requirements (required):\n"
                "- 'Strong Subjects': non-empty array of subject names, no duplicates.\n"
                "- 'Weak Subjects': non-empty array, disjoint from Strong Subjects.\n"
                "- 'Academic Level' must strictly equal one of:\n"
                "  1) \"High: Top 10%\"\n"
                "  2) \"Medium: Top 10%-30%\"\n"
                "  3) \"Low: Top 30%-50%\"\n"
                "  4) \"Poor: Bottom 50%\"\n"
                "Top-level keys: \"Strong Subjects\", \"Weak Subjects\", \"Academic Level\".\n";
        case Role::Values:
            return
                "Output requirements (required):\n"
                "- 'Personality': a few sentences of natural language summarizing core traits.\n"
                "- 'Values': one single-paragraph text, no blank lines, no lists or numbering; "
                "explicitly cover seven dimensions: Moral Character, Physical-Mental Health, "
                "Rule of Law, Social Responsibility, Political Identity, Cultural Literacy, "
                "Family Values; each with a recognizable level word (High/Relatively "
                "High/Upper-Mid/Mid/Relatively Low/Low) and brief justification.\n"
                "Top-level keys: \"Personality\", \"Values\".\n";
        case Role::SocialCreative:
            return
                "Field and format requirements (required):\n"
                "- 'Social Relationships': single paragraph (approx. 160-260 chars) narrated in "
                "background -> key event -> impact order, no line breaks or lists.\n"
                "- 'Creativity': single paragraph covering eight dimensions one by one "
                "(Fluency, Novelty, Flexibility, Feasibility, Problem Finding, Problem "
                "Analysis, Proposing Solutions, Improving Solutions), each with a clear level "
                "word and brief justification, ending with an overall radar summary.\n"
                "- If Feasibility is relatively low or low, Proposing Solutions may not be "
                "higher than mid.\n"
                "Top-level keys: \"Social Relationships\", \"Creativity\".\n";
        case Role::MentalHealth:
            return
                "Field and format requirements (required):\n"
                "- 'Mental Health': one single paragraph, no lists, naturally interleaving: "
                "1) overview of the overall mental state; 2) at least two personality traits "
                "related to psychological adaptation; 3) explicit level or degree wording for "
                "Overall Mental State, Happiness Index, Depression Risk, Anxiety Risk; 4) a "
                "non-diagnostic statement ('insufficient information or no significant "
                "symptoms', or 'may have ... tendency'); 5) a brief background story (academic "
                "pressure, interpersonal or family events); 6) current supports and coping "
                "(family, teachers, peers, school resources).\n"
                "Top-level key: \"Mental Health\".\n";
        case Role::Validator:
            return {};
    }
    return {};
}

}  // namespace detail

// Compact rule block embedded into the validator-agent prompt.
inline std::string validator_rules_text() {
    return
        "R1 Age-grade norm: Grade 1-12 aligns with ages 6-18, at most +/-1 year deviation.\n"
        "R2 Developmental-stage plausibility: Piaget/Erikson/Kohlberg labels must stay broadly "
        "compatible with the age band.\n"
        "R3 Strong Subjects and Weak Subjects must both be non-empty and mutually disjoint.\n"
        "R4 The eight creativity dimensions must vary; if feasibility is relatively low/low, "
        "proposing solutions cannot exceed a mid-level rating.\n"
        "R5 If the values field presents stable positive physical/mental health, the "
        "mental-health field must not describe severe functional impairment.\n"
        "R6 Agent-name regex: ^(?:[a-z]+[1-5]){1,2}_(?:[a-z]+[1-5]){1,3}$.\n"
        "R7 All required keys present and non-empty.\n"
        "R8 The values paragraph covers seven dimensions, each with a locatable level "
        "expression.\n"
        "R9 The creativity paragraph includes all eight dimensions plus a radar-style "
        "summary.\n"
        "R10 The mental-health paragraph includes overview, traits, overall state, happiness "
        "index, depression/anxiety risk, a non-diagnostic statement, background and "
        "support/coping.\n"
        "R11 Cross-field consistency: values, social, academic and mental-health descriptions "
        "must not contradict each other.\n"
        "R12 Non-diagnostic language: no heavy clinical wording; mild/tendency/situational "
        "wording is acceptable.\n"
        "R13 Readability: no mechanical repetition or laundry-list text.\n"
        "R14 Values, Creativity and Mental Health are each one single continuous paragraph.\n"
        "R15 Academic Level is one of the four fixed labels only.\n";
}

// Renders the full prompt for a content agent or the validator agent.
//   whiteboard_state: current draft as a JSON object (conditioning context).
//   issues: non-empty in revise mode; each issue's hint is included verbatim.
inline std::string render_prompt(Role role, const json& whiteboard_state, PromptMode mode,
                                 const std::vector<Issue>& issues,
                                 const std::optional<SamplingConstraint>& constraint,
                                 std::uint64_t diversity_seed) {
    if (role == Role::Validator) {
        std::string out = "You are a 'Validator' agent. Strictly review the draft and provide "
                          "structured revision tasks.\n";
        out += universal_preamble();
        out += "You only output JSON, keys are issues and final_ready. Do not output extra "
               "text.\n\nReference Rules (required):\n";
        out += validator_rules_text();
        out += "\nWhiteboard draft:\n" + whiteboard_state.dump() + "\n";
        out += "\nOutput: {\"issues\": [{\"code\", \"desc\", \"owner\", \"fields\", \"hint\"}], "
               "\"final_ready\": true|false}\n";
        return out;
    }
    if (mode == PromptMode::Revise && issues.empty())
        throw std::invalid_argument("render_prompt: revise mode requires issues");

    std::string out = universal_preamble();
    out += "\nYou are responsible for: [";
    const auto& fields = role_fields(role);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + fields[i] + "\"";
    }
    out += "]\nTask mode: ";
    out += mode == PromptMode::Propose ? "propose" : "revise";
    out += "\nDiversity seed: " + std::to_string(diversity_seed) + "\n";

    if (constraint) {
        out += "\n[Sampling Constraint]\n";
        out += "- Grade: " + grade_name(constraint->grade) + "\n";
        out += "- Gender: " + std::string(gender_name(constraint->gender)) + "\n";
        out += "- Subject Cluster: " + std::string(cluster_name(constraint->cluster)) + "\n";
        out += "- Target Academic Level: " + std::string(tier_name(constraint->tier)) + "\n";
        if (role == Role::Academic) {
            out += "- This sample's 'Academic Level' must strictly equal: \"" +
                   std::string(academic_label(constraint->tier)) + "\"\n";
        }
    }

    out += "\nCurrent whiteboard draft:\n" + whiteboard_state.dump() + "\n\n";
    out += detail::role_requirements(role);

    if (constraint) {
        const std::string adaptive = detail::adaptive_block(role, constraint->tier);
        if (!adaptive.empty()) out += "\n" + adaptive;
    }

    if (mode == PromptMode::Revise) {
        out += "\n[Validator issues to fix (only change keys you own)]\n";
        for (const auto& issue : issues) {
            out += "- [" + issue.code + "] " + issue.description + " (fields: ";
            for (std::size_t i = 0; i < issue.fields.size(); ++i) {
                if (i) out += ", ";
                out += issue.fields[i];
            }
            out += ") hint: " + issue.hint + "\n";
        }
    }

    out += "\nOutput only the JSON object itself.\n";
    return out;
}

}  // namespace personagen
