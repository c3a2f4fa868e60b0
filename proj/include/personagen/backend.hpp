#pragma once

// Text-completion backends behind one contract. The remote backend speaks the
// common chat-completions wire schema (bearer auth, retries with backoff, a
// bounded number of in-flight requests). The mock backend is a pure function
// of (seed, slot, role, round, fault knobs) and produces structurally valid
// role output by template-filling from seeded choices over the closed
// vocabularies; fault knobs inject specific rule violations.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "personagen/agents.hpp"
#include "personagen/lexicon.hpp"
#include "personagen/persona.hpp"
#include "personagen/schedule.hpp"

namespace personagen {

// ---------------------------------------------------------------------------
// Request/response contract
// ---------------------------------------------------------------------------

struct SurveyItemRef {
    std::string id;
    int min_code = 1;
    int max_code = 5;
};

// Shadow-survey context: the already-assigned cohort cell (0..15) and the
// items to answer. The mock's answers are a deterministic function of these.
struct SurveyContext {
    int cohort_cell = 0;
    std::vector<SurveyItemRef> items;
};

struct CompletionRequest {
    std::string prompt;
    Role role = Role::Enrollment;
    double temperature = 0.8;
    int max_tokens = 1024;
    std::string request_id;

    // structured context for deterministic mocking
    std::optional<Slot> slot;
    std::uint64_t attempt = 0;  // re-queue attempt for the slot
    int round = 0;              // 0 = propose, >=1 = revise round
    int retry = 0;              // format re-request counter
    bool revise = false;
    std::optional<SurveyContext> survey;
};

struct BackendError : std::runtime_error {
    enum class Kind { Transport, Auth, Truncated, Exhausted, Fault };
    Kind kind;
    BackendError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct BackendStats {
    std::size_t requests = 0;
    std::size_t retries = 0;
    std::size_t failures = 0;
    double total_latency_ms = 0.0;
    int peak_in_flight = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const CompletionRequest& req) = 0;
    virtual BackendStats stats() const { return {}; }
};

// ---------------------------------------------------------------------------
// Fault specification: "<kind>:<rate>[:persistent]", comma separated.
// Kinds map to the rule the injected output violates (r1, r2, r3, r4, r6, r8,
// r9, r10, r12, r14, r15) plus "wrapper" (markdown-fenced output) and
// "backend" (hard completion failure).
// ---------------------------------------------------------------------------

struct FaultSpec {
    std::string kind;
    double rate = 0.0;
    bool persistent = false;
};

inline std::vector<FaultSpec> parse_fault_specs(const std::string& text) {
    std::vector<FaultSpec> out;
    if (trim(text).empty()) return out;
    for (const auto& part : split(text, ',')) {
        const auto bits = split(trim(part), ':');
        if (bits.empty() || bits[0].empty())
            throw std::invalid_argument("bad fault spec: " + part);
        FaultSpec spec;
        spec.kind = to_lower(bits[0]);
        spec.rate = bits.size() > 1 ? std::stod(bits[1]) : 1.0;
        spec.persistent = bits.size() > 2 && to_lower(trim(bits[2])) == "persistent";
        if (spec.rate < 0.0 || spec.rate > 1.0)
            throw std::invalid_argument("fault rate out of [0,1]: " + part);
        out.push_back(spec);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic mock backend
// ---------------------------------------------------------------------------

class MockBackend : public Backend {
public:
    explicit MockBackend(std::uint64_t seed, std::vector<FaultSpec> faults = {})
        : seed_(seed), faults_(std::move(faults)) {}

    // Shared deterministic cohort->answer function; also used to fabricate
    // matched "human" survey data in tests. The stride is kept coprime with
    // the option span so answers always vary across cohorts.
    static int survey_answer(int cohort_cell, const std::string& item_id, int lo, int hi) {
        const std::uint64_t h = fnv1a64(item_id);
        const int span = hi - lo + 1;
        if (span <= 1) return lo;
        int stride = 1 + static_cast<int>(h % 4);
        while (std::gcd(stride, span) != 1) ++stride;
        const int b = static_cast<int>((h >> 8) % static_cast<std::uint64_t>(span));
        return lo + (cohort_cell * stride + b) % span;
    }

    std::string complete(const CompletionRequest& req) override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++stats_.requests;
        }
        if (req.survey) return answer_survey(*req.survey);
        if (req.role == Role::Validator) return R"({"issues": [], "final_ready": true})";
        if (!req.slot) throw BackendError(BackendError::Kind::Fault, "mock: request without slot");

        if (fault_active("backend", *req.slot, req))
            throw BackendError(BackendError::Kind::Exhausted,
                               "mock: injected backend failure");

        json out = role_output(req);
        std::string text = out.dump();
        if (fault_active("wrapper", *req.slot, req)) text = "```json\n" + text + "\n```";
        return text;
    }

    BackendStats stats() const override {
        std::lock_guard<std::mutex> lock(mutex_);
        return stats_;
    }

private:
    std::uint64_t seed_;
    std::vector<FaultSpec> faults_;
    mutable std::mutex mutex_;
    BackendStats stats_;

    bool fault_configured(const std::string& kind, const Slot& slot, bool* persistent) const {
        for (const auto& f : faults_) {
            if (f.kind != kind) continue;
            const double roll =
                static_cast<double>(fnv1a64(kind, splitmix64(static_cast<std::uint64_t>(
                                                      slot.index) ^ 0xfa17u)) %
                                    1000000ULL) /
                1000000.0;
            if (roll < f.rate) {
                *persistent = f.persistent;
                return true;
            }
        }
        return false;
    }

    bool fault_active(const std::string& kind, const Slot& slot,
                      const CompletionRequest& req) const {
        bool persistent = false;
        if (!fault_configured(kind, slot, &persistent)) return false;
        if (persistent) return true;
        // correctable faults appear only on the very first proposal
        return req.round == 0 && req.retry == 0 && !req.revise;
    }

    Rng purpose_rng(const CompletionRequest& req, std::uint64_t purpose) const {
        return Rng(mix_seed(seed_, static_cast<std::uint64_t>(req.slot->index),
                            req.attempt, purpose));
    }

    static const char* score_word(int score) {
        switch (score) {
            case 6: return "high";
            case 5: return "relatively high";
            case 4: return "upper-mid";
            case 3: return "mid";
            case 2: return "relatively low";
            default: return "low";
        }
    }

    // Tier-biased level: higher tiers draw higher polarity scores, which is
    // what makes the anchor-alignment metric positive on mock corpora.
    static int tier_level(Tier tier, Rng& rng) {
        const int bias[] = {5, 4, 3, 2};  // High..Poor
        const int jitter = static_cast<int>(rng.below(3)) - 1;
        int score = bias[static_cast<int>(tier)] + jitter;
        if (score < 1) score = 1;
        if (score > 6) score = 6;
        return score;
    }

    struct NamePick {
        std::string display;
        std::string agent;
    };

    NamePick pick_name(Gender gender, Rng& rng) const {
        static const std::vector<std::string> female = {
            "Yating", "Shihan", "Jiayi", "Xinyi",  "Mengqi", "Ruoxi", "Zihan", "Yuxin",
            "Qianyu", "Linlin", "Sitong", "Haiyan", "Wanling", "Keyi", "Anran", "Peiyu"};
        static const std::vector<std::string> male = {
            "Zhiyuan", "Haoran", "Junjie", "Yichen", "Mingze", "Tianyu", "Zeyu",  "Ruihao",
            "Chengxi", "Weiran", "Jialun", "Botao",  "Kaiwen", "Shuhan", "Yanlin", "Qixuan"};
        static const std::vector<std::string> surnames = {
            "Wang", "Li",   "Zhang", "Liu", "Chen", "Yang", "Zhao", "Huang",
            "Zhou", "Wu",   "Xu",    "Sun", "Hu",   "Zhu",  "Gao",  "Lin"};
        static const std::vector<std::string> surname_syllables = {
            "wang2", "li3",  "zhang1", "liu2", "chen2", "yang2", "zhao4", "huang2",
            "zhou1", "wu2",  "xu2",    "sun1", "hu2",   "zhu1",  "gao1",  "lin2"};
        static const std::vector<std::string> given_syllables = {
            "ya3",  "ting2", "shi1", "han2", "jia1", "yi4",  "xin1", "meng4",
            "qi2",  "ruo4",  "xi1",  "zi3",  "yu3",  "qian4", "lin2", "tong2"};
        const std::size_t surname_idx = rng.index(surnames.size());
        const auto& pool = gender == Gender::Female ? female : male;
        NamePick pick;
        pick.display = pool[rng.index(pool.size())] + " " + surnames[surname_idx];
        // surname 1-2 syllables, given 1-3, never 2+3
        const int ns = rng.below(5) == 0 ? 2 : 1;
        const int ng = ns == 2 ? static_cast<int>(rng.below(2) + 1)
                               : static_cast<int>(rng.below(3) + 1);
        std::string agent = surname_syllables[surname_idx];
        if (ns == 2) agent += given_syllables[rng.index(given_syllables.size())];
        agent += "_";
        for (int i = 0; i < ng; ++i) agent += given_syllables[rng.index(given_syllables.size())];
        pick.agent = agent;
        return pick;
    }

    struct SubjectsPick {
        std::vector<std::string> strong;
        std::vector<std::string> weak;
    };

    SubjectsPick pick_subjects(SubjectCluster cluster, Rng& rng) const {
        SubjectsPick out;
        const auto& pool = cluster_subjects(cluster);
        out.strong.push_back(pool[rng.index(pool.size())]);
        if (rng.below(3) == 0) {
            const auto& second = pool[rng.index(pool.size())];
            if (second != out.strong[0]) out.strong.push_back(second);
        }
        // weak subjects come from other clusters
        std::vector<std::string> others;
        for (int c = 0; c < kClusterCount; ++c) {
            if (static_cast<SubjectCluster>(c) == cluster) continue;
            for (const auto& s : cluster_subjects(static_cast<SubjectCluster>(c)))
                others.push_back(s);
        }
        const std::size_t first = rng.index(others.size());
        out.weak.push_back(others[first]);
        if (rng.below(2) == 0) {
            const std::size_t second = rng.index(others.size());
            if (second != first) out.weak.push_back(others[second]);
        }
        return out;
    }

    json role_output(const CompletionRequest& req) const {
        const Slot& slot = *req.slot;
        const SamplingConstraint& c = slot.constraint;
        switch (req.role) {
            case Role::Enrollment: return enrollment_output(req, c);
            case Role::Academic: return academic_output(req, c);
            case Role::Values: return values_output(req, c);
            case Role::SocialCreative: return social_creative_output(req, c);
            case Role::MentalHealth: return mental_health_output(req, c);
            default:
                throw BackendError(BackendError::Kind::Fault, "mock: unexpected role");
        }
    }

    json enrollment_output(const CompletionRequest& req, const SamplingConstraint& c) const {
        Rng rng = purpose_rng(req, 1);
        const int age = c.grade + 5 + static_cast<int>(rng.below(2));
        NamePick name = pick_name(c.gender, rng);
        const Slot& slot = *req.slot;
        json out = json::object();
        out[field::kName] = name.display;
        out[field::kAge] = fault_active("r1", slot, req) ? age + 4 : age;
        out[field::kGender] = gender_name(c.gender);
        out[field::kGrade] = grade_name(c.grade);
        json stages = json::object();
        stages[field::kPiaget] = fault_active("r2", slot, req) ? "Sensorimotor stage"
                                 : age <= 6  ? "Pre-operational stage"
                                 : age <= 11 ? "Concrete operational stage"
                                             : "Formal operational stage";
        stages[field::kErikson] =
            age <= 11 ? "Industry vs. Inferiority" : "Identity vs. Role Confusion";
        stages[field::kKohlberg] = age <= 9 ? "Pre-conventional level" : "Conventional level";
        out[field::kStages] = std::move(stages);
        out[field::kAgentName] =
            fault_active("r6", slot, req) ? "ou1yang2_wan4li3chang2" : name.agent;
        return out;
    }

    json academic_output(const CompletionRequest& req, const SamplingConstraint& c) const {
        Rng rng = purpose_rng(req, 2);
        SubjectsPick subjects = pick_subjects(c.cluster, rng);
        if (fault_active("r3", *req.slot, req)) subjects.weak[0] = subjects.strong[0];
        json out = json::object();
        out[field::kStrong] = subjects.strong;
        out[field::kWeak] = subjects.weak;
        out[field::kAcademicLevel] =
            fault_active("r15", *req.slot, req) ? "Top of class" : academic_label(c.tier);
        return out;
    }

    // Values levels with the tier-adaptive minimum satisfied.
    std::vector<int> draw_levels(Tier tier, std::size_t dims, int need_at_most_mid,
                                 Rng& rng) const {
        std::vector<int> scores(dims);
        for (auto& s : scores) s = tier_level(tier, rng);
        int have = 0;
        for (int s : scores)
            if (s <= 3) ++have;
        for (std::size_t i = 0; i < dims && have < need_at_most_mid; ++i) {
            if (scores[i] > 3) {
                scores[i] = 3;
                ++have;
            }
        }
        return scores;
    }

    json values_output(const CompletionRequest& req, const SamplingConstraint& c) const {
        Rng rng = purpose_rng(req, 3);
        Rng name_rng = purpose_rng(req, 1);
        (void)name_rng.below(2);  // skip the age draw to reuse the name pick
        const NamePick name = pick_name(c.gender, name_rng);
        const char* pro = c.gender == Gender::Female ? "Her" : "His";
        const char* pron = c.gender == Gender::Female ? "she" : "he";

        const int need = c.tier == Tier::Medium ? 1 : c.tier == Tier::Low ? 2
                         : c.tier == Tier::Poor ? 3 : 0;
        auto scores = draw_levels(c.tier, 7, need, rng);

        static const std::vector<std::string> traits = {
            "patient with routine tasks", "quick to volunteer in class",
            "reserved in large groups",   "steady under deadlines",
            "curious about new topics",   "easily distracted after setbacks",
            "careful with written work",  "talkative among close friends"};
        static const std::vector<std::string> habits = {
            "keeps a simple study plan on weekdays",
            "reviews notes only before tests",
            "prefers finishing homework right after school",
            "often needs reminders to start assignments"};
        std::string personality = name.display + " is " + rng.pick(traits) + " and " +
                                  rng.pick(traits) + "; " + pron + " " + rng.pick(habits) + ".";

        struct Dim {
            const char* phrase;
            std::vector<std::string> reasons;  // kept short so the paragraph
                                               // stays inside the length band
        };
        const Dim dims[7] = {
            {"moral conduct",
             {"trusted with group duties", "rarely in disputes", "returns lost items",
              "keeps promises made", "owns up to mistakes", "fair in small trades"}},
            {"physical and mental state",
             {"sleeps on a schedule", "moods dip after tests", "joins morning drills",
              "energy stays ordinary", "eats and rests plainly", "shakes off colds fast"}},
            {"rule-of-law awareness",
             {"follows rules when told", "punctuality slips", "skims the rulebook",
              "reminds peers of drills", "queues without fuss", "asks before borrowing"}},
            {"social responsibility",
             {"joins cleanup duty", "prefers own projects", "volunteers with friends",
              "takes notes for absentees", "waters the class plants", "recycles on habit"}},
            {"political identity",
             {"attends assemblies", "rarely reads the news", "asks civics questions",
              "joins flag duty", "quotes slogans loosely", "debates current events"}},
            {"cultural literacy",
             {"borrows books weekly", "knows customs from trips", "enjoys museum visits",
              "watches documentaries", "hums regional operas", "collects idiom cards"}},
            {"family orientation",
             {"talks with parents daily", "relies on family advice", "helps with chores",
              "plans around family meals", "texts a cousin often", "keeps granny company"}},
        };
        std::string values;
        if (fault_active("template", *req.slot, req)) {
            for (int k = 0; k < 40; ++k) values += "Daily routines stay plain and steady. ";
            values = trim(values);
        } else {
            for (int i = 0; i < 7; ++i) {
                if (i) values += " ";
                const std::string lvl = score_word(scores[i]);
                const std::string reason = rng.pick(dims[i].reasons);
                switch (rng.below(4)) {
                    case 0:
                        values += std::string(pro) + " " + dims[i].phrase + " is " + lvl + ": " +
                                  reason + ".";
                        break;
                    case 1:
                        values += std::string(pro) + " " + dims[i].phrase + " stays " + lvl +
                                  "; " + reason + ".";
                        break;
                    case 2:
                        values += std::string(pro) + " " + dims[i].phrase + " rates " + lvl +
                                  ": " + reason + ".";
                        break;
                    default:
                        values += std::string(pro) + " " + dims[i].phrase + " looks " + lvl +
                                  ": " + reason + ".";
                        break;
                }
            }
            static const std::vector<std::string> activities = {
                "sketch practice", "board games",   "bike rides",   "short stories",
                "puzzle apps",     "model kits",    "badminton",    "cooking trials",
                "comic doodles",   "plant care",    "radio plays",  "paper crafts",
                "song covers",     "kite flying"};
            static const std::vector<std::string> company = {
                "a cousin",   "deskmates",    "a neighbor",     "one close friend",
                "the hobby club", "a pen pal", "grandparents",   "the study group"};
            static const std::vector<std::string> weekend_frames = {
                " Weekends add ", " Free afternoons go to ", " Most Sundays mean ",
                " Spare hours drift to "};
            values += rng.pick(weekend_frames) + rng.pick(activities) + " with " +
                      rng.pick(company) + ".";
        }
        if (fault_active("r8", *req.slot, req)) {
            const auto at = values.find(std::string(pro) + " cultural literacy");
            const auto end = values.find('.', at);
            values = values.substr(0, at) + values.substr(end + 2);
        }
        if (fault_active("r14", *req.slot, req)) values += "\n1. extra point";

        json out = json::object();
        out[field::kPersonality] = personality;
        out[field::kValues] = values;
        return out;
    }

    json social_creative_output(const CompletionRequest& req, const SamplingConstraint& c) const {
        Rng rng = purpose_rng(req, 4);
        Rng name_rng = purpose_rng(req, 1);
        (void)name_rng.below(2);
        const NamePick name = pick_name(c.gender, name_rng);
        Rng subj_rng = purpose_rng(req, 2);
        const SubjectsPick subjects = pick_subjects(c.cluster, subj_rng);
        const char* pron = c.gender == Gender::Female ? "she" : "he";

        // fragment pools sized so the paragraph lands inside 160-260 chars
        static const std::vector<std::string> openers = {
            "keeps steady ties with classmates and often discusses",
            "stays on friendly terms with the class and brings up",
            "keeps an even circle at school and compares notes on",
            "gets along with most classmates and often mentions"};
        static const std::vector<std::string> events = {
            "a group task earned praise from the homeroom teacher",
            "a seat change placed a patient deskmate nearby",
            "an inter-class quiz pushed the study group to meet",
            "a duty roster paired quiet students for a month"};
        static const std::vector<std::string> impacts = {
            "joins group work more readily within a small circle",
            "speaks up more yet still prefers familiar partners",
            "shares drafts early instead of working alone",
            "takes small roles while avoiding the spotlight"};
        std::string social = "In " + grade_name(c.grade) + ", " + name.display + " " +
                             rng.pick(openers) + " " + subjects.strong[0] +
                             " exercises with deskmates. After " + rng.pick(events) + ", " +
                             pron + " " + rng.pick(impacts) + ".";

        const int need = c.tier == Tier::Medium ? 2 : c.tier == Tier::Low ? 3
                         : c.tier == Tier::Poor ? 4 : 0;
        auto scores = draw_levels(c.tier, 8, need, rng);
        const bool r4_fault = fault_active("r4", *req.slot, req);
        // feasibility/proposing coherence (index 3 and 6)
        if (r4_fault) {
            scores[3] = 1;
            scores[6] = 6;
        } else if (scores[3] <= 2 && scores[6] > 3) {
            scores[6] = 3;
        }
        bool identical = true;
        for (int s : scores)
            if (s != scores[0]) identical = false;
        if (identical && !r4_fault) scores[1] = scores[1] == 6 ? 5 : scores[1] + 1;

        struct CDim {
            const char* phrase;
            std::vector<std::string> reasons;  // <= 20 chars, keeps the
                                               // paragraph under the band cap
        };
        const CDim cdims[8] = {
            {"fluency",
             {"ideas come steadily", "drafts start slowly", "output is brisk",
              "warm-ups help a lot", "pace varies by topic", "streams once settled"}},
            {"novelty",
             {"fresh pairings", "prefers the proven", "odd topics appeal",
              "borrows from comics", "remixes old examples", "likes rare angles"}},
            {"flexibility",
             {"switches methods", "keeps one framing", "asks for new angles",
              "pivots when nudged", "swaps tools mid-task", "adapts after breaks"}},
            {"feasibility",
             {"plans fit the time", "ideas outrun tools", "scopes tasks fairly",
              "budgets steps loosely", "checks supplies first", "trims overbig plans"}},
            {"problem finding",
             {"spots gaps early", "waits for prompts", "notices mismatches",
              "questions odd data", "flags vague wording", "senses missing steps"}},
            {"problem analysis",
             {"splits tasks well", "stops at one cause", "weighs two causes",
              "maps causes roughly", "tests guesses fast", "sorts clues by size"}},
            {"proposing solutions",
             {"offers one fix", "hesitates to suggest", "lists raw options",
              "pitches safe routes", "drafts two variants", "adapts peer ideas"}},
            {"improving solutions",
             {"revises on feedback", "leaves first drafts", "polishes when free",
              "tightens weak spots", "asks for reviews", "iterates in bursts"}},
        };
        std::string creativity;
        if (fault_active("template", *req.slot, req)) {
            for (int k = 0; k < 40; ++k) creativity += "Daily routines stay plain and steady. ";
            creativity = trim(creativity);
        } else {
            static const std::vector<std::string> copeners = {
                "In class tasks, ", "On group projects, ", "Across school tasks, ",
                "In weekly exercises, "};
            creativity = rng.pick(copeners);
            for (int i = 0; i < 8; ++i) {
                std::string phrase = cdims[i].phrase;
                if (i > 0) {
                    creativity += " ";
                    phrase[0] = static_cast<char>(
                        std::toupper(static_cast<unsigned char>(phrase[0])));
                }
                const std::string lvl = score_word(scores[i]);
                const std::string reason = rng.pick(cdims[i].reasons);
                switch (rng.below(4)) {
                    case 0: creativity += phrase + ": " + lvl + ", " + reason + "."; break;
                    case 1: creativity += phrase + " sits " + lvl + ", " + reason + "."; break;
                    case 2: creativity += phrase + " shows " + lvl + ", " + reason + "."; break;
                    default: creativity += phrase + " lands " + lvl + ", " + reason + "."; break;
                }
            }
            // radar trailer names the strongest and weakest dimensions
            int hi = 0, lo = 0;
            for (int i = 1; i < 8; ++i) {
                if (scores[i] > scores[hi]) hi = i;
                if (scores[i] < scores[lo]) lo = i;
            }
            if (!fault_active("r9", *req.slot, req)) {
                switch (rng.below(3)) {
                    case 0:
                        creativity += std::string(" Radar summary: strong ") + cdims[hi].phrase +
                                      ", weak " + cdims[lo].phrase + ".";
                        break;
                    case 1:
                        creativity += std::string(" Radar summary: ") + cdims[hi].phrase +
                                      " leads while " + cdims[lo].phrase + " lags.";
                        break;
                    default:
                        creativity += std::string(" In radar terms the profile peaks at ") +
                                      cdims[hi].phrase + " and dips at " + cdims[lo].phrase + ".";
                        break;
                }
            }
        }

        json out = json::object();
        out[field::kSocial] = social;
        out[field::kCreativity] = creativity;
        return out;
    }

    json mental_health_output(const CompletionRequest& req, const SamplingConstraint& c) const {
        Rng rng = purpose_rng(req, 5);
        Rng name_rng = purpose_rng(req, 1);
        (void)name_rng.below(2);
        const NamePick name = pick_name(c.gender, name_rng);
        const char* pro = c.gender == Gender::Female ? "Her" : "His";
        const char* pron = c.gender == Gender::Female ? "she" : "he";

        const bool low_tier = c.tier == Tier::Low || c.tier == Tier::Poor;
        int overall = tier_level(c.tier, rng);
        int happiness = tier_level(c.tier, rng);
        if (low_tier && overall > 3 && happiness > 3) happiness = 3;
        // risk classes: 1 = low wording, 2 = mild wording
        int dep = 1, anx = 1;
        if (low_tier) {
            (rng.below(2) == 0 ? dep : anx) = 2;
            if (rng.below(3) == 0) dep = anx = 2;
        } else if (rng.below(10) < 3) {
            (rng.below(2) == 0 ? dep : anx) = 2;
        }

        static const std::vector<std::string> trait_pairs = {
            "even-tempered and observant", "sensitive and self-monitoring",
            "upbeat and a little restless", "quiet and methodical",
            "earnest and easily flustered", "relaxed and slow to worry"};
        static const std::vector<std::string> overview_frames = {
            " generally comes across as ", " usually presents as ", " tends to appear ",
            " mostly reads as "};
        static const std::vector<std::string> overview_tails = {
            " during ordinary school weeks. ", " across the school term. ",
            " in day-to-day classes. ", " through most of the semester. "};
        static const std::vector<std::string> backgrounds = {
            "Background: homework pressure rises before term tests and can shorten sleep",
            "Background: a seating change early in the term briefly unsettled routines",
            "Background: weekend tutoring adds pressure near exams though evenings stay free",
            "Background: friction with a sibling over shared study space adds stress",
            "Background: a recent move meant new classmates and some early jitters",
            "Background: looming subject choices bring extra pressure this term"};
        static const std::vector<std::string> supports = {
            "copes through support from parents and a trusted teacher, plus regular walks",
            "relies on support from a close friend group and keeps a simple journal",
            "uses support from the homeroom teacher and short breaks between assignments",
            "draws support from family dinners and the school counselor's open hours",
            "leans on support from a deskmate and a weekly hobby club",
            "keeps support networks small: one close friend and a patient parent"};

        if (fault_active("template", *req.slot, req)) {
            std::string canned;
            for (int k = 0; k < 40; ++k) canned += "Daily routines stay plain and steady. ";
            json out = json::object();
            out[field::kMentalHealth] = trim(canned);
            return out;
        }

        auto risk_word = [](int cls) { return cls >= 2 ? "mild" : "low"; };
        const std::string her = to_lower(pro);
        std::string text =
            name.display + rng.pick(overview_frames) + rng.pick(trait_pairs) +
            rng.pick(overview_tails);
        const bool drop_happiness = fault_active("r10", *req.slot, req);
        if (rng.below(2) == 0) {
            text += std::string(pro) + " overall mental state is " + score_word(overall);
            if (!drop_happiness)
                text += " and " + her + " happiness index is " + score_word(happiness);
            text += "; " + her + " depression risk is " + risk_word(dep) + " and " + her +
                    " anxiety risk is " + risk_word(anx) + ". ";
        } else {
            text += std::string(pro) + " overall mental state sits at " + score_word(overall);
            if (!drop_happiness)
                text += " with a happiness index around " + std::string(score_word(happiness));
            text += "; depression risk stays " + std::string(risk_word(dep)) +
                    " while anxiety risk stays " + risk_word(anx) + ". ";
        }
        if (dep >= 2 || anx >= 2) {
            text += std::string("There may be a mild stress tendency around exams; ") +
                    "recommend further assessment only if it persists. ";
        } else {
            text += "There are no significant symptoms and the overall picture stays within an "
                    "everyday range. ";
        }
        text += rng.pick(backgrounds) + ". ";
        text += std::string(1, std::toupper(static_cast<unsigned char>(pron[0]))) +
                std::string(pron).substr(1) + " " + rng.pick(supports) + ".";
        static const std::vector<std::string> rituals = {
            "evening jogs",    "tidy desk setups", "playlist swaps", "window gardening",
            "stamp sorting",   "shared snacks",    "library corners", "sticker journals",
            "morning stretches", "quiet card games"};
        static const std::vector<std::string> ritual_frames = {
            " Small rituals like ", " Tiny habits like ", " Routines such as ",
            " A steady habit of "};
        static const std::vector<std::string> ritual_tails = {
            " steady the week.", " anchor the days.", " keep things even.",
            " round off the evenings."};
        text += rng.pick(ritual_frames) + rng.pick(rituals) + rng.pick(ritual_tails);
        if (fault_active("r12", *req.slot, req))
            text += " An aunt keeps insisting it is severe depression.";

        json out = json::object();
        out[field::kMentalHealth] = text;
        return out;
    }

    std::string answer_survey(const SurveyContext& ctx) const {
        json out = json::object();
        for (const auto& item : ctx.items)
            out[item.id] = survey_answer(ctx.cohort_cell, item.id, item.min_code, item.max_code);
        return out.dump();
    }
};

// ---------------------------------------------------------------------------
// Remote chat-completions backend
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 200;
    double multiplier = 2.0;
    int max_backoff_ms = 5000;
};

struct BackendConfig {
    std::string endpoint = "http://127.0.0.1:8008";  // scheme://host:port
    std::string path = "/v1/chat/completions";
    std::string model = "default-model";
    std::string token;                                // literal token, or
    std::string token_env = "PERSONAGEN_API_TOKEN";   // environment override
    int max_in_flight = 4;
    RetryPolicy retry;
    int timeout_sec = 120;

    std::string resolve_token() const {
        if (!token.empty()) return token;
        if (const char* env = std::getenv(token_env.c_str()); env && *env) return env;
        return {};
    }
};

namespace detail {

// Counting in-flight limiter that also records the observed peak.
class InFlightLimiter {
public:
    explicit InFlightLimiter(int limit) : limit_(limit) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return current_ < limit_; });
        ++current_;
        if (current_ > peak_) peak_ = current_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --current_;
        }
        cv_.notify_one();
    }
    int peak() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return peak_;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int current_ = 0;
    int peak_ = 0;
};

struct InFlightGuard {
    InFlightLimiter& limiter;
    explicit InFlightGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
    ~InFlightGuard() { limiter.release(); }
};

}  // namespace detail

}  // namespace personagen

// httplib pulled in only for the remote backend; the mock path never opens a
// socket.
#include <httplib.h>

namespace personagen {

class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(BackendConfig config)
        : config_(std::move(config)), limiter_(config_.max_in_flight) {
        if (config_.max_in_flight < 1)
            throw std::invalid_argument("backend: max_in_flight must be >= 1");
    }

    std::string complete(const CompletionRequest& req) override {
        detail::InFlightGuard guard(limiter_);
        json body = json::object();
        body["model"] = config_.model;
        json messages = json::array();
        messages.push_back({{"role", "user"}, {"content", req.prompt}});
        body["messages"] = std::move(messages);
        body["temperature"] = req.temperature;
        body["max_tokens"] = req.max_tokens;
        const std::string payload = body.dump();

        httplib::Headers headers;
        const std::string token = config_.resolve_token();
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

        int backoff_ms = config_.retry.initial_backoff_ms;
        std::string last_error = "no attempts made";
        for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms = std::min(static_cast<int>(backoff_ms * config_.retry.multiplier),
                                      config_.retry.max_backoff_ms);
                note_retry();
            }
            const auto start = std::chrono::steady_clock::now();
            httplib::Client client(config_.endpoint);
            client.set_connection_timeout(config_.timeout_sec, 0);
            client.set_read_timeout(config_.timeout_sec, 0);
            auto res = client.Post(config_.path, headers, payload, "application/json");
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
            note_request(ms);
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) {
                try {
                    const json doc = json::parse(res->body);
                    const auto& choice = doc.at("choices").at(0);
                    const std::string finish =
                        choice.value("finish_reason", std::string("stop"));
                    if (finish == "length") {
                        note_failure();
                        throw BackendError(BackendError::Kind::Truncated,
                                           "completion truncated (max tokens reached)");
                    }
                    return choice.at("message").at("content").get<std::string>();
                } catch (const BackendError&) {
                    throw;
                } catch (const std::exception& e) {
                    last_error = std::string("malformed response body: ") + e.what();
                    continue;
                }
            }
            if (res->status == 401 || res->status == 403) {
                note_failure();
                throw BackendError(BackendError::Kind::Auth,
                                   "authentication failed (" + std::to_string(res->status) + ")");
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "retryable status " + std::to_string(res->status);
                continue;
            }
            note_failure();
            throw BackendError(BackendError::Kind::Transport,
                               "request failed with status " + std::to_string(res->status));
        }
        note_failure();
        throw BackendError(BackendError::Kind::Exhausted,
                           "retries exhausted: " + last_error);
    }

    BackendStats stats() const override {
        std::lock_guard<std::mutex> lock(mutex_);
        BackendStats s = stats_;
        s.peak_in_flight = limiter_.peak();
        return s;
    }

private:
    BackendConfig config_;
    mutable detail::InFlightLimiter limiter_;
    mutable std::mutex mutex_;
    BackendStats stats_;

    void note_request(double ms) {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.requests;
        stats_.total_latency_ms += ms;
    }
    void note_retry() {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.retries;
    }
    void note_failure() {
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.failures;
    }
};

inline std::unique_ptr<Backend> make_backend(const std::string& kind, std::uint64_t seed,
                                             const std::string& fault_spec,
                                             const BackendConfig& config) {
    if (kind == "mock") return std::make_unique<MockBackend>(seed, parse_fault_specs(fault_spec));
    if (kind == "remote") return std::make_unique<RemoteBackend>(config);
    throw std::invalid_argument("unknown backend kind: " + kind);
}

}  // namespace personagen
