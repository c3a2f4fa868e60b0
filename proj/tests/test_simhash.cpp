#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "personagen/simhash.hpp"

using namespace personagen;

namespace {

// Straightforward independent SimHash reimplementation used as the oracle:
// same documented contract, written from the definition.
std::uint64_t simhash_oracle(const std::string& raw) {
    // normalization done with separate, obvious code
    std::string norm;
    {
        std::string lowered;
        for (char c : raw) lowered.push_back(static_cast<char>(std::tolower((unsigned char)c)));
        bool prev_space = true;
        for (char c : lowered) {
            if (std::isspace((unsigned char)c)) {
                prev_space = true;
            } else {
                if (prev_space && !norm.empty()) norm.push_back(' ');
                norm.push_back(c);
                prev_space = false;
            }
        }
    }
    if (norm.empty()) return 0;
    std::set<std::string> grams;  // distinct trigrams, unit weight each
    if (norm.size() < 3) {
        grams.insert(norm);
    } else {
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i) grams.insert(norm.substr(i, 3));
    }
    std::vector<long> votes(64, 0);
    for (const auto& g : grams) {
        std::uint64_t h = 14695981039346656037ULL;
        for (unsigned char c : g) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        for (int b = 0; b < 64; ++b) votes[b] += ((h >> b) & 1) ? 1 : -1;
    }
    std::uint64_t fp = 0;
    for (int b = 0; b < 64; ++b)
        if (votes[b] > 0) fp |= (1ULL << b);
    return fp;
}

std::string random_narrative(Rng& rng) {
    static const std::vector<std::string> words = {
        "art",      "mathematics", "pressure", "support",  "friends",  "quიet",  "study",
        "teacher",  "family",      "creative", "anxious",  "habit",    "score",  "practice",
        "drawing",  "classroom",   "reading",  "homework", "confident", "focus", "中文",
        "稳定",     "团队",        "学习",
    };
    std::string out;
    const std::size_t n = 5 + rng.index(60);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out.push_back(' ');
        out += rng.pick(words);
    }
    return out;
}

}  // namespace

TEST_CASE("simhash64 anchors: identity and normalization") {
    CHECK(simhash64_value("identical text") == simhash64_value("identical text"));
    CHECK(hamming64(simhash64_value("same"), simhash64_value("same")) == 0);
    // trailing space is normalized away
    CHECK(simhash64_value("text body") == simhash64_value("text body "));
    CHECK(simhash64_value("Text  BODY") == simhash64_value("text body"));
    auto empty = simhash64("   \t ");
    CHECK(empty.empty_text);
    CHECK(empty.value == 0);
}

TEST_CASE("simhash64 matches the independent oracle on 1000 random pairs") {
    Rng rng(321);
    for (int i = 0; i < 1000; ++i) {
        const std::string a = random_narrative(rng);
        const std::string b = random_narrative(rng);
        const auto fa = simhash64_value(a);
        const auto fb = simhash64_value(b);
        CHECK(fa == simhash_oracle(a));
        CHECK(fb == simhash_oracle(b));
        CHECK(hamming64(fa, fb) == hamming64(simhash_oracle(a), simhash_oracle(b)));
    }
}

TEST_CASE("near_duplicate_pairs equals all-pairs brute force on corpora <= 2000") {
    Rng rng(99);
    for (int threshold : {0, 3, 7}) {
        std::vector<std::uint64_t> fps;
        const std::size_t n = 1500;
        fps.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && rng.below(12) == 0) {
                // plant a close variant of an earlier fingerprint
                std::uint64_t v = fps[rng.index(fps.size())];
                const int flips = static_cast<int>(rng.below(5));
                for (int f = 0; f < flips; ++f) v ^= 1ULL << rng.below(64);
                fps.push_back(v);
            } else {
                fps.push_back(rng.next());
            }
        }
        auto banded = near_duplicate_index_pairs(fps, threshold);
        std::vector<std::pair<std::size_t, std::size_t>> brute;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (hamming64(fps[i], fps[j]) <= threshold) brute.emplace_back(i, j);
        CHECK(banded == brute);
    }
}

TEST_CASE("planted exact duplicates are reported at threshold 3") {
    Rng rng(7);
    std::vector<Fingerprint> fps;
    for (int i = 0; i < 200; ++i)
        fps.push_back(simhash64(random_narrative(rng), "p" + std::to_string(i)));
    // plant 10 exact duplicates of the first ten texts
    std::vector<std::pair<std::string, std::string>> expected;
    for (int i = 0; i < 10; ++i) {
        Fingerprint dup = fps[static_cast<std::size_t>(i)];
        dup.persona_id = "dup" + std::to_string(i);
        expected.emplace_back(fps[static_cast<std::size_t>(i)].persona_id, dup.persona_id);
        fps.push_back(dup);
    }
    auto pairs = near_duplicate_pairs(fps, 3);
    for (const auto& e : expected) {
        bool found = false;
        for (const auto& p : pairs)
            if (p == e || (p.first == e.second && p.second == e.first)) found = true;
        CHECK(found);
    }
}

TEST_CASE("sampled_hamming_stats: identical corpus and exhaustive equivalence") {
    std::vector<std::uint64_t> same(50, simhash64_value("all the same text"));
    auto stats = sampled_hamming_stats(same, 100, 1);
    CHECK(stats.mean == 0.0);
    CHECK(stats.stddev == 0.0);

    Rng rng(13);
    std::vector<std::uint64_t> fps;
    for (int i = 0; i < 40; ++i) fps.push_back(rng.next());
    const std::size_t all = 40 * 39 / 2;
    auto exact = sampled_hamming_stats(fps, all, 5);
    CHECK(exact.exhaustive);
    // independent all-pairs recomputation
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < fps.size(); ++i)
        for (std::size_t j = i + 1; j < fps.size(); ++j) {
            double d = hamming64(fps[i], fps[j]);
            sum += d;
            sq += d * d;
        }
    const double mean = sum / all;
    const double var = sq / all - mean * mean;
    CHECK(exact.mean == Catch::Approx(mean).epsilon(1e-12));
    CHECK(exact.stddev == Catch::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(exact.pairs == all);

    // sampling determinism
    auto s1 = sampled_hamming_stats(fps, 100, 77);
    auto s2 = sampled_hamming_stats(fps, 100, 77);
    CHECK(s1.mean == s2.mean);
    CHECK(s1.stddev == s2.stddev);
}

TEST_CASE("distinct_n anchors and oracle") {
    CHECK(distinct_n("abcd", 1).ratio == 1.0);
    CHECK(distinct_n("aaaa", 1).ratio == 0.25);
    CHECK(distinct_n("aaaa", 2).ratio == Catch::Approx(1.0 / 3.0));
    auto shorty = distinct_n("a", 2);
    CHECK(shorty.ratio == 1.0);
    CHECK(shorty.short_text);

    // oracle: independent set-based recomputation over code points
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
        const std::string text = random_narrative(rng);
        for (int n : {1, 2}) {
            auto got = distinct_n(text, n);
            auto cps = utf8_codepoints(text);
            if (cps.size() < static_cast<std::size_t>(n)) {
                CHECK(got.ratio == 1.0);
                continue;
            }
            std::set<std::vector<char32_t>> uniq;
            std::size_t total = 0;
            for (std::size_t i = 0; i + n <= cps.size(); ++i) {
                uniq.insert(std::vector<char32_t>(cps.begin() + i, cps.begin() + i + n));
                ++total;
            }
            CHECK(got.ratio ==
                  Catch::Approx(double(uniq.size()) / double(total)).epsilon(1e-12));
        }
    }
}

TEST_CASE("distinct_n decreases when text is replaced by a constant character") {
    const std::string varied = "many different characters here";
    std::string constant(varied.size(), 'x');
    CHECK(distinct_n(constant, 1).ratio < distinct_n(varied, 1).ratio);
}

TEST_CASE("jaccard_char anchors and set-arithmetic fixture") {
    CHECK(jaccard_char("same text", "same text").value == 1.0);
    CHECK(jaccard_char("abc", "xyz").value == 0.0);
    auto both_empty = jaccard_char("", "  ");
    CHECK(both_empty.value == 1.0);
    CHECK(both_empty.both_empty);

    // fixture: a="abca", b="bcd" -> sets {a,b,c} and {b,c,d}; J = 2/4
    CHECK(jaccard_char("abca", "bcd").value == Catch::Approx(0.5));
}

TEST_CASE("cross_component_flags flags template-like personas") {
    Persona p;
    p.values_text = "shared boilerplate paragraph body";
    p.creativity_text = "shared boilerplate paragraph body";
    p.mental_health_text = "a genuinely different description of wellbeing";
    auto flags = cross_component_flags(p, 0.8);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0].first == field::kValues);
    CHECK(flags[0].second == field::kCreativity);
}

TEST_CASE("dedup: greedy keep-first semantics and oracle equivalence") {
    Rng rng(17);
    std::vector<Fingerprint> fps;
    for (int i = 0; i < 600; ++i) {
        Fingerprint f;
        f.persona_id = "p" + std::to_string(i);
        if (i > 0 && rng.below(4) == 0) {
            f.value = fps[rng.index(fps.size())].value;
            const int flips = static_cast<int>(rng.below(6));
            for (int k = 0; k < flips; ++k) f.value ^= 1ULL << rng.below(64);
        } else {
            f.value = rng.next();
        }
        fps.push_back(f);
    }
    const int threshold = 3;
    auto result = dedup_fingerprints(fps, threshold);

    // brute-force greedy oracle
    std::vector<std::size_t> kept_oracle;
    std::vector<std::size_t> removed_oracle;
    for (std::size_t i = 0; i < fps.size(); ++i) {
        bool removed = false;
        for (std::size_t k : kept_oracle) {
            if (hamming64(fps[i].value, fps[k].value) <= threshold) {
                removed = true;
                break;
            }
        }
        if (removed) removed_oracle.push_back(i);
        else kept_oracle.push_back(i);
    }
    CHECK(result.kept_indices == kept_oracle);
    CHECK(result.removals.size() == removed_oracle.size());

    // post-condition: no near-duplicate pairs remain among the kept set
    std::vector<std::uint64_t> kept_values;
    for (std::size_t i : result.kept_indices) kept_values.push_back(fps[i].value);
    CHECK(near_duplicate_index_pairs(kept_values, threshold).empty());

    // idempotence
    std::vector<Fingerprint> kept_fps;
    for (std::size_t i : result.kept_indices) kept_fps.push_back(fps[i]);
    auto again = dedup_fingerprints(kept_fps, threshold);
    CHECK(again.removals.empty());
    CHECK(again.kept_indices.size() == kept_fps.size());
}

TEST_CASE("dedup keeps earlier personas and logs removals") {
    std::vector<Persona> corpus(3);
    corpus[0].id = "first";
    corpus[0].values_text = "identical narrative body for duplication";
    corpus[1].id = "second";
    corpus[1].values_text = "completely unrelated text about music and sports";
    corpus[2].id = "third";
    corpus[2].values_text = "identical narrative body for duplication";
    std::vector<Persona> kept;
    auto result = dedup_corpus(corpus, 3, &kept);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == "first");
    CHECK(kept[1].id == "second");
    REQUIRE(result.removals.size() == 1);
    CHECK(result.removals[0].removed_id == "third");
    CHECK(result.removals[0].kept_id == "first");
    CHECK(result.removals[0].distance == 0);
}
