#pragma once

// SimHash fingerprinting, exact near-duplicate detection, Distinct-n and
// character-level Jaccard.
//
// Fingerprint contract (bit-exact across runs and platforms):
//   1. normalize: lowercase (ASCII), collapse whitespace runs, trim;
//   2. grams: the set of distinct byte trigrams of the normalized text (a
//      shorter non-empty text contributes itself as a single gram);
//   3. each distinct gram hashes with FNV-1a/64 and votes +-1 per bit with
//      unit weight; bit b of the fingerprint is 1 iff its vote sum is > 0.
// Empty-after-normalization text maps to the all-zero fingerprint with a flag.
// Unit (per-type) weighting keeps high-frequency trigrams from dominating the
// votes, so unrelated texts land far apart in Hamming space.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "personagen/persona.hpp"
#include "personagen/util.hpp"

namespace personagen {

struct Fingerprint {
    std::uint64_t value = 0;
    std::string persona_id;
    bool empty_text = false;
};

inline std::uint64_t simhash64_value(std::string_view text) {
    const std::string norm = normalize_text(text);
    if (norm.empty()) return 0;
    std::vector<std::uint64_t> hashes;
    if (norm.size() < 3) {
        hashes.push_back(fnv1a64(norm));
    } else {
        hashes.reserve(norm.size());
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i)
            hashes.push_back(fnv1a64(std::string_view(norm).substr(i, 3)));
        std::sort(hashes.begin(), hashes.end());
        hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
    }
    int votes[64] = {0};
    for (std::uint64_t h : hashes)
        for (int b = 0; b < 64; ++b) votes[b] += (h >> b) & 1ULL ? 1 : -1;
    std::uint64_t fp = 0;
    for (int b = 0; b < 64; ++b)
        if (votes[b] > 0) fp |= 1ULL << b;
    return fp;
}

inline Fingerprint simhash64(std::string_view text, std::string persona_id = {}) {
    Fingerprint fp;
    fp.persona_id = std::move(persona_id);
    fp.empty_text = normalize_text(text).empty();
    fp.value = fp.empty_text ? 0 : simhash64_value(text);
    return fp;
}

inline Fingerprint fingerprint_persona(const Persona& p) {
    return simhash64(long_text_concat(p), p.id);
}

// ---------------------------------------------------------------------------
// Near-duplicate detection. Banding keeps this subquadratic while staying
// exact: with B = threshold+1 bands, two fingerprints within the threshold
// differ in at most `threshold` bits, so at least one band matches exactly
// (pigeonhole); every candidate pair is then verified with the true distance.
// ---------------------------------------------------------------------------

inline std::vector<std::pair<std::size_t, std::size_t>> near_duplicate_index_pairs(
    const std::vector<std::uint64_t>& fps, int threshold) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (threshold < 0 || fps.size() < 2) return pairs;
    if (threshold >= 64) {
        for (std::size_t i = 0; i < fps.size(); ++i)
            for (std::size_t j = i + 1; j < fps.size(); ++j) pairs.emplace_back(i, j);
        return pairs;
    }
    const int bands = threshold + 1;
    std::set<std::pair<std::size_t, std::size_t>> found;
    for (int band = 0; band < bands; ++band) {
        const int lo = band * 64 / bands;
        const int hi = (band + 1) * 64 / bands;  // exclusive
        const int width = hi - lo;
        const std::uint64_t mask = width >= 64 ? ~0ULL : ((1ULL << width) - 1);
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < fps.size(); ++i)
            buckets[(fps[i] >> lo) & mask].push_back(i);
        for (const auto& [key, members] : buckets) {
            if (members.size() < 2) continue;
            for (std::size_t a = 0; a < members.size(); ++a)
                for (std::size_t b = a + 1; b < members.size(); ++b) {
                    const std::size_t i = members[a], j = members[b];
                    if (hamming64(fps[i], fps[j]) <= threshold) found.emplace(i, j);
                }
        }
    }
    pairs.assign(found.begin(), found.end());
    return pairs;
}

inline std::vector<std::pair<std::string, std::string>> near_duplicate_pairs(
    const std::vector<Fingerprint>& fps, int threshold) {
    std::vector<std::uint64_t> values;
    values.reserve(fps.size());
    for (const auto& f : fps) values.push_back(f.value);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [i, j] : near_duplicate_index_pairs(values, threshold))
        out.emplace_back(fps[i].persona_id, fps[j].persona_id);
    return out;
}

struct HammingStats {
    double mean = 0.0;
    double stddev = 0.0;  // population stddev over the evaluated pairs
    std::size_t pairs = 0;
    bool exhaustive = false;
};

// Seeded uniform sample of distinct unordered pairs. When n_pairs covers all
// pairs the statistics are exact all-pairs values.
inline HammingStats sampled_hamming_stats(const std::vector<std::uint64_t>& fps,
                                          std::size_t n_pairs, std::uint64_t seed) {
    HammingStats stats;
    const std::size_t n = fps.size();
    if (n < 2 || n_pairs == 0) return stats;
    const std::uint64_t total =
        static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;

    double sum = 0.0, sq = 0.0;
    std::size_t m = 0;
    auto accumulate = [&](std::size_t i, std::size_t j) {
        const double d = static_cast<double>(hamming64(fps[i], fps[j]));
        sum += d;
        sq += d * d;
        ++m;
    };
    if (n_pairs >= total) {
        stats.exhaustive = true;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) accumulate(i, j);
    } else {
        Rng rng(mix_seed(seed, 0x4a11edu));
        std::set<std::pair<std::size_t, std::size_t>> seen;
        while (seen.size() < n_pairs) {
            std::size_t i = rng.index(n);
            std::size_t j = rng.index(n);
            if (i == j) continue;
            if (i > j) std::swap(i, j);
            if (seen.emplace(i, j).second) accumulate(i, j);
        }
    }
    stats.pairs = m;
    stats.mean = sum / static_cast<double>(m);
    const double var = sq / static_cast<double>(m) - stats.mean * stats.mean;
    stats.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
    return stats;
}

// ---------------------------------------------------------------------------
// Distinct-n and Jaccard
// ---------------------------------------------------------------------------

struct DistinctResult {
    double ratio = 0.0;
    bool short_text = false;  // fewer code points than n; ratio defined as 1
};

// Unique character n-grams over total n-grams (characters = code points).
inline DistinctResult distinct_n(std::string_view text, int n) {
    DistinctResult out;
    const auto cps = utf8_codepoints(text);
    if (cps.size() < static_cast<std::size_t>(n)) {
        out.ratio = 1.0;
        out.short_text = true;
        return out;
    }
    std::set<std::u32string> unique;
    const std::size_t total = cps.size() - static_cast<std::size_t>(n) + 1;
    for (std::size_t i = 0; i < total; ++i)
        unique.insert(std::u32string(cps.begin() + static_cast<std::ptrdiff_t>(i),
                                     cps.begin() + static_cast<std::ptrdiff_t>(i + n)));
    out.ratio = static_cast<double>(unique.size()) / static_cast<double>(total);
    return out;
}

struct CorpusDistinct {
    std::vector<double> per_sample;
    double mean = 0.0;
    std::size_t short_texts = 0;
};

inline CorpusDistinct corpus_distinct_n(const std::vector<Persona>& corpus, int n) {
    CorpusDistinct out;
    double sum = 0.0;
    for (const auto& p : corpus) {
        auto r = distinct_n(long_text_concat(p), n);
        out.per_sample.push_back(r.ratio);
        if (r.short_text) ++out.short_texts;
        sum += r.ratio;
    }
    if (!corpus.empty()) out.mean = sum / static_cast<double>(corpus.size());
    return out;
}

struct JaccardResult {
    double value = 0.0;
    bool both_empty = false;  // defined as 1 with a flag
};

// Jaccard over character (code point) sets after simhash normalization.
inline JaccardResult jaccard_char(std::string_view a, std::string_view b) {
    JaccardResult out;
    const auto ca = utf8_codepoints(normalize_text(a));
    const auto cb = utf8_codepoints(normalize_text(b));
    const std::set<char32_t> sa(ca.begin(), ca.end());
    const std::set<char32_t> sb(cb.begin(), cb.end());
    if (sa.empty() && sb.empty()) {
        out.value = 1.0;
        out.both_empty = true;
        return out;
    }
    std::size_t inter = 0;
    for (char32_t c : sa)
        if (sb.count(c)) ++inter;
    const std::size_t uni = sa.size() + sb.size() - inter;
    out.value = static_cast<double>(inter) / static_cast<double>(uni);
    return out;
}

struct ComponentOverlap {
    std::string first;
    std::string second;
    double jaccard = 0.0;
};

// Template-likeness screen: pairwise Jaccard between the three long-text
// components; pairs above the threshold are flagged.
inline std::vector<ComponentOverlap> cross_component_flags(const Persona& p,
                                                           double threshold = 0.8) {
    const std::array<std::pair<const char*, const std::string*>, 3> fields = {{
        {field::kValues, &p.values_text},
        {field::kCreativity, &p.creativity_text},
        {field::kMentalHealth, &p.mental_health_text},
    }};
    std::vector<ComponentOverlap> out;
    for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t j = i + 1; j < fields.size(); ++j) {
            const auto r = jaccard_char(*fields[i].second, *fields[j].second);
            if (r.value > threshold)
                out.push_back(ComponentOverlap{fields[i].first, fields[j].first, r.value});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Dedup: greedy pass in corpus order. A persona is removed iff it is within
// the threshold of an earlier kept persona. Incremental banding keeps the
// scan exact and near-linear.
// ---------------------------------------------------------------------------

struct Removal {
    std::string removed_id;
    std::string kept_id;
    int distance = 0;
};

struct DedupResult {
    std::vector<std::size_t> kept_indices;
    std::vector<Removal> removals;
};

inline DedupResult dedup_fingerprints(const std::vector<Fingerprint>& fps, int threshold) {
    DedupResult out;
    if (threshold < 0) threshold = 0;
    const int bands = threshold >= 64 ? 1 : threshold + 1;
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> buckets(
        static_cast<std::size_t>(bands));
    auto band_key = [&](std::uint64_t fp, int band) {
        if (threshold >= 64) return static_cast<std::uint64_t>(0);
        const int lo = band * 64 / bands;
        const int hi = (band + 1) * 64 / bands;
        const int width = hi - lo;
        const std::uint64_t mask = width >= 64 ? ~0ULL : ((1ULL << width) - 1);
        return (fp >> lo) & mask;
    };

    for (std::size_t i = 0; i < fps.size(); ++i) {
        std::size_t matched_kept = 0;
        int matched_distance = 0;
        bool removed = false;
        std::set<std::size_t> candidates;
        for (int band = 0; band < bands; ++band) {
            auto it = buckets[static_cast<std::size_t>(band)].find(band_key(fps[i].value, band));
            if (it == buckets[static_cast<std::size_t>(band)].end()) continue;
            for (std::size_t k : it->second) candidates.insert(k);
        }
        for (std::size_t k : candidates) {  // ordered: earliest kept match wins
            const int d = hamming64(fps[i].value, fps[k].value);
            if (d <= threshold) {
                matched_kept = k;
                matched_distance = d;
                removed = true;
                break;
            }
        }
        if (removed) {
            out.removals.push_back(
                Removal{fps[i].persona_id, fps[matched_kept].persona_id, matched_distance});
        } else {
            out.kept_indices.push_back(i);
            for (int band = 0; band < bands; ++band)
                buckets[static_cast<std::size_t>(band)][band_key(fps[i].value, band)].push_back(i);
        }
    }
    return out;
}

inline DedupResult dedup_corpus(const std::vector<Persona>& corpus, int threshold,
                                std::vector<Persona>* kept_out) {
    std::vector<Fingerprint> fps;
    fps.reserve(corpus.size());
    for (const auto& p : corpus) fps.push_back(fingerprint_persona(p));
    auto result = dedup_fingerprints(fps, threshold);
    if (kept_out) {
        kept_out->clear();
        for (std::size_t i : result.kept_indices) kept_out->push_back(corpus[i]);
    }
    return result;
}

}  // namespace personagen
