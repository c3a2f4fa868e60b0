#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace personagen {

// ---------------------------------------------------------------------------
// Hashing. FNV-1a is the project-wide trigram/config hash; the constants are
// part of the corpus fingerprint contract and must not change.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffsetBasis) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t value, std::uint64_t seed = kFnvOffsetBasis) {
    std::uint64_t h = seed;
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xffULL;
        h *= kFnvPrime;
    }
    return h;
}

// splitmix64; used to derive well-mixed RNG seeds from (run seed, salt...).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0,
                              std::uint64_t d = 0) {
    return splitmix64(splitmix64(splitmix64(splitmix64(a) ^ b) ^ c) ^ d);
}

// Deterministic engine wrapper. std::shuffle / std::uniform_int_distribution
// are implementation-defined across standard libraries, so anything that must
// be byte-reproducible draws through these helpers instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

    std::uint64_t next() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Unbiased bounded draw (rejection sampling), n > 0.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = ~0ULL - (~0ULL % n);
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    template <typename T>
    const T& pick(const std::vector<T>& pool) {
        if (pool.empty()) throw std::invalid_argument("Rng::pick: empty pool");
        return pool[index(pool.size())];
    }

private:
    std::uint64_t state_;
};

template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.index(i)]);
    }
}

// ---------------------------------------------------------------------------
// String helpers (ASCII case handling; narrative text is UTF-8 and the byte
// values of multi-byte sequences pass through untouched).
// ---------------------------------------------------------------------------

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Lowercase + collapse whitespace runs to single spaces + trim. This is the
// normalization applied before fingerprinting and Jaccard.
inline std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // drop leading whitespace
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (needle.size() > haystack.size()) return false;
    const std::string h = to_lower(haystack);
    const std::string n = to_lower(needle);
    return h.find(n) != std::string::npos;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Decode UTF-8 into code points; invalid bytes map to U+FFFD one byte at a
// time so malformed input still yields a deterministic sequence.
inline std::vector<char32_t> utf8_codepoints(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            len = 1;
            cp = c;
        } else if ((c >> 5) == 0x6) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c >> 4) == 0xe) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c >> 3) == 0x1e) {
            len = 4;
            cp = c & 0x07;
        } else {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3f);
        }
        if (!ok) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline std::size_t utf8_length(std::string_view s) { return utf8_codepoints(s).size(); }

// ---------------------------------------------------------------------------
// Percentiles. Nearest-rank with >= at upper boundaries: the returned value is
// the smallest sample element v such that at most a q-fraction of the sample
// is strictly below v's rank block; membership tests then use `x >= value`.
// For integral q*n this makes "x >= percentile(q)" select exactly the top
// (1-q) share when values are distinct.
// ---------------------------------------------------------------------------
inline double percentile_threshold(std::vector<double> sorted_ascending, double q) {
    if (sorted_ascending.empty()) throw std::invalid_argument("percentile of empty sample");
    if (q <= 0.0) return sorted_ascending.front();
    const double n = static_cast<double>(sorted_ascending.size());
    double pos = q * n;
    std::size_t idx;
    if (std::abs(pos - std::round(pos)) < 1e-9) {
        idx = static_cast<std::size_t>(std::llround(pos));
    } else {
        idx = static_cast<std::size_t>(std::ceil(pos));
    }
    if (idx >= sorted_ascending.size()) idx = sorted_ascending.size() - 1;
    return sorted_ascending[idx];
}

inline int hamming64(std::uint64_t a, std::uint64_t b) {
    return __builtin_popcountll(a ^ b);
}

}  // namespace personagen
