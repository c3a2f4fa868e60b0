#pragma once

// Pearson / Spearman correlation over paired cohort means, with average ranks
// for ties and a seeded permutation p-value.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "personagen/util.hpp"

namespace personagen {

// Pearson r; nullopt when either side has zero variance or fewer than two
// paired values.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

// Average ranks (1-based); ties share the mean of their rank block.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

// Spearman rho = Pearson of average-ranked values.
inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2) return std::nullopt;
    return pearson(average_ranks(x), average_ranks(y));
}

// Two-sided permutation p-value for Spearman rho: shuffle one side, count
// permutations with |rho| at least as extreme; (hits+1)/(trials+1).
inline std::optional<double> spearman_permutation_p(const std::vector<double>& x,
                                                    const std::vector<double>& y,
                                                    std::size_t trials, std::uint64_t seed) {
    auto observed = spearman(x, y);
    if (!observed) return std::nullopt;
    const double threshold = std::abs(*observed) - 1e-12;
    Rng rng(mix_seed(seed, 0x9e51u));
    std::vector<double> shuffled = y;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        deterministic_shuffle(shuffled, rng);
        auto rho = spearman(x, shuffled);
        if (rho && std::abs(*rho) >= threshold) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(trials + 1);
}

}  // namespace personagen
