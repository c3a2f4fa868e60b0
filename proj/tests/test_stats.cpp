#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "personagen/stats.hpp"
#include "personagen/util.hpp"

using namespace personagen;

namespace {

// Textbook reference implementation, long double accumulation, written
// independently of the library path (two-pass, explicit covariance form).
long double pearson_reference(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

// Independent ranking: counting-based fractional ranks.
std::vector<double> rank_reference(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++less;
            if (v[j] == v[i]) ++equal;
        }
        out[i] = static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0 + 1.0;
    }
    return out;
}

long double spearman_reference(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_reference(rank_reference(x), rank_reference(y));
}

}  // namespace

TEST_CASE("pearson/spearman: affine identity and closed-form fixtures") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) y.push_back(2 * v + 3);
    CHECK(*pearson(x, y) == Catch::Approx(1.0).margin(1e-12));
    CHECK(*spearman(x, y) == Catch::Approx(1.0).margin(1e-12));

    // hand computation: x=(1,2,3), y=(1,3,2) -> r = 0.5
    CHECK(*pearson({1, 2, 3}, {1, 3, 2}) == Catch::Approx(0.5).margin(1e-12));
    CHECK(*spearman({1, 2, 3}, {1, 3, 2}) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("average ranks: tie handling definition") {
    auto ranks = average_ranks({1, 2, 2, 3});
    REQUIRE(ranks.size() == 4);
    CHECK(ranks[0] == 1.0);
    CHECK(ranks[1] == 2.5);
    CHECK(ranks[2] == 2.5);
    CHECK(ranks[3] == 4.0);
}

TEST_CASE("degenerate variance yields no correlation value") {
    CHECK_FALSE(pearson({1, 1, 1}, {1, 2, 3}).has_value());
    CHECK_FALSE(spearman({2, 2, 2}, {1, 2, 3}).has_value());
    CHECK_FALSE(pearson({1}, {2}).has_value());
    CHECK_THROWS(pearson({1, 2}, {1, 2, 3}));
}

TEST_CASE("oracle equivalence on 1000 random paired 16-vectors including ties") {
    Rng rng(2025);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(16), y(16);
        const bool tie_case = trial % 3 == 0;
        for (int i = 0; i < 16; ++i) {
            // quantize every third trial to force ties
            x[i] = tie_case ? static_cast<double>(rng.below(5)) : rng.unit() * 10.0 - 5.0;
            y[i] = tie_case ? static_cast<double>(rng.below(4)) : rng.unit() * 3.0 + 1.0;
        }
        auto r = pearson(x, y);
        auto rho = spearman(x, y);
        if (!r || !rho) continue;  // constant vector from quantization
        CHECK(std::abs(*r - static_cast<double>(pearson_reference(x, y))) < 1e-12);
        CHECK(std::abs(*rho - static_cast<double>(spearman_reference(x, y))) < 1e-12);
    }
}

TEST_CASE("pearson affine invariance, spearman monotone invariance") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(16), y(16);
        for (int i = 0; i < 16; ++i) {
            x[i] = rng.unit() * 4.0;
            y[i] = rng.unit() * 9.0 - 2.0;
        }
        const double a = rng.unit() * 4.0 - 2.0;
        if (std::abs(a) < 1e-3) continue;
        const double b = rng.unit() * 10.0;
        std::vector<double> ax(16);
        for (int i = 0; i < 16; ++i) ax[i] = a * x[i] + b;
        auto base = pearson(x, y);
        auto scaled = pearson(ax, y);
        REQUIRE(base);
        REQUIRE(scaled);
        CHECK(*scaled == Catch::Approx((a > 0 ? 1.0 : -1.0) * *base).margin(1e-10));

        // strictly monotone transform (cube preserves order incl. negatives)
        std::vector<double> mx(16);
        for (int i = 0; i < 16; ++i) mx[i] = x[i] * x[i] * x[i];
        auto rho1 = spearman(x, y);
        auto rho2 = spearman(mx, y);
        REQUIRE(rho1);
        REQUIRE(rho2);
        CHECK(*rho2 == Catch::Approx(*rho1).margin(1e-12));
    }
}

TEST_CASE("random independent vectors have near-zero mean correlation") {
    Rng rng(66);
    double sum = 0.0;
    int counted = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(16), y(16);
        for (int i = 0; i < 16; ++i) {
            x[i] = rng.unit();
            y[i] = rng.unit();
        }
        if (auto r = pearson(x, y)) {
            sum += *r;
            ++counted;
        }
    }
    CHECK(counted == 1000);
    CHECK(std::abs(sum / counted) < 0.05);
}

TEST_CASE("permutation p-value: strong association is significant, noise is not") {
    std::vector<double> x(16), y(16);
    for (int i = 0; i < 16; ++i) {
        x[i] = i;
        y[i] = 2.0 * i + 1.0;
    }
    auto p_strong = spearman_permutation_p(x, y, 2000, 11);
    REQUIRE(p_strong);
    CHECK(*p_strong < 0.01);

    Rng rng(5);
    for (int i = 0; i < 16; ++i) y[i] = rng.unit();
    auto p_noise = spearman_permutation_p(x, y, 2000, 11);
    REQUIRE(p_noise);
    CHECK(*p_noise > 0.01);

    // determinism
    CHECK(*spearman_permutation_p(x, y, 500, 3) == *spearman_permutation_p(x, y, 500, 3));
}
