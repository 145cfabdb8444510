#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "termshift/stats.hpp"

#include "reference_oracles.hpp"

using namespace termshift;

namespace {

std::vector<std::pair<double, double>> as_pairs(const std::vector<double>& diffs) {
    std::vector<std::pair<double, double>> pairs;
    for (double d : diffs) pairs.emplace_back(0.0, d);
    return pairs;
}

// distinct values (and distinct absolute values for Wilcoxon)
std::vector<double> distinct_sample(std::mt19937_64& rng, size_t n, bool distinct_abs) {
    std::set<double> seen;
    std::vector<double> out;
    while (out.size() < n) {
        double v = (static_cast<double>(rng() % 2000) - 1000.0 + 0.5) / 7.0;
        double key = distinct_abs ? std::fabs(v) : v;
        if (v != 0.0 && seen.insert(key).second) out.push_back(v);
    }
    return out;
}

}  // namespace

TEST_CASE("wilcoxon exact on all-positive diffs [1..5]") {
    auto r = wilcoxon_signed_rank(as_pairs({1, 2, 3, 4, 5}));
    CHECK(r.exact);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == Catch::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("wilcoxon all-zero diffs is degenerate") {
    auto r = wilcoxon_signed_rank(as_pairs({0, 0, 0}));
    CHECK(r.degenerate);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK_THROWS_AS(wilcoxon_signed_rank({}), std::invalid_argument);
}

TEST_CASE("wilcoxon exact p equals brute-force enumeration") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 400; ++rep) {
        size_t n = 2 + rng() % 11;  // up to 12
        auto diffs = distinct_sample(rng, n, true);
        auto r = wilcoxon_signed_rank(as_pairs(diffs));
        REQUIRE(r.exact);
        double want = oracle::wilcoxon_exact_bruteforce(diffs);
        CHECK(std::fabs(r.p_value - want) < 1e-12);
    }
}

TEST_CASE("wilcoxon two-sided p is invariant under negating all diffs") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 200; ++rep) {
        size_t n = 3 + rng() % 20;
        auto diffs = distinct_sample(rng, n, true);
        std::vector<double> neg;
        for (double d : diffs) neg.push_back(-d);
        auto a = wilcoxon_signed_rank(as_pairs(diffs));
        auto b = wilcoxon_signed_rank(as_pairs(neg));
        CHECK(a.p_value == Catch::Approx(b.p_value).epsilon(1e-12));
        CHECK(a.statistic == Catch::Approx(b.statistic));
    }
}

TEST_CASE("wilcoxon approximate agrees with exact within 0.02 on untied samples") {
    std::mt19937_64 rng(13);
    WilcoxonOptions force_approx;
    force_approx.exact_cutoff = 0;
    for (int rep = 0; rep < 200; ++rep) {
        size_t n = 10 + rng() % 16;  // 10..25, inside the exact range
        auto diffs = distinct_sample(rng, n, true);
        auto exact = wilcoxon_signed_rank(as_pairs(diffs));
        auto approx = wilcoxon_signed_rank(as_pairs(diffs), force_approx);
        REQUIRE(exact.exact);
        REQUIRE(!approx.exact);
        CHECK(std::fabs(exact.p_value - approx.p_value) <= 0.02);
    }
}

TEST_CASE("wilcoxon pratt policy matches discard when no zeros and handles zeros") {
    std::mt19937_64 rng(14);
    WilcoxonOptions pratt;
    pratt.zero_policy = ZeroDiffPolicy::PRATT;
    auto diffs = distinct_sample(rng, 8, true);
    auto a = wilcoxon_signed_rank(as_pairs(diffs));
    auto b = wilcoxon_signed_rank(as_pairs(diffs), pratt);
    CHECK(a.p_value == Catch::Approx(b.p_value).epsilon(1e-12));

    auto with_zeros = diffs;
    with_zeros.push_back(0.0);
    with_zeros.push_back(0.0);
    auto c = wilcoxon_signed_rank(as_pairs(with_zeros), pratt);
    CHECK(c.p_value >= 0.0);
    CHECK(c.p_value <= 1.0);
    CHECK(!c.exact);  // zeros force the approximation
}

TEST_CASE("mann-whitney exact examples") {
    auto r = mann_whitney_u({1, 2}, {3, 4});
    CHECK(r.exact);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

    auto same = mann_whitney_u({1, 2}, {1, 2});
    CHECK(same.p_value == 1.0);

    CHECK_THROWS_AS(mann_whitney_u({}, {1.0}), std::invalid_argument);
}

TEST_CASE("mann-whitney exact p equals brute-force enumeration") {
    std::mt19937_64 rng(15);
    for (int rep = 0; rep < 300; ++rep) {
        size_t na = 1 + rng() % 6, nb = 1 + rng() % 6;
        auto all = distinct_sample(rng, na + nb, false);
        std::vector<double> a(all.begin(), all.begin() + static_cast<long>(na));
        std::vector<double> b(all.begin() + static_cast<long>(na), all.end());
        auto r = mann_whitney_u(a, b);
        REQUIRE(r.exact);
        double want = oracle::mann_whitney_exact_bruteforce(a, b);
        CHECK(std::fabs(r.p_value - want) < 1e-12);
    }
}

TEST_CASE("mann-whitney invariants") {
    std::mt19937_64 rng(16);
    for (int rep = 0; rep < 200; ++rep) {
        size_t na = 2 + rng() % 10, nb = 2 + rng() % 10;
        auto all = distinct_sample(rng, na + nb, false);
        std::vector<double> a(all.begin(), all.begin() + static_cast<long>(na));
        std::vector<double> b(all.begin() + static_cast<long>(na), all.end());
        auto ab = mann_whitney_u(a, b);
        auto ba = mann_whitney_u(b, a);
        CHECK(ab.p_value == Catch::Approx(ba.p_value).epsilon(1e-12));
        CHECK(ab.statistic == Catch::Approx(ba.statistic));
        // U_a + U_b = n_a * n_b: recompute U_a from rank sums directly
        std::vector<double> pooled(a);
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::vector<size_t> idx(pooled.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return pooled[x] < pooled[y]; });
        double ra = 0;
        for (size_t r2 = 0; r2 < idx.size(); ++r2)
            if (idx[r2] < na) ra += static_cast<double>(r2 + 1);
        double ua = ra - static_cast<double>(na * (na + 1)) / 2.0;
        double ub = static_cast<double>(na * nb) - ua;
        CHECK(ua + ub == Catch::Approx(static_cast<double>(na * nb)));
        CHECK(ab.statistic == Catch::Approx(std::min(ua, ub)));
    }
}

TEST_CASE("kruskal-wallis on [1,2,3],[4,5,6],[7,8,9]") {
    auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    CHECK(r.statistic == Catch::Approx(7.2).epsilon(1e-12));
    CHECK(r.p_value == Catch::Approx(std::exp(-3.6)).margin(1e-9));
}

TEST_CASE("kruskal-wallis degenerate and error cases") {
    auto r = kruskal_wallis({{1, 1}, {1, 1}});
    CHECK(r.degenerate);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK_THROWS_AS(kruskal_wallis({{1.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(kruskal_wallis({{1.0}, {}}), std::invalid_argument);

    auto identical_groups = kruskal_wallis({{1, 2}, {1, 2}});
    CHECK(identical_groups.statistic == Catch::Approx(0.0).margin(1e-12));
    CHECK(identical_groups.p_value == 1.0);
}

TEST_CASE("kruskal-wallis is invariant under strictly increasing transforms") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::vector<double>> groups, transformed;
        size_t g = 2 + rng() % 3;
        for (size_t i = 0; i < g; ++i) {
            size_t n = 2 + rng() % 8;
            auto values = distinct_sample(rng, n, false);
            std::vector<double> tf;
            for (double v : values) tf.push_back(std::exp(v / 50.0));
            groups.push_back(values);
            transformed.push_back(tf);
        }
        auto a = kruskal_wallis(groups);
        auto b = kruskal_wallis(transformed);
        CHECK(a.statistic == Catch::Approx(b.statistic).margin(1e-9));
    }
}

TEST_CASE("holm correction") {
    CHECK(holm_correction({0.01, 0.04}) == std::vector<double>{0.02, 0.04});
    CHECK(holm_correction({0.03}) == std::vector<double>{0.03});
    CHECK(holm_correction({0.6, 0.5}) == std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(holm_correction({-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(holm_correction({1.1}), std::invalid_argument);
    CHECK(holm_correction({}).empty());
}

TEST_CASE("holm-adjusted values dominate raw values and are capped and monotone") {
    std::mt19937_64 rng(18);
    for (int rep = 0; rep < 200; ++rep) {
        size_t m = 1 + rng() % 10;
        std::vector<double> raw;
        for (size_t i = 0; i < m; ++i)
            raw.push_back(static_cast<double>(rng() % 10001) / 10000.0);
        auto adj = holm_correction(raw);
        REQUIRE(adj.size() == m);
        std::vector<size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return raw[a] < raw[b]; });
        double prev = 0.0;
        for (size_t i : order) {
            CHECK(adj[i] >= raw[i]);
            CHECK(adj[i] <= 1.0);
            CHECK(adj[i] >= prev);
            prev = adj[i];
        }
    }
}

TEST_CASE("chi-square upper tail") {
    CHECK(chi_square_upper_tail(0.0, 1) == 1.0);
    CHECK(chi_square_upper_tail(0.0, 7) == 1.0);
    // classic critical value
    CHECK(chi_square_upper_tail(3.841, 1) == Catch::Approx(0.05).margin(5e-4));
    // df=1 closed form via erfc
    for (double x : {0.5, 1.0, 2.0, 3.841, 10.0})
        CHECK(chi_square_upper_tail(x, 1) ==
              Catch::Approx(std::erfc(std::sqrt(x / 2.0))).margin(1e-12));
    // df=2 closed form
    for (double x : {0.1, 1.0, 3.6, 7.2, 20.0})
        CHECK(chi_square_upper_tail(x, 2) == Catch::Approx(std::exp(-x / 2.0)).margin(1e-12));
    // df=4 closed form
    for (double x : {0.5, 2.0, 7.2})
        CHECK(chi_square_upper_tail(x, 4) ==
              Catch::Approx((1.0 + x / 2.0) * std::exp(-x / 2.0)).margin(1e-12));
    // numerical integration oracle for a non-closed-form df
    for (auto [x, df] : std::vector<std::pair<double, int>>{{7.2, 3}, {2.5, 5}, {12.0, 7}})
        CHECK(chi_square_upper_tail(x, df) ==
              Catch::Approx(oracle::chi_square_upper_tail_integral(x, df)).margin(1e-10));
    CHECK_THROWS_AS(chi_square_upper_tail(-1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(chi_square_upper_tail(1.0, 0), std::invalid_argument);
}

TEST_CASE("descriptive helpers") {
    CHECK(median({1, 2, 3}) == 2.0);
    CHECK(median({1, 2, 3, 4}) == 2.5);
    CHECK(iqr({1, 2, 3, 4, 5}) == Catch::Approx(2.0));
    CHECK(mean({1, 2, 3}) == Catch::Approx(2.0));
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}
