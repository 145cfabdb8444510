#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace termshift {

enum class StatMethod { WILCOXON_SIGNED_RANK, KRUSKAL_WALLIS, MANN_WHITNEY_U };

inline const char* to_string(StatMethod m) {
    switch (m) {
        case StatMethod::WILCOXON_SIGNED_RANK: return "wilcoxon_signed_rank";
        case StatMethod::KRUSKAL_WALLIS: return "kruskal_wallis";
        case StatMethod::MANN_WHITNEY_U: return "mann_whitney_u";
    }
    return "?";
}

struct StatResult {
    StatMethod method = StatMethod::WILCOXON_SIGNED_RANK;
    double statistic = 0.0;
    double p_value = 1.0;
    std::string sample_desc;    // e.g. "n=25 (3 zero diffs discarded)"
    bool exact = false;         // exact enumeration vs normal/chi-square approximation
    bool degenerate = false;    // no information in the data (all-zero diffs etc.)
};

// ---------------------------------------------------------------------------
// numeric plumbing

/// Upper-tail probability of the standard normal distribution.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace detail {

// Regularized incomplete gamma, series expansion for P(a, x), x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction (modified Lentz) for Q(a, x), x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(df/2, x/2): the chi-square
/// upper-tail probability. Absolute error below 1e-10 over the tested
/// domain.
inline double chi_square_upper_tail(double x, int df) {
    if (x < 0.0) throw std::invalid_argument("chi_square_upper_tail: x must be >= 0");
    if (df < 1) throw std::invalid_argument("chi_square_upper_tail: df must be >= 1");
    if (x == 0.0) return 1.0;
    double a = df / 2.0;
    double xx = x / 2.0;
    if (xx < a + 1.0) return 1.0 - detail::gamma_p_series(a, xx);
    return detail::gamma_q_cf(a, xx);
}

// ---------------------------------------------------------------------------
// ranking helpers

namespace detail {

/// Midranks (average ranks for ties), 1-based. Also returns the tie-group
/// sizes for variance corrections.
inline std::vector<double> midranks(const std::vector<double>& values,
                                    std::vector<int64_t>* tie_sizes = nullptr) {
    size_t n = values.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
        if (tie_sizes && j > i) tie_sizes->push_back(static_cast<int64_t>(j - i + 1));
        i = j + 1;
    }
    return ranks;
}

inline double tie_sum_cubes(const std::vector<int64_t>& tie_sizes) {
    double s = 0.0;
    for (int64_t t : tie_sizes) {
        double td = static_cast<double>(t);
        s += td * td * td - td;
    }
    return s;
}

/// Counts, for ranks 1..n, how many sign assignments give each rank-sum.
/// Equivalent to enumerating all 2^n assignments. Exact in doubles for
/// n <= 25 (counts < 2^25).
inline std::vector<double> signed_rank_sum_counts(int n) {
    int smax = n * (n + 1) / 2;
    std::vector<double> ways(static_cast<size_t>(smax) + 1, 0.0);
    ways[0] = 1.0;
    for (int r = 1; r <= n; ++r)
        for (int s = smax; s >= r; --s) ways[static_cast<size_t>(s)] += ways[static_cast<size_t>(s - r)];
    return ways;
}

/// ways[k][s]: number of k-subsets of ranks 1..n with rank-sum s.
inline std::vector<std::vector<double>> subset_rank_sum_counts(int n, int k) {
    int smax = n * (n + 1) / 2;
    std::vector<std::vector<double>> ways(static_cast<size_t>(k) + 1,
                                          std::vector<double>(static_cast<size_t>(smax) + 1, 0.0));
    ways[0][0] = 1.0;
    for (int r = 1; r <= n; ++r)
        for (int kk = std::min(k, r); kk >= 1; --kk)
            for (int s = smax; s >= r; --s)
                ways[static_cast<size_t>(kk)][static_cast<size_t>(s)] +=
                    ways[static_cast<size_t>(kk - 1)][static_cast<size_t>(s - r)];
    return ways;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// tests

enum class ZeroDiffPolicy { DISCARD, PRATT };

struct WilcoxonOptions {
    ZeroDiffPolicy zero_policy = ZeroDiffPolicy::DISCARD;
    int exact_cutoff = 25;  // exact enumeration when nonzero n <= cutoff and no ties
};

/// Two-sided Wilcoxon signed-rank test on paired (draft, final) values.
/// Differences are final - draft; zero differences are discarded under the
/// classical policy. Statistic W = min(W+, W-). Exact p by sign
/// enumeration when the nonzero count is within the cutoff and |d| has no
/// ties; otherwise normal approximation with continuity and tie correction.
inline StatResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs,
                                       const WilcoxonOptions& opt = {}) {
    if (pairs.empty()) throw std::invalid_argument("wilcoxon_signed_rank: need at least one pair");
    StatResult res;
    res.method = StatMethod::WILCOXON_SIGNED_RANK;

    std::vector<double> diffs;
    int64_t n_zero = 0;
    for (const auto& [draft, final_value] : pairs) {
        double d = final_value - draft;
        if (d == 0.0) ++n_zero;
        diffs.push_back(d);
    }
    if (opt.zero_policy == ZeroDiffPolicy::DISCARD) {
        diffs.erase(std::remove(diffs.begin(), diffs.end(), 0.0), diffs.end());
    }
    if (diffs.empty() || std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; })) {
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.degenerate = true;
        res.sample_desc = "n=0 (all " + std::to_string(n_zero) + " diffs zero)";
        return res;
    }

    size_t n = diffs.size();
    std::vector<double> abs_d(n);
    for (size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(diffs[i]);
    std::vector<int64_t> tie_sizes;
    std::vector<double> ranks = detail::midranks(abs_d, &tie_sizes);

    double w_plus = 0.0, w_minus = 0.0, w_zero = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
        else if (diffs[i] < 0) w_minus += ranks[i];
        else w_zero += ranks[i];  // only under PRATT
    }
    double w = std::min(w_plus, w_minus);
    res.statistic = w;
    res.sample_desc = "n=" + std::to_string(n) + " (" + std::to_string(n_zero) + " zero diffs" +
                      (opt.zero_policy == ZeroDiffPolicy::DISCARD ? " discarded)" : " ranked)");

    bool no_ties = tie_sizes.empty();
    bool exact_ok = no_ties && w_zero == 0.0 && static_cast<int>(n) <= opt.exact_cutoff;
    if (exact_ok) {
        auto ways = detail::signed_rank_sum_counts(static_cast<int>(n));
        double count = 0.0;
        int wm = static_cast<int>(w);  // integer ranks when untied
        for (int s = 0; s <= wm; ++s) count += ways[static_cast<size_t>(s)];
        double p = 2.0 * count / std::pow(2.0, static_cast<double>(n));
        res.p_value = std::min(1.0, p);
        res.exact = true;
        return res;
    }

    double nn = static_cast<double>(n);
    double tie_cubes = detail::tie_sum_cubes(tie_sizes);
    double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_cubes / 48.0;
    if (opt.zero_policy == ZeroDiffPolicy::PRATT && n_zero > 0) {
        // zeros occupy the lowest ranks and drop out of both W+ and W-;
        // their tie group does not enter the tie correction
        double z0 = static_cast<double>(n_zero);
        if (n_zero > 1) tie_cubes -= z0 * z0 * z0 - z0;
        mean = (nn * (nn + 1.0) - z0 * (z0 + 1.0)) / 4.0;
        var = (nn * (nn + 1.0) * (2.0 * nn + 1.0) - z0 * (z0 + 1.0) * (2.0 * z0 + 1.0)) / 24.0 -
              tie_cubes / 48.0;
    }
    if (var <= 0.0) {
        res.p_value = 1.0;
        res.degenerate = true;
        return res;
    }
    double delta = std::max(0.0, std::fabs(w - mean) - 0.5);  // continuity correction
    double z = delta / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_sf(z));
    return res;
}

inline StatResult wilcoxon_signed_rank_diffs(const std::vector<double>& diffs,
                                             const WilcoxonOptions& opt = {}) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(diffs.size());
    for (double d : diffs) pairs.emplace_back(0.0, d);
    return wilcoxon_signed_rank(pairs, opt);
}

struct MannWhitneyOptions {
    int exact_cutoff_total = 12;  // exact when n_a + n_b <= cutoff and no ties
};

/// Two-sided Mann-Whitney U from rank sums with midranks. Statistic
/// U = min(U_a, U_b). Exact p enumerates subset assignments when the
/// pooled size is within the cutoff and untied; otherwise normal
/// approximation with continuity and tie correction.
inline StatResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b,
                                 const MannWhitneyOptions& opt = {}) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: both samples must be nonempty");
    StatResult res;
    res.method = StatMethod::MANN_WHITNEY_U;
    size_t na = a.size(), nb = b.size(), n = na + nb;

    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<int64_t> tie_sizes;
    std::vector<double> ranks = detail::midranks(pooled, &tie_sizes);

    double ra = 0.0;
    for (size_t i = 0; i < na; ++i) ra += ranks[i];
    double u_a = ra - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
    double u_b = static_cast<double>(na) * static_cast<double>(nb) - u_a;
    double u = std::min(u_a, u_b);
    res.statistic = u;
    res.sample_desc = "n_a=" + std::to_string(na) + ", n_b=" + std::to_string(nb);

    bool no_ties = tie_sizes.empty();
    if (no_ties && static_cast<int>(n) <= opt.exact_cutoff_total) {
        // count k-subsets of ranks 1..n by rank sum; U' = ranksum - k(k+1)/2
        auto ways = detail::subset_rank_sum_counts(static_cast<int>(n), static_cast<int>(na));
        double offset = static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
        double count = 0.0, total = 0.0;
        const auto& row = ways[na];
        for (size_t s = 0; s < row.size(); ++s) {
            total += row[s];
            if (static_cast<double>(s) - offset <= u + 1e-9) count += row[s];
        }
        res.p_value = std::min(1.0, 2.0 * count / total);
        res.exact = true;
        return res;
    }

    double nad = static_cast<double>(na), nbd = static_cast<double>(nb), nd = static_cast<double>(n);
    double mean = nad * nbd / 2.0;
    double var = nad * nbd / 12.0 * ((nd + 1.0) - detail::tie_sum_cubes(tie_sizes) / (nd * (nd - 1.0)));
    if (var <= 0.0) {
        res.p_value = 1.0;
        res.degenerate = true;
        return res;
    }
    double delta = std::max(0.0, std::fabs(u - mean) - 0.5);
    double z = delta / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_sf(z));
    return res;
}

/// Kruskal-Wallis H with tie correction; p from the chi-square upper tail
/// with df = #groups - 1. All-identical values give H = 0, p = 1.
inline StatResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need >= 2 groups");
    for (const auto& g : groups)
        if (g.empty()) throw std::invalid_argument("kruskal_wallis: groups must be nonempty");
    StatResult res;
    res.method = StatMethod::KRUSKAL_WALLIS;

    std::vector<double> pooled;
    for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
    size_t n = pooled.size();
    std::vector<int64_t> tie_sizes;
    std::vector<double> ranks = detail::midranks(pooled, &tie_sizes);

    double nd = static_cast<double>(n);
    double h = 0.0;
    size_t pos = 0;
    for (const auto& g : groups) {
        double rsum = 0.0;
        for (size_t i = 0; i < g.size(); ++i) rsum += ranks[pos + i];
        pos += g.size();
        h += rsum * rsum / static_cast<double>(g.size());
    }
    h = 12.0 / (nd * (nd + 1.0)) * h - 3.0 * (nd + 1.0);

    double correction = 1.0 - detail::tie_sum_cubes(tie_sizes) / (nd * nd * nd - nd);
    res.sample_desc = "groups=" + std::to_string(groups.size()) + ", n=" + std::to_string(n);
    if (correction <= 0.0) {
        // every value identical
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.degenerate = true;
        return res;
    }
    h /= correction;
    if (h < 0.0 && h > -1e-9) h = 0.0;  // rounding guard
    res.statistic = h;
    res.p_value = chi_square_upper_tail(h, static_cast<int>(groups.size()) - 1);
    return res;
}

/// Holm step-down adjustment; adjusted values are returned in input order.
inline std::vector<double> holm_correction(const std::vector<double>& p_values) {
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("holm_correction: p-values must be in [0,1]");
    size_t m = p_values.size();
    std::vector<size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 0.0;
    for (size_t i = 0; i < m; ++i) {
        double scaled = std::min(1.0, static_cast<double>(m - i) * p_values[idx[i]]);
        running = std::max(running, scaled);
        adjusted[idx[i]] = running;
    }
    return adjusted;
}

// ---------------------------------------------------------------------------
// descriptive helpers

/// Linear-interpolation quantile (the common "type 7" definition).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    double pos = q * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

inline double iqr(const std::vector<double>& values) {
    return quantile(values, 0.75) - quantile(values, 0.25);
}

inline double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace termshift
