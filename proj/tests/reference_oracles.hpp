// Independent reference implementations used as test oracles. These must
// stay structurally independent of the library paths they check: the
// tokenizer is a character-level state machine, the matcher is a naive
// slide-and-compare scan, and the exact tests are literal enumerations.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

namespace oracle {

// --- reference tokenizer ----------------------------------------------------

inline bool alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

struct Tok {
    std::string text;
    size_t start, end;
};

// Single pass over characters with explicit joiner lookahead: a '-' or '\''
// continues the current token only when the previous and next characters
// are both alphanumeric.
inline std::vector<Tok> reference_tokenize(const std::string& s) {
    std::vector<Tok> out;
    size_t n = s.size();
    size_t i = 0;
    while (i < n) {
        if (!alnum(s[i])) {
            ++i;
            continue;
        }
        size_t start = i;
        std::string text;
        while (i < n) {
            if (alnum(s[i])) {
                text.push_back(lower(s[i]));
                ++i;
            } else if ((s[i] == '-' || s[i] == '\'') && i > start && alnum(s[i - 1]) && i + 1 < n &&
                       alnum(s[i + 1])) {
                text.push_back(s[i]);
                ++i;
            } else {
                break;
            }
        }
        out.push_back(Tok{text, start, i});
    }
    return out;
}

// --- naive matcher -----------------------------------------------------------

// Counts per term by sliding over the token list and testing sequence
// equality, skipping past each match (leftmost non-overlapping).
// Token interning keeps the scan honest but fast.
struct NaiveMatcher {
    std::unordered_map<std::string, int> ids;
    std::vector<std::vector<int>> term_tokens;  // -1 marks a token absent from the map
    std::vector<std::string> term_text;

    explicit NaiveMatcher(const std::vector<std::string>& terms) {
        for (const auto& t : terms) {
            std::vector<int> seq;
            for (const auto& tok : reference_tokenize(t)) seq.push_back(intern(tok.text));
            term_tokens.push_back(std::move(seq));
            term_text.push_back(t);
        }
    }

    int intern(const std::string& tok) {
        auto [it, inserted] = ids.emplace(tok, static_cast<int>(ids.size()));
        return it->second;
    }

    std::vector<int> encode(const std::string& text) const {
        std::vector<int> out;
        for (const auto& tok : reference_tokenize(text)) {
            auto it = ids.find(tok.text);
            out.push_back(it == ids.end() ? -1 : it->second);
        }
        return out;
    }

    std::map<std::string, int64_t> count(const std::string& text) const {
        std::vector<int> toks = encode(text);
        std::map<std::string, int64_t> counts;
        for (size_t t = 0; t < term_tokens.size(); ++t) {
            const auto& seq = term_tokens[t];
            if (seq.empty()) continue;
            int64_t c = 0;
            size_t i = 0;
            while (i + seq.size() <= toks.size()) {
                bool match = true;
                for (size_t j = 0; j < seq.size(); ++j) {
                    if (toks[i + j] != seq[j] || seq[j] < 0) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    ++c;
                    i += seq.size();
                } else {
                    ++i;
                }
            }
            if (c > 0) counts[term_text[t]] += c;
        }
        return counts;
    }
};

// --- exact-test enumerations --------------------------------------------------

// Two-sided Wilcoxon signed-rank p by literally enumerating all 2^n sign
// assignments over integer ranks 1..n (requires untied |d|).
inline double wilcoxon_exact_bruteforce(const std::vector<double>& diffs) {
    size_t n = diffs.size();
    std::vector<double> abs_d(n);
    for (size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(diffs[i]);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<int> rank(n);
    for (size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<int>(r + 1);

    long long w_plus = 0, w_minus = 0;
    for (size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0) w_plus += rank[i];
        else w_minus += rank[i];
    }
    long long m = std::min(w_plus, w_minus);

    long long count = 0;
    for (uint64_t mask = 0; mask < (1ull << n); ++mask) {
        long long w = 0;
        for (size_t i = 0; i < n; ++i)
            if (mask & (1ull << i)) w += rank[i];
        if (w <= m) ++count;
    }
    double p = 2.0 * static_cast<double>(count) / static_cast<double>(1ull << n);
    return std::min(1.0, p);
}

// Two-sided Mann-Whitney p by enumerating all C(n, n_a) assignments of the
// pooled ranks to sample a (requires untied pooled values).
inline double mann_whitney_exact_bruteforce(const std::vector<double>& a,
                                            const std::vector<double>& b) {
    size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return pooled[x] < pooled[y]; });
    std::vector<int> rank(n);
    for (size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<int>(r + 1);

    long long ra = 0;
    for (size_t i = 0; i < na; ++i) ra += rank[i];
    double u_a = static_cast<double>(ra) - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
    double u_b = static_cast<double>(na) * static_cast<double>(nb) - u_a;
    double u = std::min(u_a, u_b);

    long long count = 0, total = 0;
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
    std::sort(pick.begin(), pick.end());  // lexicographically smallest arrangement
    do {
        long long rsum = 0;
        for (size_t i = 0; i < n; ++i)
            if (pick[i]) rsum += static_cast<int>(i + 1);  // ranks are 1..n in sorted order
        double u_arr = static_cast<double>(rsum) -
                       static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
        ++total;
        if (u_arr <= u + 1e-12) ++count;
    } while (std::next_permutation(pick.begin(), pick.end()));
    double p = 2.0 * static_cast<double>(count) / static_cast<double>(total);
    return std::min(1.0, p);
}

// Chi-square upper tail by Simpson integration of the density over
// [x, x + 120] (valid for df >= 2 where the density is bounded).
inline double chi_square_upper_tail_integral(double x, int df) {
    double a = df / 2.0;
    double log_norm = -a * std::log(2.0) - std::lgamma(a);
    auto density = [&](double t) {
        if (t <= 0.0) return 0.0;
        return std::exp(log_norm + (a - 1.0) * std::log(t) - t / 2.0);
    };
    double hi = x + 120.0;
    int steps = 400000;  // even
    double h = (hi - x) / steps;
    double sum = density(x) + density(hi);
    for (int i = 1; i < steps; ++i) sum += density(x + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace oracle
