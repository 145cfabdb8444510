#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "termshift/frequency.hpp"

namespace termshift {

enum class ZeroChangeDef { CONSUMER_AND_CLINICAL, CONSUMER_ONLY };

/// Per-clinician editing features over that clinician's note-sections.
struct EditingProfile {
    std::string clinician_id;
    int64_t section_volume = 0;
    double mean_consumer_change = 0.0;
    double mean_clinical_change = 0.0;
    double zero_change_rate = 0.0;            // selected definition (feeds clustering)
    double zero_change_rate_consumer = 0.0;   // consumer-only definition, always reported
    std::optional<int> cluster_label;
};

/// Only clinicians with section_volume strictly above the eligibility
/// threshold are returned, sorted by clinician_id.
inline std::vector<EditingProfile> build_profiles(const std::vector<SectionDelta>& deltas,
                                                  int64_t eligibility_threshold = 10,
                                                  ZeroChangeDef zero_def = ZeroChangeDef::CONSUMER_AND_CLINICAL) {
    struct Acc {
        int64_t n = 0;
        int64_t consumer_change = 0;
        int64_t clinical_change = 0;
        int64_t zero_both = 0;
        int64_t zero_consumer = 0;
    };
    std::map<std::string, Acc> by_clinician;
    for (const auto& d : deltas) {
        auto& acc = by_clinician[d.clinician_id];
        ++acc.n;
        acc.consumer_change += d.consumer.change;
        acc.clinical_change += d.clinical.change;
        if (d.consumer.change == 0) {
            ++acc.zero_consumer;
            if (d.clinical.change == 0) ++acc.zero_both;
        }
    }
    std::vector<EditingProfile> out;
    for (const auto& [id, acc] : by_clinician) {
        if (acc.n <= eligibility_threshold) continue;
        EditingProfile p;
        p.clinician_id = id;
        p.section_volume = acc.n;
        double n = static_cast<double>(acc.n);
        p.mean_consumer_change = static_cast<double>(acc.consumer_change) / n;
        p.mean_clinical_change = static_cast<double>(acc.clinical_change) / n;
        p.zero_change_rate_consumer = static_cast<double>(acc.zero_consumer) / n;
        double zero_both_rate = static_cast<double>(acc.zero_both) / n;
        p.zero_change_rate =
            zero_def == ZeroChangeDef::CONSUMER_AND_CLINICAL ? zero_both_rate : p.zero_change_rate_consumer;
        out.push_back(std::move(p));
    }
    return out;
}

struct KMeansResult {
    std::vector<int> labels;
    std::vector<std::vector<double>> centroids;  // in standardized feature space
    double sse = 0.0;
    int best_restart = 0;
    bool degenerate = false;  // a cluster stayed empty (identical points)
    std::vector<double> sse_history;  // per-iteration SSE of the best restart
    std::vector<std::string> warnings;
};

namespace detail {

inline double unit_double(std::mt19937_64& rng) {
    // 53-bit mantissa, identical across platforms
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct KMeansRun {
    std::vector<int> labels;
    std::vector<std::vector<double>> centroids;
    double sse = 0.0;
    bool degenerate = false;
    std::vector<double> sse_history;
};

inline KMeansRun lloyd_run(const std::vector<std::vector<double>>& pts, int k, uint64_t seed) {
    std::mt19937_64 rng(seed);
    size_t n = pts.size();
    size_t dims = pts[0].size();

    // k-means++ seeding
    std::vector<std::vector<double>> centroids;
    size_t first = std::min(n - 1, static_cast<size_t>(unit_double(rng) * static_cast<double>(n)));
    centroids.push_back(pts[first]);
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<size_t>(k)) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = sq_dist(pts[i], centroids[0]);
            for (size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, sq_dist(pts[i], centroids[c]));
            d2[i] = best;
            total += best;
        }
        size_t pick;
        if (total <= 0.0) {
            pick = std::min(n - 1, static_cast<size_t>(unit_double(rng) * static_cast<double>(n)));
        } else {
            double target = unit_double(rng) * total;
            double cum = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(pts[pick]);
    }

    KMeansRun run;
    run.labels.assign(n, 0);
    double prev_sse = -1.0;
    for (int iter = 0; iter < 100; ++iter) {
        // assignment (ties -> lowest centroid index)
        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) {
            int best_c = 0;
            double best_d = sq_dist(pts[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = sq_dist(pts[i], centroids[static_cast<size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            run.labels[i] = best_c;
            sse += best_d;
        }
        if (prev_sse >= 0.0 && sse > prev_sse + 1e-9 * (1.0 + prev_sse))
            throw std::logic_error("kmeans: SSE increased between iterations");
        run.sse_history.push_back(sse);
        run.sse = sse;
        prev_sse = sse;

        // update
        std::vector<std::vector<double>> next(static_cast<size_t>(k), std::vector<double>(dims, 0.0));
        std::vector<int64_t> sizes(static_cast<size_t>(k), 0);
        for (size_t i = 0; i < n; ++i) {
            auto& c = next[static_cast<size_t>(run.labels[i])];
            for (size_t d = 0; d < dims; ++d) c[d] += pts[i][d];
            ++sizes[static_cast<size_t>(run.labels[i])];
        }
        std::vector<size_t> reseeded;
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<size_t>(c)] > 0) {
                for (size_t d = 0; d < dims; ++d)
                    next[static_cast<size_t>(c)][d] /= static_cast<double>(sizes[static_cast<size_t>(c)]);
            } else {
                // reseed an empty cluster to the point farthest from its
                // current centroid; identical points cannot be split
                size_t far_i = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    if (std::find(reseeded.begin(), reseeded.end(), i) != reseeded.end()) continue;
                    double d = sq_dist(pts[i], centroids[static_cast<size_t>(run.labels[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                if (far_d <= 0.0) {
                    run.degenerate = true;
                    next[static_cast<size_t>(c)] = centroids[static_cast<size_t>(c)];
                } else {
                    next[static_cast<size_t>(c)] = pts[far_i];
                    reseeded.push_back(far_i);
                }
            }
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c)
            shift = std::max(shift, std::sqrt(sq_dist(centroids[static_cast<size_t>(c)],
                                                      next[static_cast<size_t>(c)])));
        centroids = std::move(next);
        if (shift < 1e-6) break;
    }
    run.centroids = std::move(centroids);
    return run;
}

}  // namespace detail

/// Deterministic k-means: z-score standardization per dimension,
/// k-means++ seeding, best of `restarts` runs by SSE (ties -> lowest
/// restart index). Lloyd iterations stop when the largest centroid shift
/// falls below 1e-6 or after 100 iterations.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, uint64_t seed,
                           int restarts = 10) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (points.size() < static_cast<size_t>(k))
        throw std::invalid_argument("kmeans: need at least k points");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
    size_t n = points.size();
    size_t dims = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dims) throw std::invalid_argument("kmeans: inconsistent dimensions");
        for (double v : p)
            if (!std::isfinite(v)) throw std::invalid_argument("kmeans: features must be finite");
    }

    KMeansResult result;

    // z-score standardization; zero-variance dimensions collapse to 0
    std::vector<double> mu(dims, 0.0), sigma(dims, 0.0);
    for (const auto& p : points)
        for (size_t d = 0; d < dims; ++d) mu[d] += p[d];
    for (size_t d = 0; d < dims; ++d) mu[d] /= static_cast<double>(n);
    for (const auto& p : points)
        for (size_t d = 0; d < dims; ++d) sigma[d] += (p[d] - mu[d]) * (p[d] - mu[d]);
    for (size_t d = 0; d < dims; ++d) {
        sigma[d] = std::sqrt(sigma[d] / static_cast<double>(n));
        if (sigma[d] == 0.0)
            result.warnings.push_back("kmeans: zero-variance feature " + std::to_string(d) +
                                      " standardized to 0");
    }
    std::vector<std::vector<double>> pts(n, std::vector<double>(dims, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t d = 0; d < dims; ++d)
            pts[i][d] = sigma[d] > 0.0 ? (points[i][d] - mu[d]) / sigma[d] : 0.0;

    std::optional<detail::KMeansRun> best;
    int best_r = 0;
    for (int r = 0; r < restarts; ++r) {
        uint64_t run_seed = seed + 0x9E3779B97F4A7C15ull * static_cast<uint64_t>(r + 1);
        auto run = detail::lloyd_run(pts, k, run_seed);
        if (!best || run.sse < best->sse) {
            best = std::move(run);
            best_r = r;
        }
    }
    result.labels = std::move(best->labels);
    result.centroids = std::move(best->centroids);
    result.sse = best->sse;
    result.sse_history = std::move(best->sse_history);
    result.degenerate = best->degenerate;
    result.best_restart = best_r;
    return result;
}

/// Runs k-means over the profile features (mean consumer change,
/// zero-change rate) and writes labels back into the profiles.
inline KMeansResult cluster_profiles(std::vector<EditingProfile>& profiles, int k, uint64_t seed,
                                     int restarts = 10) {
    if (profiles.empty()) throw std::invalid_argument("cluster_profiles: no eligible profiles");
    std::vector<std::vector<double>> points;
    points.reserve(profiles.size());
    for (const auto& p : profiles)
        points.push_back({p.mean_consumer_change, p.zero_change_rate});
    auto result = kmeans(points, k, seed, restarts);
    for (size_t i = 0; i < profiles.size(); ++i) profiles[i].cluster_label = result.labels[i];
    return result;
}

/// One row of the cluster profile table.
struct ClusterRow {
    int cluster = 0;
    int64_t n = 0;
    double pct = 0.0;
    double mean_consumer_change = 0.0;
    double mean_clinical_change = 0.0;
    double mean_zero_change_rate = 0.0;
};

/// Clusters ordered by |mean consumer change| descending. Empty clusters
/// (possible only in the degenerate identical-points case) are omitted.
inline std::vector<ClusterRow> profile_report(const std::vector<EditingProfile>& profiles, int k) {
    if (profiles.empty()) throw std::invalid_argument("profile_report: no profiles");
    std::vector<ClusterRow> rows;
    for (int c = 0; c < k; ++c) {
        ClusterRow row;
        row.cluster = c;
        for (const auto& p : profiles) {
            if (!p.cluster_label || *p.cluster_label != c) continue;
            ++row.n;
            row.mean_consumer_change += p.mean_consumer_change;
            row.mean_clinical_change += p.mean_clinical_change;
            row.mean_zero_change_rate += p.zero_change_rate;
        }
        if (row.n == 0) continue;
        double n = static_cast<double>(row.n);
        row.mean_consumer_change /= n;
        row.mean_clinical_change /= n;
        row.mean_zero_change_rate /= n;
        row.pct = 100.0 * n / static_cast<double>(profiles.size());
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [](const ClusterRow& a, const ClusterRow& b) {
        double ma = std::fabs(a.mean_consumer_change), mb = std::fabs(b.mean_consumer_change);
        if (ma != mb) return ma > mb;
        return a.cluster < b.cluster;
    });
    return rows;
}

}  // namespace termshift
