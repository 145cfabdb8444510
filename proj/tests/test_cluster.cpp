#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>

#include "termshift/cluster.hpp"

using namespace termshift;

namespace {

SectionDelta delta_for(const std::string& clinician, int64_t consumer_change,
                       int64_t clinical_change) {
    SectionDelta d;
    d.note_id = "N";
    d.clinician_id = clinician;
    d.section = SectionLabel::HPI;
    d.consumer.change = consumer_change;
    d.clinical.change = clinical_change;
    return d;
}

std::vector<SectionDelta> sections_for(const std::string& clinician, int n, int64_t consumer_change,
                                       int64_t clinical_change) {
    std::vector<SectionDelta> out;
    for (int i = 0; i < n; ++i) out.push_back(delta_for(clinician, consumer_change, clinical_change));
    return out;
}

}  // namespace

TEST_CASE("build_profiles applies the strict eligibility threshold") {
    auto deltas = sections_for("eleven", 11, -2, -3);
    auto ten = sections_for("ten", 10, -2, -3);
    deltas.insert(deltas.end(), ten.begin(), ten.end());
    auto profiles = build_profiles(deltas, 10);
    REQUIRE(profiles.size() == 1);
    CHECK(profiles[0].clinician_id == "eleven");
    CHECK(profiles[0].section_volume == 11);
    CHECK(profiles[0].mean_consumer_change == Catch::Approx(-2.0));
}

TEST_CASE("unchanged drafts give zero means and unit zero-change rate") {
    auto profiles = build_profiles(sections_for("idle", 12, 0, 0), 10);
    REQUIRE(profiles.size() == 1);
    CHECK(profiles[0].mean_consumer_change == 0.0);
    CHECK(profiles[0].mean_clinical_change == 0.0);
    CHECK(profiles[0].zero_change_rate == 1.0);
}

TEST_CASE("zero-change definition selector") {
    std::vector<SectionDelta> deltas;
    for (int i = 0; i < 6; ++i) deltas.push_back(delta_for("c", 0, 0));   // zero under both
    for (int i = 0; i < 6; ++i) deltas.push_back(delta_for("c", 0, -1));  // zero under consumer-only
    auto both = build_profiles(deltas, 10, ZeroChangeDef::CONSUMER_AND_CLINICAL);
    auto consumer_only = build_profiles(deltas, 10, ZeroChangeDef::CONSUMER_ONLY);
    REQUIRE(both.size() == 1);
    CHECK(both[0].zero_change_rate == Catch::Approx(0.5));
    CHECK(consumer_only[0].zero_change_rate == Catch::Approx(1.0));
    // the consumer-only rate is always carried for reporting
    CHECK(both[0].zero_change_rate_consumer == Catch::Approx(1.0));
}

TEST_CASE("kmeans with k=1 puts the centroid at the standardized mean") {
    std::vector<std::vector<double>> pts{{1, 10}, {2, 20}, {3, 30}, {4, 40}};
    auto result = kmeans(pts, 1, 42, 3);
    REQUIRE(result.centroids.size() == 1);
    // standardized features have mean 0 and variance 1 per dimension
    CHECK(result.centroids[0][0] == Catch::Approx(0.0).margin(1e-9));
    CHECK(result.centroids[0][1] == Catch::Approx(0.0).margin(1e-9));
    CHECK(result.sse == Catch::Approx(static_cast<double>(pts.size()) * 2.0).margin(1e-6));
    CHECK(std::all_of(result.labels.begin(), result.labels.end(), [](int l) { return l == 0; }));
}

TEST_CASE("kmeans recovers well-separated planted clusters exactly") {
    std::mt19937_64 rng(7);
    std::vector<std::vector<double>> pts;
    std::vector<int> truth;
    const double centers[3][2] = {{0, 0}, {50, 0}, {0, 50}};  // >= 10 sigma apart (sigma = 1)
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 40; ++i) {
            double nx = static_cast<double>(rng() % 2000) / 1000.0 - 1.0;
            double ny = static_cast<double>(rng() % 2000) / 1000.0 - 1.0;
            pts.push_back({centers[c][0] + nx, centers[c][1] + ny});
            truth.push_back(c);
        }
    }
    auto result = kmeans(pts, 3, 99, 10);
    // exact recovery up to label permutation
    std::map<int, int> mapping;
    for (size_t i = 0; i < pts.size(); ++i) {
        auto [it, inserted] = mapping.emplace(truth[i], result.labels[i]);
        CHECK(it->second == result.labels[i]);
    }
    std::set<int> distinct(result.labels.begin(), result.labels.end());
    CHECK(distinct.size() == 3);
}

TEST_CASE("kmeans is deterministic for a fixed seed and restart count") {
    std::mt19937_64 rng(3);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 100; ++i)
        pts.push_back({static_cast<double>(rng() % 1000), static_cast<double>(rng() % 1000)});
    auto a = kmeans(pts, 3, 12345, 10);
    auto b = kmeans(pts, 3, 12345, 10);
    CHECK(a.labels == b.labels);
    CHECK(a.sse == b.sse);
    CHECK(a.best_restart == b.best_restart);
    auto c = kmeans(pts, 3, 54321, 10);
    (void)c;  // different seed must still satisfy invariants below
}

TEST_CASE("kmeans SSE history is non-increasing") {
    std::mt19937_64 rng(4);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 200; ++i)
        pts.push_back({static_cast<double>(rng() % 100), static_cast<double>(rng() % 100),
                       static_cast<double>(rng() % 100)});
    auto result = kmeans(pts, 4, 8, 5);
    REQUIRE(!result.sse_history.empty());
    for (size_t i = 1; i < result.sse_history.size(); ++i)
        CHECK(result.sse_history[i] <= result.sse_history[i - 1] + 1e-9);
}

TEST_CASE("labels are invariant under positive affine transforms of raw features") {
    std::mt19937_64 rng(5);
    std::vector<std::vector<double>> pts, scaled;
    for (int i = 0; i < 80; ++i) {
        double a = static_cast<double>(rng() % 1000) / 10.0;
        double b = static_cast<double>(rng() % 1000) / 10.0;
        pts.push_back({a, b});
        scaled.push_back({a * 3.5 + 100.0, b * 0.02 - 7.0});
    }
    auto r1 = kmeans(pts, 3, 77, 5);
    auto r2 = kmeans(scaled, 3, 77, 5);
    CHECK(r1.labels == r2.labels);
}

TEST_CASE("kmeans input validation") {
    CHECK_THROWS_AS(kmeans({{1.0}, {2.0}}, 3, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans({}, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans({{1.0}, {std::nan("")}}, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans({{1.0}, {2.0, 3.0}}, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("zero-variance features standardize to zero with a warning") {
    std::vector<std::vector<double>> pts{{1, 5}, {2, 5}, {3, 5}, {4, 5}};
    auto result = kmeans(pts, 2, 9, 3);
    CHECK(!result.warnings.empty());
    for (const auto& c : result.centroids) CHECK(c[1] == 0.0);
}

TEST_CASE("all-identical points leave one nonempty cluster, flagged degenerate") {
    std::vector<std::vector<double>> pts(8, std::vector<double>{3.0, 4.0});
    auto result = kmeans(pts, 3, 5, 2);
    CHECK(result.degenerate);
    std::set<int> distinct(result.labels.begin(), result.labels.end());
    CHECK(distinct.size() == 1);
    CHECK(result.sse == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("profile_report orders clusters by consumer-change magnitude") {
    std::vector<EditingProfile> profiles;
    auto add = [&](const std::string& id, double mean_cons, double zero_rate, int label) {
        EditingProfile p;
        p.clinician_id = id;
        p.section_volume = 20;
        p.mean_consumer_change = mean_cons;
        p.mean_clinical_change = mean_cons - 2;
        p.zero_change_rate = zero_rate;
        p.cluster_label = label;
        profiles.push_back(p);
    };
    for (int i = 0; i < 5; ++i) add("mod" + std::to_string(i), -16.0, 0.05, 0);
    for (int i = 0; i < 2; ++i) add("high" + std::to_string(i), -133.0, 0.02, 1);
    add("min", 0.0, 1.0, 2);
    auto rows = profile_report(profiles, 3);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].mean_consumer_change == Catch::Approx(-133.0));
    CHECK(rows[1].mean_consumer_change == Catch::Approx(-16.0));
    CHECK(rows[2].mean_consumer_change == Catch::Approx(0.0));
    CHECK(rows[0].n == 2);
    CHECK(rows[1].n == 5);
    CHECK(rows[2].n == 1);
    double pct_sum = rows[0].pct + rows[1].pct + rows[2].pct;
    CHECK(pct_sum == Catch::Approx(100.0).margin(0.01));
    CHECK(rows[2].mean_zero_change_rate == Catch::Approx(1.0));
    CHECK_THROWS_AS(profile_report({}, 3), std::invalid_argument);
}

TEST_CASE("cluster_profiles writes labels back into profiles") {
    std::vector<SectionDelta> deltas;
    auto add_clin = [&](const std::string& id, int n, int64_t change) {
        auto s = sections_for(id, n, change, change);
        deltas.insert(deltas.end(), s.begin(), s.end());
    };
    for (int i = 0; i < 6; ++i) add_clin("mod" + std::to_string(i), 15, -5 - (i % 2));
    for (int i = 0; i < 3; ++i) add_clin("high" + std::to_string(i), 15, -120 - i);
    for (int i = 0; i < 2; ++i) add_clin("min" + std::to_string(i), 15, 0);
    auto profiles = build_profiles(deltas, 10);
    REQUIRE(profiles.size() == 11);
    auto result = cluster_profiles(profiles, 3, 2024, 10);
    REQUIRE(result.labels.size() == profiles.size());
    std::map<std::string, int> group_label;  // same prefix -> same cluster
    for (const auto& p : profiles) {
        REQUIRE(p.cluster_label.has_value());
        std::string prefix = p.clinician_id.substr(0, 3);
        auto [it, inserted] = group_label.emplace(prefix, *p.cluster_label);
        CHECK(it->second == *p.cluster_label);
    }
    CHECK(group_label.size() == 3);
}
