#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dvfs/error.hpp"
#include "dvfs/matcher.hpp"

using namespace dvfs;

namespace {

Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Matrix m(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) m(i, j) = u(rng);
    return m;
}

double sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Exhaustive nearest-centroid-then-nearest-member scan.
MatchResult scan(std::span<const double> p, const KnowledgeBase& kb) {
    std::size_t cluster = 0;
    for (std::size_t c = 1; c < kb.clusters.k(); ++c)
        if (sq(p, kb.clusters.centroids.row(c)) < sq(p, kb.clusters.centroids.row(cluster))) cluster = c;
    std::string best_id;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kb.app_ids.size(); ++i) {
        if (kb.clusters.assignment[i] != cluster) continue;
        const double d = sq(p, kb.profiles.row(i));
        if (d < best || (d == best && kb.app_ids[i] < best_id)) {
            best = d;
            best_id = kb.app_ids[i];
        }
    }
    return {cluster, best_id, std::sqrt(best)};
}

Dataset scaled(Dataset d, double c) {
    for (auto& r : d.records)
        for (auto& v : r.features) v *= c;
    return d;
}

}  // namespace

TEST_CASE("k=1 centroid is the mean") {
    const Matrix P = Matrix::from_rows({{0, 0}, {2, 0}, {4, 0}});
    const auto m = kmeans(P, 1, 1);
    CHECK(m.centroids(0, 0) == doctest::Approx(2.0));
    CHECK(m.centroids(0, 1) == doctest::Approx(0.0));
    CHECK(m.inertia == doctest::Approx(8.0));
}

TEST_CASE("one cluster per distinct point gives zero inertia") {
    const Matrix P = Matrix::from_rows({{0, 0}, {1, 5}, {3, -2}, {7, 7}, {-4, 1}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK(kmeans(P, 5, seed).inertia == 0.0);
}

TEST_CASE("kmeans preconditions") {
    const Matrix P = Matrix::from_rows({{0, 0}, {1, 1}});
    CHECK_THROWS_AS(kmeans(Matrix{}, 1, 0), ValidationError);
    CHECK_THROWS_AS(kmeans(P, 0, 0), ValidationError);
    CHECK_THROWS_AS(kmeans(P, 3, 0), ValidationError);
}

TEST_CASE("kmeans beats 50 random-assignment restarts") {
    const Matrix P = random_points(20, 2, 5);
    const auto m = kmeans(P, 3, 9);
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<std::size_t> pick(0, 2);
    double best_random = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 50; ++restart) {
        std::vector<std::size_t> a(P.rows());
        for (auto& v : a) v = pick(rng);
        best_random = std::min(best_random, partition_inertia(P, a, 3));
    }
    CHECK(m.inertia <= best_random);
    CHECK(m.inertia == doctest::Approx(partition_inertia(P, m.assignment, 3)));
}

TEST_CASE("Lloyd inertia never increases") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = kmeans(random_points(120, 4, seed), 6, seed);
        REQUIRE_FALSE(m.inertia_trace.empty());
        for (std::size_t i = 1; i < m.inertia_trace.size(); ++i)
            CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1] * (1.0 + 1e-12));
    }
}

TEST_CASE("serial and parallel kmeans agree") {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    const Matrix P = random_points(300, 5, 8);
    const auto a = kmeans(P, 7, 2, 100, kernels::Exec::Serial);
    const auto b = kmeans(P, 7, 2, 100, kernels::Exec::Parallel);
    omp_set_num_threads(saved);
    CHECK(a.assignment == b.assignment);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia_trace == b.inertia_trace);
}

TEST_CASE("default cluster count") {
    CHECK(default_cluster_count(1) == 1);
    CHECK(default_cluster_count(12) == 2);
    CHECK(default_cluster_count(32) == 4);
}

TEST_CASE("knowledge base partitions every app") {
    const Dataset d = generate_synthetic(12, reference_device(), OracleRanges{}, 3).dataset;
    const KnowledgeBase kb = build_knowledge_base(d, 4, 1);
    CHECK(kb.app_ids.size() == 12);
    CHECK(kb.profiles.rows() == 12);
    CHECK(kb.clusters.k() == 4);
    std::vector<int> sizes(4, 0);
    for (auto c : kb.clusters.assignment) {
        REQUIRE(c < 4);
        ++sizes[c];
    }
    CHECK(sizes[0] + sizes[1] + sizes[2] + sizes[3] == 12);
    CHECK(kb.clusters.centroids.cols() == d.schema.size());

    const KnowledgeBase one = build_knowledge_base(d, 1, 1);
    for (auto c : one.clusters.assignment) CHECK(c == 0);

    const KnowledgeBase again = build_knowledge_base(d, 4, 1);
    CHECK(again.clusters.assignment == kb.clusters.assignment);
    CHECK(again.clusters.centroids == kb.clusters.centroids);
}

TEST_CASE("missing default-clock record names the app") {
    Dataset d = generate_synthetic(4, reference_device(), OracleRanges{}, 3).dataset;
    std::erase_if(d.records, [&](const TrainingRecord& r) {
        return r.app_id == "app02" && r.config == d.device.default_config;
    });
    try {
        build_knowledge_base(d, 2, 1);
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("app02") != std::string::npos);
    }
}

TEST_CASE("each known app matches itself") {
    const Dataset d = generate_synthetic(12, reference_device(), OracleRanges{}, 4).dataset;
    const KnowledgeBase kb = build_knowledge_base(d, 3, 2);
    for (const auto& app : kb.app_ids) {
        const auto* rec = d.find(app, d.device.default_config);
        const MatchResult m = match_application(rec->features, kb);
        CHECK(m.app_id == app);
        CHECK(m.distance == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
        const auto idx = static_cast<std::size_t>(std::find(kb.app_ids.begin(), kb.app_ids.end(), app) - kb.app_ids.begin());
        CHECK(kb.clusters.assignment[idx] == m.cluster);
        CHECK(match_normalized(kb.profile(app), kb) == MatchResult{m.cluster, app, 0.0});
    }
    const std::vector<double> short_profile{1.0, 2.0};
    CHECK_THROWS_AS(match_application(short_profile, kb), ValidationError);
}

TEST_CASE("midpoint between centroids goes to the lower cluster") {
    KnowledgeBase kb;
    kb.input.feature_names = {"a", "b"};
    kb.input.norm = {{0.0, 0.0}, {1.0, 1.0}};
    kb.app_ids = {"x", "y"};
    kb.profiles = Matrix::from_rows({{-1, 0}, {1, 0}});
    kb.clusters.centroids = Matrix::from_rows({{-1, 0}, {1, 0}});
    kb.clusters.assignment = {0, 1};
    const std::vector<double> mid{0, 3};
    const MatchResult m = match_application(mid, kb);
    CHECK(m.cluster == 0);
    CHECK(m.app_id == "x");

    // equidistant members inside one cluster: smaller id wins
    kb.clusters.centroids = Matrix::from_rows({{0, 0}});
    kb.clusters.assignment = {0, 0};
    CHECK(match_application(mid, kb).app_id == "x");
}

TEST_CASE("matching equals an exhaustive scan on random probes") {
    const Dataset d = generate_synthetic(24, reference_device(), OracleRanges{}, 6).dataset;
    const KnowledgeBase kb = build_knowledge_base(d, 4, 3);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> p(kb.profiles.cols());
        for (auto& v : p) v = g(rng);
        const MatchResult got = match_normalized(p, kb);
        const MatchResult want = scan(p, kb);
        CHECK(got.cluster == want.cluster);
        CHECK(got.app_id == want.app_id);
        CHECK(got.distance == doctest::Approx(want.distance));
        CHECK(match_normalized(p, kb) == got);
    }
}

TEST_CASE("uniform feature scaling does not change the match") {
    const Dataset d = generate_synthetic(12, reference_device(), OracleRanges{}, 8).dataset;
    const KnowledgeBase kb = build_knowledge_base(d, 3, 5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jitter(0.8, 1.2);
    for (double c : {0.001, 3.0, 1000.0}) {
        const KnowledgeBase scaled_kb = build_knowledge_base(scaled(d, c), 3, 5);
        for (const auto& app : kb.app_ids) {
            std::vector<double> probe = d.find(app, d.device.default_config)->features;
            for (auto& v : probe) v *= jitter(rng);
            std::vector<double> scaled_probe = probe;
            for (auto& v : scaled_probe) v *= c;
            CHECK(match_application(scaled_probe, scaled_kb).app_id == match_application(probe, kb).app_id);
        }
    }
}

TEST_CASE("knowledge base round-trips through JSON") {
    const Dataset d = generate_synthetic(8, reference_device(), OracleRanges{}, 1).dataset;
    const KnowledgeBase kb = build_knowledge_base(d, 2, 1);
    const KnowledgeBase back = knowledge_base_from_json(knowledge_base_to_json(kb));
    CHECK(back.app_ids == kb.app_ids);
    CHECK(back.profiles == kb.profiles);
    CHECK(back.clusters.centroids == kb.clusters.centroids);
    CHECK(back.clusters.assignment == kb.clusters.assignment);
    CHECK(back.fingerprint() == kb.fingerprint());
}
