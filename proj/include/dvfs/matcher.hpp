#pragma once

// Clustered knowledge base of profiled applications, used to find the
// known application most correlated with an unseen job's default-clock
// profile.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dvfs/kernels.hpp"
#include "dvfs/matrix.hpp"
#include "dvfs/predictors.hpp"
#include "dvfs/trace.hpp"
#include "json.hpp"

namespace dvfs {

struct ClusterModel {
    Matrix centroids;                     // k x dim
    std::vector<std::size_t> assignment;  // per point
    double inertia = 0.0;                 // sum of squared distances to assigned centroid
    std::vector<double> inertia_trace;    // inertia after every assignment step
    int iterations = 0;

    std::size_t k() const { return centroids.rows(); }
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` is reached. Empty clusters keep their centroid.
ClusterModel kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 100,
                    kernels::Exec exec = kernels::Exec::Parallel);

/// Inertia of `assignment` with each centroid at its cluster mean.
double partition_inertia(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k);

/// max(1, round(sqrt(n_apps / 2))).
int default_cluster_count(std::size_t n_apps);

struct KnowledgeBase {
    InputSpec input;                   // schema + normalization shared with the models
    std::vector<std::string> app_ids;  // lexicographic
    Matrix profiles;                   // normalized default-clock profile per app (row-aligned with app_ids)
    ClusterModel clusters;

    std::string fingerprint() const { return input.fingerprint(); }
    std::span<const double> profile(std::string_view app_id) const;
};

/// `d` is normalized first if it carries no stats.
KnowledgeBase build_knowledge_base(const Dataset& d, int k, std::uint64_t seed);

struct MatchResult {
    std::size_t cluster = 0;
    std::string app_id;
    double distance = 0.0;  // Euclidean, in normalized space, to the matched app

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Normalizes the raw profile with the knowledge base's stats, then picks the
/// nearest centroid (ties: lower index) and its nearest member (ties:
/// lexicographically smaller app id).
MatchResult match_application(std::span<const double> raw_profile, const KnowledgeBase& kb);
MatchResult match_normalized(std::span<const double> normalized_profile, const KnowledgeBase& kb);

nlohmann::json knowledge_base_to_json(const KnowledgeBase& kb);
KnowledgeBase knowledge_base_from_json(const nlohmann::json& j);
void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);

}  // namespace dvfs
