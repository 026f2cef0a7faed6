#include "dvfs/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dvfs/error.hpp"
#include "dvfs/rng.hpp"

namespace dvfs {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        d += diff * diff;
    }
    return d;
}

void recompute_centroids(const Matrix& points, std::span<const std::size_t> assignment, Matrix& centroids) {
    const std::size_t k = centroids.rows(), dim = centroids.cols();
    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto row = points.row(i);
        auto sum = sums.row(assignment[i]);
        for (std::size_t j = 0; j < dim; ++j) sum[j] += row[j];
        ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < dim; ++j) centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    std::size_t chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t c = 0; c < k; ++c) {
        if (c > 0) {
            double total = 0.0;
            for (double v : d2) total += v;
            if (total > 0.0) {
                const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
                double acc = 0.0;
                chosen = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (d2[i] <= 0.0) continue;
                    acc += d2[i];
                    if (target < acc) {
                        chosen = i;
                        break;
                    }
                }
                if (chosen == n) {  // rounding at the upper end: last point with weight
                    for (std::size_t i = n; i-- > 0;)
                        if (d2[i] > 0.0) {
                            chosen = i;
                            break;
                        }
                }
            } else {
                // Every point coincides with a centroid already.
                chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
            }
        }
        auto dst = centroids.row(c);
        auto src = points.row(chosen);
        std::copy(src.begin(), src.end(), dst.begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), dst));
    }
    return centroids;
}

}  // namespace

ClusterModel kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter, kernels::Exec exec) {
    if (points.rows() == 0) throw ValidationError("kmeans needs at least one point");
    if (k < 1 || static_cast<std::size_t>(k) > points.rows())
        throw ValidationError("kmeans k=" + std::to_string(k) + " out of range [1, " + std::to_string(points.rows()) + "]");
    if (max_iter < 1) throw ValidationError("kmeans max_iter must be >= 1");
    for (double v : points.data())
        if (!std::isfinite(v)) throw ValidationError("kmeans points contain non-finite values");

    Rng rng(seed);
    ClusterModel model;
    model.centroids = seed_plus_plus(points, static_cast<std::size_t>(k), rng);
    model.assignment.assign(points.rows(), 0);
    std::vector<std::size_t> next(points.rows(), 0);

    model.inertia = kernels::assign_nearest(exec, points, model.centroids, model.assignment);
    model.inertia_trace.push_back(model.inertia);
    for (int it = 0; it < max_iter; ++it) {
        recompute_centroids(points, model.assignment, model.centroids);
        const double inertia = kernels::assign_nearest(exec, points, model.centroids, next);
        model.iterations = it + 1;
        model.inertia = inertia;
        model.inertia_trace.push_back(inertia);
        const bool stable = next == model.assignment;
        model.assignment.swap(next);
        if (stable) break;
    }
    return model;
}

double partition_inertia(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k) {
    Matrix centroids(k, points.cols());
    recompute_centroids(points, assignment, centroids);
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        inertia += squared_distance(points.row(i), centroids.row(assignment[i]));
    return inertia;
}

int default_cluster_count(std::size_t n_apps) {
    return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_apps) / 2.0))));
}

std::span<const double> KnowledgeBase::profile(std::string_view app_id) const {
    auto it = std::lower_bound(app_ids.begin(), app_ids.end(), app_id);
    if (it == app_ids.end() || *it != app_id) throw ValidationError("unknown app '" + std::string(app_id) + "'");
    return profiles.row(static_cast<std::size_t>(it - app_ids.begin()));
}

KnowledgeBase build_knowledge_base(const Dataset& d, int k, std::uint64_t seed) {
    const Dataset normalized = d.norm_stats ? d : normalize(d);
    KnowledgeBase kb;
    kb.input = input_spec_for(normalized);
    kb.app_ids = normalized.app_ids();
    for (const auto& app : kb.app_ids) {
        const auto* rec = normalized.find(app, normalized.device.default_config);
        if (!rec)
            throw ValidationError("app '" + app + "' has no default-clock record " +
                                  to_string(normalized.device.default_config));
        kb.profiles.append_row(rec->features);
    }
    kb.clusters = kmeans(kb.profiles, k, seed);
    return kb;
}

MatchResult match_normalized(std::span<const double> profile, const KnowledgeBase& kb) {
    if (profile.size() != kb.profiles.cols())
        throw ValidationError("profile has " + std::to_string(profile.size()) + " features, knowledge base expects " +
                              std::to_string(kb.profiles.cols()));
    MatchResult result;
    result.cluster = kernels::nearest_centroid(profile, kb.clusters.centroids);

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_app = kb.app_ids.size();
    for (std::size_t i = 0; i < kb.app_ids.size(); ++i) {
        if (kb.clusters.assignment[i] != result.cluster) continue;
        const double d = squared_distance(profile, kb.profiles.row(i));
        // app_ids are sorted, so strict < keeps the lexicographically smaller id on ties.
        if (d < best) {
            best = d;
            best_app = i;
        }
    }
    if (best_app == kb.app_ids.size()) {
        // The nearest centroid belongs to an emptied cluster; fall back to the
        // nearest non-empty one.
        double best_c = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < kb.app_ids.size(); ++i) {
            const std::size_t c = kb.clusters.assignment[i];
            const double dc = squared_distance(profile, kb.clusters.centroids.row(c));
            const double d = squared_distance(profile, kb.profiles.row(i));
            if (dc < best_c || (dc == best_c && (c < result.cluster || (c == result.cluster && d < best)))) {
                best_c = dc;
                result.cluster = c;
                best = d;
                best_app = i;
            }
        }
    }
    result.app_id = kb.app_ids[best_app];
    result.distance = std::sqrt(best);
    return result;
}

MatchResult match_application(std::span<const double> raw_profile, const KnowledgeBase& kb) {
    if (raw_profile.size() != kb.profiles.cols())
        throw ValidationError("profile has " + std::to_string(raw_profile.size()) + " features, knowledge base expects " +
                              std::to_string(kb.profiles.cols()));
    return match_normalized(kb.input.norm.apply(raw_profile), kb);
}

// --- persistence -------------------------------------------------------

nlohmann::json knowledge_base_to_json(const KnowledgeBase& kb) {
    nlohmann::json apps = nlohmann::json::array();
    for (std::size_t i = 0; i < kb.app_ids.size(); ++i) {
        auto row = kb.profiles.row(i);
        apps.push_back({{"app_id", kb.app_ids[i]},
                        {"cluster", kb.clusters.assignment[i]},
                        {"profile", std::vector<double>(row.begin(), row.end())}});
    }
    nlohmann::json centroids = nlohmann::json::array();
    for (std::size_t c = 0; c < kb.clusters.k(); ++c) {
        auto row = kb.clusters.centroids.row(c);
        centroids.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"format", "dvfs-knowledge-base"},
            {"version", 1},
            {"fingerprint", kb.fingerprint()},
            {"input", {{"feature_names", kb.input.feature_names}, {"mean", kb.input.norm.mean}, {"stddev", kb.input.norm.stddev}}},
            {"clusters",
             {{"k", kb.clusters.k()},
              {"centroids", centroids},
              {"inertia", kb.clusters.inertia},
              {"inertia_trace", kb.clusters.inertia_trace},
              {"iterations", kb.clusters.iterations}}},
            {"apps", apps}};
}

KnowledgeBase knowledge_base_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "dvfs-knowledge-base") throw ParseError("not a knowledge base file");
        if (j.at("version").get<int>() != 1) throw ParseError("unsupported knowledge base version");
        KnowledgeBase kb;
        const auto& in = j.at("input");
        kb.input.feature_names = in.at("feature_names").get<std::vector<std::string>>();
        kb.input.norm.mean = in.at("mean").get<std::vector<double>>();
        kb.input.norm.stddev = in.at("stddev").get<std::vector<double>>();
        const std::size_t dim = kb.input.feature_names.size();
        if (kb.input.norm.mean.size() != dim || kb.input.norm.stddev.size() != dim)
            throw ParseError("knowledge base normalization does not align with feature names");
        if (kb.fingerprint() != j.at("fingerprint").get<std::string>())
            throw ParseError("knowledge base fingerprint mismatch");

        const auto& cl = j.at("clusters");
        const auto k = cl.at("k").get<std::size_t>();
        kb.clusters.centroids = Matrix(0, dim);
        for (const auto& c : cl.at("centroids")) kb.clusters.centroids.append_row(c.get<std::vector<double>>());
        if (kb.clusters.k() != k) throw ParseError("centroid count does not match k");
        kb.clusters.inertia = cl.at("inertia").get<double>();
        kb.clusters.inertia_trace = cl.at("inertia_trace").get<std::vector<double>>();
        kb.clusters.iterations = cl.at("iterations").get<int>();

        kb.profiles = Matrix(0, dim);
        for (const auto& a : j.at("apps")) {
            kb.app_ids.push_back(a.at("app_id").get<std::string>());
            const auto cluster = a.at("cluster").get<std::size_t>();
            if (cluster >= k) throw ParseError("app assigned to a non-existent cluster");
            kb.clusters.assignment.push_back(cluster);
            kb.profiles.append_row(a.at("profile").get<std::vector<double>>());
        }
        if (!std::is_sorted(kb.app_ids.begin(), kb.app_ids.end()) ||
            std::adjacent_find(kb.app_ids.begin(), kb.app_ids.end()) != kb.app_ids.end())
            throw ParseError("knowledge base app ids must be sorted and unique");
        return kb;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("knowledge base: ") + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(std::string("knowledge base: ") + e.what());
    }
}

void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << knowledge_base_to_json(kb).dump(1) << '\n';
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open knowledge base " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("knowledge base " + path.string() + ": " + e.what());
    }
    return knowledge_base_from_json(j);
}

}  // namespace dvfs
