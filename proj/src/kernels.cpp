#include "dvfs/kernels.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace dvfs::kernels {

bool better_split(const SplitCandidate& a, const SplitCandidate& b) {
    if (a.feature < 0) return false;
    if (b.feature < 0) return true;
    if (a.gain != b.gain) return a.gain > b.gain;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

SplitCandidate best_split_for_feature(const Matrix& X, std::span<const double> residual,
                                      std::span<const std::size_t> rows, std::size_t feature, std::size_t min_leaf) {
    SplitCandidate best;
    const std::size_t n = rows.size();
    min_leaf = std::max<std::size_t>(min_leaf, 1);
    if (n < 2 * min_leaf) return best;

    std::vector<std::pair<double, double>> values(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = {X(rows[i], feature), residual[rows[i]]};
        total += residual[rows[i]];
    }
    std::sort(values.begin(), values.end());

    const double parent = total * total / static_cast<double>(n);
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += values[i].second;
        const std::size_t n_left = i + 1, n_right = n - n_left;
        if (values[i].first == values[i + 1].first) continue;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) - parent;
        if (gain > best.gain) {
            const double lo = values[i].first, hi = values[i + 1].first;
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) threshold = lo;
            best = {static_cast<int>(feature), threshold, gain};
        }
    }
    return best;
}

std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids, double* sq_dist) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        auto centroid = centroids.row(c);
        double d = 0.0;
        for (std::size_t j = 0; j < point.size(); ++j) {
            const double diff = point[j] - centroid[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (sq_dist) *sq_dist = best_d;
    return best;
}

namespace serial {

SplitCandidate best_split(const Matrix& X, std::span<const double> residual, std::span<const std::size_t> rows,
                          std::size_t min_leaf) {
    SplitCandidate best;
    for (std::size_t f = 0; f < X.cols(); ++f) {
        auto cand = best_split_for_feature(X, residual, rows, f, min_leaf);
        if (better_split(cand, best)) best = cand;
    }
    return best;
}

double assign_nearest(const Matrix& points, const Matrix& centroids, std::span<std::size_t> assignment) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double d = 0.0;
        assignment[i] = nearest_centroid(points.row(i), centroids, &d);
        inertia += d;
    }
    return inertia;
}

}  // namespace serial

namespace parallel {

SplitCandidate best_split(const Matrix& X, std::span<const double> residual, std::span<const std::size_t> rows,
                          std::size_t min_leaf) {
    const auto n_features = static_cast<long>(X.cols());
    std::vector<SplitCandidate> per_feature(X.cols());
#pragma omp parallel for schedule(dynamic)
    for (long f = 0; f < n_features; ++f)
        per_feature[static_cast<std::size_t>(f)] =
            best_split_for_feature(X, residual, rows, static_cast<std::size_t>(f), min_leaf);

    SplitCandidate best;
    for (const auto& cand : per_feature)
        if (better_split(cand, best)) best = cand;
    return best;
}

double assign_nearest(const Matrix& points, const Matrix& centroids, std::span<std::size_t> assignment) {
    const auto n = static_cast<long>(points.rows());
    std::vector<double> dist(points.rows());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        assignment[row] = nearest_centroid(points.row(row), centroids, &dist[row]);
    }
    // Summed serially so the result matches the reference bit-for-bit.
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    return inertia;
}

}  // namespace parallel

}  // namespace dvfs::kernels
