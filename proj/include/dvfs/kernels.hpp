#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; both
// return bit-identical results (reductions are merged in a fixed order).

#include <cstddef>
#include <span>
#include <vector>

#include "dvfs/matrix.hpp"

namespace dvfs::kernels {

enum class Exec { Serial, Parallel };

struct SplitCandidate {
    int feature = -1;  // -1: no admissible split
    double threshold = 0.0;
    double gain = 0.0;  // reduction in sum of squared residuals
};

/// Better split: larger gain, then lower feature index, then lower threshold.
bool better_split(const SplitCandidate& a, const SplitCandidate& b);

/// Best split for one feature over `rows` (exact greedy over sorted unique
/// values; both children keep at least `min_leaf` rows).
SplitCandidate best_split_for_feature(const Matrix& X, std::span<const double> residual,
                                      std::span<const std::size_t> rows, std::size_t feature, std::size_t min_leaf);

/// Index of the nearest centroid (squared Euclidean; ties to the lower index).
std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids, double* sq_dist = nullptr);

namespace serial {
SplitCandidate best_split(const Matrix& X, std::span<const double> residual, std::span<const std::size_t> rows,
                          std::size_t min_leaf);
/// Writes the nearest centroid per point; returns the inertia.
double assign_nearest(const Matrix& points, const Matrix& centroids, std::span<std::size_t> assignment);
}  // namespace serial

namespace parallel {
SplitCandidate best_split(const Matrix& X, std::span<const double> residual, std::span<const std::size_t> rows,
                          std::size_t min_leaf);
double assign_nearest(const Matrix& points, const Matrix& centroids, std::span<std::size_t> assignment);
}  // namespace parallel

inline SplitCandidate best_split(Exec exec, const Matrix& X, std::span<const double> residual,
                                 std::span<const std::size_t> rows, std::size_t min_leaf) {
    return exec == Exec::Serial ? serial::best_split(X, residual, rows, min_leaf)
                                : parallel::best_split(X, residual, rows, min_leaf);
}

inline double assign_nearest(Exec exec, const Matrix& points, const Matrix& centroids,
                             std::span<std::size_t> assignment) {
    return exec == Exec::Serial ? serial::assign_nearest(points, centroids, assignment)
                                : parallel::assign_nearest(points, centroids, assignment);
}

}  // namespace dvfs::kernels
