#pragma once

#include <span>

#include "dvfs/kernels.hpp"
#include "dvfs/matrix.hpp"
#include "dvfs/predictors.hpp"

namespace dvfs::detail {

/// Least squares via the centered normal equations with a 1e-8 ridge.
LinearParams fit_ols(const Matrix& X, std::span<const double> y);

/// Cyclic coordinate descent on (1/2n)||y - b - X beta||^2 + lambda ||beta||_1;
/// intercept unpenalized. Returns the number of sweeps through `sweeps`.
LinearParams fit_lasso(const LassoParams& p, const Matrix& X, std::span<const double> y, int* sweeps = nullptr);

/// Squared-loss boosting of depth-limited trees. `loss_trace` receives the
/// mean squared training loss after the base score and after every tree.
TreeEnsemble fit_gbrt(const GbrtParams& p, const Matrix& X, std::span<const double> y, kernels::Exec exec,
                      std::vector<double>* loss_trace = nullptr);

}  // namespace dvfs::detail
