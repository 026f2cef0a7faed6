#include <Eigen/Dense>
#include <cmath>

#include "dvfs/error.hpp"
#include "fitting.hpp"

namespace dvfs::detail {

namespace {

constexpr double kRidge = 1e-8;

struct Centered {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::RowVectorXd x_mean;
    double y_mean = 0.0;
};

Centered center(const Matrix& X, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(X.rows());
    const auto d = static_cast<Eigen::Index>(X.cols());
    Centered c;
    c.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(X.data().data(), n, d);
    c.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    c.x_mean = c.X.colwise().mean();
    c.y_mean = c.y.mean();
    c.X.rowwise() -= c.x_mean;
    c.y.array() -= c.y_mean;
    return c;
}

LinearParams finish(const Centered& c, const Eigen::VectorXd& beta) {
    LinearParams p;
    p.coef.assign(beta.data(), beta.data() + beta.size());
    p.intercept = c.y_mean - c.x_mean.dot(beta);
    return p;
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

}  // namespace

LinearParams fit_ols(const Matrix& X, std::span<const double> y) {
    const Centered c = center(X, y);
    const auto d = c.X.cols();
    Eigen::MatrixXd gram = c.X.transpose() * c.X;
    gram.diagonal().array() += kRidge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw Error("OLS: normal equations are singular");
    Eigen::VectorXd beta = ldlt.solve(c.X.transpose() * c.y);
    if (ldlt.info() != Eigen::Success || !beta.allFinite() || beta.size() != d)
        throw Error("OLS: normal equations are singular");
    return finish(c, beta);
}

LinearParams fit_lasso(const LassoParams& p, const Matrix& X, std::span<const double> y, int* sweeps) {
    const Centered c = center(X, y);
    const auto n = static_cast<double>(c.X.rows());
    const auto d = c.X.cols();
    Eigen::VectorXd col_sq = c.X.colwise().squaredNorm().transpose() / n;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd residual = c.y;

    // At or above lambda_max the zero vector is optimal; rounding in the
    // coordinate updates must not leave a tiny coefficient behind.
    const double lambda_max = (c.X.transpose() * c.y).cwiseAbs().maxCoeff() / n;
    if (p.lambda >= lambda_max * (1.0 - 1e-12)) {
        if (sweeps) *sweeps = 0;
        return finish(c, beta);
    }

    int sweep = 0;
    while (sweep < p.max_sweeps) {
        ++sweep;
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double rho = c.X.col(j).dot(residual) / n + col_sq[j] * beta[j];
            const double updated = soft_threshold(rho, p.lambda) / col_sq[j];
            const double delta = updated - beta[j];
            if (delta != 0.0) {
                residual.noalias() -= delta * c.X.col(j);
                beta[j] = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < p.tolerance) break;
    }
    if (!beta.allFinite()) throw Error("lasso: coordinate descent diverged");
    if (sweeps) *sweeps = sweep;
    return finish(c, beta);
}

}  // namespace dvfs::detail
