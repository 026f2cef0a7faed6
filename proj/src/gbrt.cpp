#include <numeric>

#include "fitting.hpp"

namespace dvfs::detail {

namespace {

class TreeBuilder {
public:
    TreeBuilder(const GbrtParams& p, const Matrix& X, std::span<const double> residual, kernels::Exec exec)
        : params_(p), X_(X), residual_(residual), exec_(exec) {}

    RegressionTree build() {
        std::vector<std::size_t> rows(X_.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> rows, int depth) {
        double sum = 0.0;
        for (auto r : rows) sum += residual_[r];
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[index].value = params_.shrinkage * sum / static_cast<double>(rows.size());

        if (depth >= params_.max_depth) return index;
        const auto split =
            kernels::best_split(exec_, X_, residual_, rows, static_cast<std::size_t>(params_.min_leaf));
        if (split.feature < 0) return index;

        std::vector<std::size_t> left, right;
        for (auto r : rows)
            (X_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[index];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        node.value = 0.0;
        return index;
    }

    const GbrtParams& params_;
    const Matrix& X_;
    std::span<const double> residual_;
    kernels::Exec exec_;
    RegressionTree tree_;
};

double mean_square(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s / static_cast<double>(v.size());
}

}  // namespace

TreeEnsemble fit_gbrt(const GbrtParams& p, const Matrix& X, std::span<const double> y, kernels::Exec exec,
                      std::vector<double>* loss_trace) {
    const std::size_t n = X.rows();
    TreeEnsemble model;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::vector<double> prediction(n, model.base_score), residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - prediction[i];
    if (loss_trace) loss_trace->assign(1, mean_square(residual));

    model.trees.reserve(static_cast<std::size_t>(p.n_trees));
    for (int t = 0; t < p.n_trees; ++t) {
        RegressionTree tree = TreeBuilder(p, X, residual, exec).build();
        for (std::size_t i = 0; i < n; ++i) {
            prediction[i] += tree.predict(X.row(i));
            residual[i] = y[i] - prediction[i];
        }
        if (loss_trace) loss_trace->push_back(mean_square(residual));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace dvfs::detail
