#pragma once

// Energy / execution-time regressors over (normalized profile features ++
// candidate clocks). One model per (device, target).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dvfs/kernels.hpp"
#include "dvfs/matrix.hpp"
#include "dvfs/trace.hpp"
#include "json.hpp"

namespace dvfs {

enum class Target { Energy, Time };

std::string to_string(Target t);
Target parse_target(std::string_view s);

struct OlsParams {
    friend bool operator==(const OlsParams&, const OlsParams&) = default;
};

struct LassoParams {
    double lambda = 0.01;
    int max_sweeps = 10000;
    double tolerance = 1e-7;
    friend bool operator==(const LassoParams&, const LassoParams&) = default;
};

struct GbrtParams {
    int n_trees = 200;
    int max_depth = 3;
    double shrinkage = 0.1;
    int min_leaf = 2;
    friend bool operator==(const GbrtParams&, const GbrtParams&) = default;
};

using ModelKind = std::variant<OlsParams, LassoParams, GbrtParams>;

std::string kind_name(const ModelKind& kind);  // "ols" | "lasso" | "gbrt"
void validate_kind(const ModelKind& kind);
nlohmann::json kind_to_json(const ModelKind& kind);
/// Accepts {"kind": "gbrt", "n_trees": ...}; missing hyperparameters take defaults.
ModelKind kind_from_json(const nlohmann::json& j);

/// Feature names + normalization the model was trained against. The model
/// input is `norm.apply(raw features)` followed by core and memory clock in GHz.
struct InputSpec {
    std::vector<std::string> feature_names;
    NormStats norm;

    std::size_t input_dim() const { return feature_names.size() + 2; }
    std::string fingerprint() const;
    friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

InputSpec input_spec_for(const Dataset& normalized);

/// Model input for a normalized profile evaluated at `config`.
std::vector<double> model_input(std::span<const double> normalized_profile, const FrequencyConfig& config);

struct LinearParams {
    double intercept = 0.0;
    std::vector<double> coef;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, shrinkage already applied
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict(std::span<const double> x) const;
};

struct TreeEnsemble {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
};

struct TrainingInfo {
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    double train_rmse = 0.0;
    /// Mean squared training loss after the base score and after each tree (GBRT only).
    std::vector<double> loss_trace;
    int sweeps = 0;  // Lasso coordinate-descent sweeps
};

struct FittedModel {
    ModelKind kind;
    Target target = Target::Energy;
    std::size_t input_dim = 0;
    std::string fingerprint;
    std::optional<InputSpec> input;
    std::variant<LinearParams, TreeEnsemble> params;
    TrainingInfo info;
};

/// Fingerprint used for models fitted on a bare matrix (no feature schema).
std::string anonymous_fingerprint(std::size_t input_dim);

FittedModel fit(const ModelKind& kind, const Matrix& X, std::span<const double> y, std::uint64_t seed,
                kernels::Exec exec = kernels::Exec::Parallel);

double predict(const FittedModel& m, std::span<const double> x);
std::vector<double> predict_batch(const FittedModel& m, const Matrix& X, kernels::Exec exec = kernels::Exec::Parallel);

/// Prediction from raw (un-normalized) profile features at `config`.
double predict_raw(const FittedModel& m, std::span<const double> raw_features, const FrequencyConfig& config);

struct EvalReport {
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n_samples = 0;
    std::map<std::string, double> per_app_rmse;
};

EvalReport evaluate(const FittedModel& m, const Matrix& X, std::span<const double> y,
                    std::span<const std::string> app_ids = {});

nlohmann::json report_to_json(const EvalReport& r);

/// Rows: each record's app default-clock profile (normalized) ++ the record's
/// clocks; targets: the record's energy or time.
struct DesignMatrix {
    Matrix X;
    std::vector<double> y;
    std::vector<std::string> app_ids;
};

DesignMatrix design_matrix(const Dataset& normalized, Target target);

/// Fits on a normalized dataset and attaches its InputSpec.
FittedModel train_model(const ModelKind& kind, Target target, const Dataset& normalized, std::uint64_t seed,
                        kernels::Exec exec = kernels::Exec::Parallel);

EvalReport evaluate_on(const FittedModel& m, const Dataset& normalized);

/// k folds grouped by app id; folds run concurrently.
std::vector<EvalReport> cross_validate(const ModelKind& kind, Target target, const Dataset& normalized, int k_folds,
                                       std::uint64_t seed);

/// App ids of each fold, in fold order.
std::vector<std::vector<std::string>> fold_assignment(const Dataset& d, int k_folds, std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const FittedModel& m);
FittedModel model_from_json(const nlohmann::json& j);
void save_model(const FittedModel& m, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace dvfs
