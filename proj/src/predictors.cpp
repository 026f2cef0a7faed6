#include "dvfs/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <map>

#include "dvfs/error.hpp"
#include "dvfs/rng.hpp"
#include "fitting.hpp"

namespace dvfs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t hash_doubles(std::span<const double> values, std::uint64_t h) {
    for (double v : values) {
        char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        h = fnv1a64(std::string_view(bytes, sizeof bytes), h);
    }
    return h;
}

void check_finite(const Matrix& X, std::span<const double> y) {
    for (double v : X.data())
        if (!std::isfinite(v)) throw ValidationError("training matrix contains non-finite values");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("training targets contain non-finite values");
}

}  // namespace

std::string to_string(Target t) { return t == Target::Energy ? "energy" : "time"; }

Target parse_target(std::string_view s) {
    if (s == "energy") return Target::Energy;
    if (s == "time") return Target::Time;
    throw ValidationError("unknown target '" + std::string(s) + "' (expected energy|time)");
}

std::string kind_name(const ModelKind& kind) {
    return std::visit(overloaded{[](const OlsParams&) { return std::string("ols"); },
                                 [](const LassoParams&) { return std::string("lasso"); },
                                 [](const GbrtParams&) { return std::string("gbrt"); }},
                      kind);
}

void validate_kind(const ModelKind& kind) {
    std::visit(overloaded{[](const OlsParams&) {},
                          [](const LassoParams& p) {
                              if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
                                  throw ValidationError("lasso lambda must be finite and >= 0");
                              if (p.max_sweeps < 1) throw ValidationError("lasso max_sweeps must be >= 1");
                              if (!(p.tolerance > 0.0)) throw ValidationError("lasso tolerance must be > 0");
                          },
                          [](const GbrtParams& p) {
                              if (p.n_trees < 1) throw ValidationError("gbrt n_trees must be >= 1");
                              if (p.max_depth < 0) throw ValidationError("gbrt max_depth must be >= 0");
                              if (!(p.shrinkage > 0.0 && p.shrinkage <= 1.0))
                                  throw ValidationError("gbrt shrinkage must be in (0, 1]");
                              if (p.min_leaf < 1) throw ValidationError("gbrt min_leaf must be >= 1");
                          }},
               kind);
}

nlohmann::json kind_to_json(const ModelKind& kind) {
    return std::visit(
        overloaded{[](const OlsParams&) { return nlohmann::json{{"kind", "ols"}}; },
                   [](const LassoParams& p) {
                       return nlohmann::json{
                           {"kind", "lasso"}, {"lambda", p.lambda}, {"max_sweeps", p.max_sweeps}, {"tolerance", p.tolerance}};
                   },
                   [](const GbrtParams& p) {
                       return nlohmann::json{{"kind", "gbrt"},
                                             {"n_trees", p.n_trees},
                                             {"max_depth", p.max_depth},
                                             {"shrinkage", p.shrinkage},
                                             {"min_leaf", p.min_leaf}};
                   }},
        kind);
}

ModelKind kind_from_json(const nlohmann::json& j) {
    try {
        const auto name = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
        const nlohmann::json params = j.is_object() ? j : nlohmann::json::object();
        ModelKind kind;
        if (name == "ols") {
            kind = OlsParams{};
        } else if (name == "lasso") {
            LassoParams p;
            p.lambda = params.value("lambda", p.lambda);
            p.max_sweeps = params.value("max_sweeps", p.max_sweeps);
            p.tolerance = params.value("tolerance", p.tolerance);
            kind = p;
        } else if (name == "gbrt") {
            GbrtParams p;
            p.n_trees = params.value("n_trees", p.n_trees);
            p.max_depth = params.value("max_depth", p.max_depth);
            p.shrinkage = params.value("shrinkage", p.shrinkage);
            p.min_leaf = params.value("min_leaf", p.min_leaf);
            kind = p;
        } else {
            throw ValidationError("unknown model kind '" + name + "' (expected ols|lasso|gbrt)");
        }
        validate_kind(kind);
        return kind;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model kind: ") + e.what());
    }
}

// --- inputs ------------------------------------------------------------

std::string InputSpec::fingerprint() const {
    std::uint64_t h = fnv1a64("dvfs-input-v1");
    for (const auto& name : feature_names) h = fnv1a64(name + "\n", h);
    h = fnv1a64("core_clock_ghz\nmem_clock_ghz\n", h);
    h = hash_doubles(norm.mean, h);
    h = hash_doubles(norm.stddev, h);
    return hex64(h);
}

InputSpec input_spec_for(const Dataset& normalized) {
    if (!normalized.norm_stats) throw ValidationError("dataset is not normalized");
    return {normalized.schema.names, *normalized.norm_stats};
}

std::vector<double> model_input(std::span<const double> normalized_profile, const FrequencyConfig& config) {
    std::vector<double> x(normalized_profile.begin(), normalized_profile.end());
    x.push_back(config.core_clock / 1000.0);
    x.push_back(config.mem_clock / 1000.0);
    return x;
}

std::string anonymous_fingerprint(std::size_t input_dim) {
    return hex64(fnv1a64("dvfs-anonymous-input-v1:" + std::to_string(input_dim)));
}

double RegressionTree::predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

// --- fit / predict -----------------------------------------------------

FittedModel fit(const ModelKind& kind, const Matrix& X, std::span<const double> y, std::uint64_t seed,
                kernels::Exec exec) {
    validate_kind(kind);
    if (X.rows() != y.size()) throw ValidationError("X has " + std::to_string(X.rows()) + " rows but y has " +
                                                    std::to_string(y.size()) + " values");
    if (X.cols() == 0) throw ValidationError("training matrix has no columns");
    check_finite(X, y);
    const bool is_ols = std::holds_alternative<OlsParams>(kind);
    if (is_ols && X.rows() < X.cols())
        throw ValidationError("OLS needs n >= d (n=" + std::to_string(X.rows()) + ", d=" + std::to_string(X.cols()) + ")");
    if (X.rows() < 2) throw ValidationError("fit needs at least 2 samples");

    FittedModel m;
    m.kind = kind;
    m.input_dim = X.cols();
    m.fingerprint = anonymous_fingerprint(X.cols());
    m.info.seed = seed;
    m.info.n_samples = X.rows();

    std::visit(overloaded{[&](const OlsParams&) { m.params = detail::fit_ols(X, y); },
                          [&](const LassoParams& p) { m.params = detail::fit_lasso(p, X, y, &m.info.sweeps); },
                          [&](const GbrtParams& p) { m.params = detail::fit_gbrt(p, X, y, exec, &m.info.loss_trace); }},
               kind);

    m.info.train_rmse = evaluate(m, X, y).rmse;
    return m;
}

double predict(const FittedModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim)
        throw ValidationError("input has " + std::to_string(x.size()) + " values, model expects " +
                              std::to_string(m.input_dim));
    return std::visit(overloaded{[&](const LinearParams& p) {
                                     double s = p.intercept;
                                     for (std::size_t j = 0; j < p.coef.size(); ++j) s += p.coef[j] * x[j];
                                     return s;
                                 },
                                 [&](const TreeEnsemble& e) {
                                     double s = e.base_score;
                                     for (const auto& tree : e.trees) s += tree.predict(x);
                                     return s;
                                 }},
                      m.params);
}

std::vector<double> predict_batch(const FittedModel& m, const Matrix& X, kernels::Exec exec) {
    if (X.cols() != m.input_dim && !X.empty())
        throw ValidationError("input has " + std::to_string(X.cols()) + " columns, model expects " +
                              std::to_string(m.input_dim));
    std::vector<double> out(X.rows());
    const auto n = static_cast<long>(X.rows());
    if (exec == kernels::Exec::Serial) {
        for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict(m, X.row(static_cast<std::size_t>(i)));
    } else {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict(m, X.row(static_cast<std::size_t>(i)));
    }
    return out;
}

double predict_raw(const FittedModel& m, std::span<const double> raw_features, const FrequencyConfig& config) {
    if (!m.input) throw ValidationError("model carries no input schema; use predict() with a prepared input");
    if (raw_features.size() != m.input->feature_names.size())
        throw ValidationError("profile has " + std::to_string(raw_features.size()) + " features, model expects " +
                              std::to_string(m.input->feature_names.size()));
    return predict(m, model_input(m.input->norm.apply(raw_features), config));
}

// --- evaluation --------------------------------------------------------

EvalReport evaluate(const FittedModel& m, const Matrix& X, std::span<const double> y,
                    std::span<const std::string> app_ids) {
    if (X.rows() == 0) throw ValidationError("cannot evaluate on an empty test set");
    if (X.rows() != y.size()) throw ValidationError("X and y disagree on sample count");
    if (!app_ids.empty() && app_ids.size() != y.size()) throw ValidationError("app ids do not align with samples");

    const auto pred = predict_batch(m, X, kernels::Exec::Serial);
    EvalReport r;
    r.n_samples = y.size();
    double sq = 0.0, abs_sum = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> per_app;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = pred[i] - y[i];
        sq += e * e;
        abs_sum += std::abs(e);
        if (!app_ids.empty()) {
            auto& acc = per_app[app_ids[i]];
            acc.first += e * e;
            ++acc.second;
        }
    }
    r.rmse = std::sqrt(sq / static_cast<double>(y.size()));
    r.mae = abs_sum / static_cast<double>(y.size());
    for (const auto& [app, acc] : per_app) r.per_app_rmse[app] = std::sqrt(acc.first / static_cast<double>(acc.second));
    return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
    return {{"rmse", r.rmse}, {"mae", r.mae}, {"n_samples", r.n_samples}, {"per_app_rmse", r.per_app_rmse}};
}

DesignMatrix design_matrix(const Dataset& normalized, Target target) {
    DesignMatrix dm;
    const auto& device = normalized.device;
    std::map<std::string, const TrainingRecord*> profiles;
    for (const auto& r : normalized.records)
        if (r.config == device.default_config) profiles.emplace(r.app_id, &r);

    for (const auto& r : normalized.records) {
        auto it = profiles.find(r.app_id);
        if (it == profiles.end())
            throw ValidationError("app '" + r.app_id + "' has no record at the default config " +
                                  to_string(device.default_config));
        dm.X.append_row(model_input(it->second->features, r.config));
        dm.y.push_back(target == Target::Energy ? r.measurement.energy : r.measurement.exec_time);
        dm.app_ids.push_back(r.app_id);
    }
    return dm;
}

FittedModel train_model(const ModelKind& kind, Target target, const Dataset& d, std::uint64_t seed,
                        kernels::Exec exec) {
    const Dataset normalized = d.norm_stats ? d : normalize(d);
    const auto dm = design_matrix(normalized, target);
    FittedModel m = fit(kind, dm.X, dm.y, seed, exec);
    m.target = target;
    m.input = input_spec_for(normalized);
    m.fingerprint = m.input->fingerprint();
    return m;
}

EvalReport evaluate_on(const FittedModel& m, const Dataset& normalized) {
    if (m.input && normalized.norm_stats && InputSpec{normalized.schema.names, *normalized.norm_stats} != *m.input)
        throw ValidationError("dataset normalization does not match the model's input schema");
    const auto dm = design_matrix(normalized, m.target);
    return evaluate(m, dm.X, dm.y, dm.app_ids);
}

std::vector<std::vector<std::string>> fold_assignment(const Dataset& d, int k_folds, std::uint64_t seed) {
    if (k_folds < 2) throw ValidationError("cross-validation needs k_folds >= 2");
    auto apps = d.app_ids();
    if (apps.size() < static_cast<std::size_t>(k_folds))
        throw ValidationError("cross-validation needs at least as many apps as folds (" + std::to_string(apps.size()) +
                              " < " + std::to_string(k_folds) + ")");
    Rng rng(seed);
    for (std::size_t i = apps.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(apps[i], apps[pick(rng)]);
    }
    std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k_folds));
    for (std::size_t i = 0; i < apps.size(); ++i) folds[i % folds.size()].push_back(apps[i]);
    return folds;
}

std::vector<EvalReport> cross_validate(const ModelKind& kind, Target target, const Dataset& d, int k_folds,
                                       std::uint64_t seed) {
    validate_kind(kind);
    const Dataset normalized = d.norm_stats ? d : normalize(d);
    const auto folds = fold_assignment(normalized, k_folds, seed);
    const auto all_apps = normalized.app_ids();

    std::vector<EvalReport> reports(folds.size());
    std::vector<std::exception_ptr> errors(folds.size());
    const auto n_folds = static_cast<long>(folds.size());
#pragma omp parallel for schedule(dynamic)
    for (long f = 0; f < n_folds; ++f) {
        const auto fold = static_cast<std::size_t>(f);
        try {
            std::vector<std::string> train_apps;
            for (const auto& app : all_apps)
                if (std::find(folds[fold].begin(), folds[fold].end(), app) == folds[fold].end())
                    train_apps.push_back(app);
            const Dataset train = subset(normalized, train_apps);
            const Dataset test = subset(normalized, folds[fold]);
            const FittedModel m = train_model(kind, target, train, seed, kernels::Exec::Serial);
            reports[fold] = evaluate_on(m, test);
        } catch (...) {
            errors[fold] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reports;
}

}  // namespace dvfs
