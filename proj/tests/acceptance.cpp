// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "dvfs/matcher.hpp"
#include "dvfs/predictors.hpp"
#include "dvfs/rng.hpp"
#include "dvfs/scheduler.hpp"
#include "dvfs/server.hpp"
#include "dvfs/simulator.hpp"
#include "dvfs/trace.hpp"
#include "httplib.h"

namespace fs = std::filesystem;
using namespace dvfs;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator()(const std::string& key, const T& value) {
        if (!text_.str().empty()) text_ << ", ";
        text_ << key << "=" << value;
        return *this;
    }
    std::string str() const { return text_.str(); }

private:
    std::ostringstream text_;
};

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Shared experiment: 12 apps, sigma 0.05, grouped 80/20 split, GBRT and OLS on both targets.
struct Experiment {
    DeviceSpec device = reference_device();
    SyntheticData syn;
    Dataset normalized;
    Dataset train;
    Dataset test;
    std::map<Target, FittedModel> gbrt;
    std::map<Target, FittedModel> ols;

    Experiment() {
        OracleRanges ranges;
        ranges.noise_sigma = 0.05;
        syn = generate_synthetic(12, device, ranges, substream_seed(kSeed, "dataset"));
        normalized = normalize(syn.dataset);
        std::tie(train, test) = split(normalized, 0.2, substream_seed(kSeed, "split"));
        const auto model_seed = substream_seed(kSeed, "model");
        for (Target t : {Target::Energy, Target::Time}) {
            gbrt.emplace(t, train_model(GbrtParams{200, 3, 0.1, 2}, t, train, model_seed));
            ols.emplace(t, train_model(OlsParams{}, t, train, model_seed));
        }
    }
};

double relative_rmse(const FittedModel& m, const Dataset& test, Target t) {
    const DesignMatrix dm = design_matrix(test, t);
    return evaluate(m, dm.X, dm.y).rmse / mean_of(dm.y);
}

Outcome criterion1(const Experiment& ex) {
    const double gt = relative_rmse(ex.gbrt.at(Target::Time), ex.test, Target::Time);
    const double ge = relative_rmse(ex.gbrt.at(Target::Energy), ex.test, Target::Energy);
    const double ot = relative_rmse(ex.ols.at(Target::Time), ex.test, Target::Time);
    const double oe = relative_rmse(ex.ols.at(Target::Energy), ex.test, Target::Energy);
    Outcome o;
    o.pass = ex.syn.dataset.records.size() >= 120 && gt <= 0.10 && ge <= 0.15 && gt < ot && ge < oe;
    o.detail = Detail()("gbrt_time", gt)("gbrt_energy", ge)("ols_time", ot)("ols_energy", oe)("test_apps",
                                                                                                 ex.test.app_ids().size())
                   .str();
    return o;
}

// Brute-force enumeration straight from the ground truth.
FrequencyConfig brute_force_choice(const OracleSpec& spec, const Job& job, const DeviceSpec& device, double start) {
    const FrequencyConfig* best = nullptr;
    double best_energy = std::numeric_limits<double>::infinity();
    const FrequencyConfig* fastest = nullptr;
    double fastest_time = std::numeric_limits<double>::infinity();
    for (const auto& cfg : device.supported_configs) {
        const Measurement m = noisy_measurement(spec, cfg, device, job.time_noise, job.power_noise);
        if (m.exec_time < fastest_time) {
            fastest_time = m.exec_time;
            fastest = &cfg;
        }
        if (start + m.exec_time > job.deadline) continue;
        const bool better = m.energy < best_energy ||
                            (m.energy == best_energy && (cfg.core_clock < best->core_clock ||
                                                         (cfg.core_clock == best->core_clock && cfg.mem_clock < best->mem_clock)));
        if (better) {
            best_energy = m.energy;
            best = &cfg;
        }
    }
    return best ? *best : *fastest;
}

const OracleSpec& app_of(std::span<const OracleSpec> apps, const std::string& id) {
    return *std::find_if(apps.begin(), apps.end(), [&](const OracleSpec& o) { return o.app_id == id; });
}

Outcome criterion2() {
    const DeviceSpec device = reference_device();
    OracleRanges ranges;
    ranges.noise_sigma = 0.0;
    const SyntheticData syn = generate_synthetic(12, device, ranges, 2024);
    const Workload w = generate_workload(syn.oracles, device, 200, 0.05, {1.0, 3.0}, 77);
    const OracleEstimator exact(syn.oracles);
    std::mt19937_64 rng(5);
    std::size_t matched = 0;
    std::size_t infeasible = 0;
    for (const Job& job : w.jobs) {
        // some starts land after the slack runs out so the fallback is exercised too
        std::uniform_real_distribution<double> start_at(job.arrival_time, job.deadline);
        const double start = start_at(rng);
        const auto table = exact.estimate(job, device);
        const auto d = select_frequency(table, start, job.deadline, Policy::DataDriven, device, job.job_id);
        const auto expected = brute_force_choice(app_of(syn.oracles, job.app_id), job, device, start);
        matched += d.chosen_config == expected ? 1 : 0;
        infeasible += d.feasible ? 0 : 1;
    }
    Outcome o;
    o.pass = matched == w.jobs.size();
    o.detail = Detail()("matched", std::to_string(matched) + "/" + std::to_string(w.jobs.size()))("infeasible_starts",
                                                                                                   infeasible)
                   .str();
    return o;
}

struct SavingsRun {
    Workload workload;
    PolicyComparison trained;
    SimulationResult oracle;  // DataDriven with exact models
};

SavingsRun savings_run(const Experiment& ex) {
    SavingsRun r;
    r.workload = generate_workload(ex.syn.oracles, ex.device, 200, 0.01, {1.2, 3.0}, substream_seed(kSeed, "workload"));
    const KnowledgeBase kb = build_knowledge_base(ex.normalized, default_cluster_count(12),
                                                  substream_seed(kSeed, "knowledge_base"));
    const ModelEstimator est(kb, ex.gbrt.at(Target::Energy), ex.gbrt.at(Target::Time));
    const std::vector<DeviceSpec> devices{ex.device};
    const std::vector<Policy> policies{Policy::DataDriven, Policy::DefaultClock, Policy::MaxClock};
    r.trained = compare_policies(r.workload, devices, policies, est, ex.syn.oracles);
    r.oracle = simulate(r.workload, devices, Policy::DataDriven, OracleEstimator(ex.syn.oracles), ex.syn.oracles);
    return r;
}

Outcome criterion3(const Experiment& ex, const SavingsRun& r) {
    // Exhaustive check that the exact-model schedule is the per-job optimum.
    std::size_t optimal = 0;
    for (std::size_t i = 0; i < r.oracle.jobs.size(); ++i) {
        const Job& job = r.workload.jobs[i];
        const auto& rec = r.oracle.jobs[i];
        optimal += rec.decision.chosen_config ==
                           brute_force_choice(app_of(ex.syn.oracles, job.app_id), job, ex.device, rec.start)
                       ? 1
                       : 0;
    }
    double e_max = 0.0;
    for (const Job& job : r.workload.jobs)
        e_max += noisy_measurement(app_of(ex.syn.oracles, job.app_id), ex.device.max_config, ex.device, job.time_noise,
                                   job.power_noise)
                     .energy;
    const double e_oracle = r.oracle.aggregates.total_energy;
    const double e_dd = r.trained.result(Policy::DataDriven).aggregates.total_energy;
    const double e_def = r.trained.result(Policy::DefaultClock).aggregates.total_energy;
    const double e_max_sim = r.trained.result(Policy::MaxClock).aggregates.total_energy;
    const double oracle_savings = (e_max - e_oracle) / e_max;
    const double dd_savings = (e_max - e_dd) / e_max;
    const double capture = dd_savings / oracle_savings;

    Outcome o;
    o.pass = optimal == r.oracle.jobs.size() && std::abs(e_max - e_max_sim) <= 1e-9 * e_max &&
             oracle_savings >= 0.15 && capture >= 0.60 && e_dd < e_max && e_dd < e_def;
    o.detail = Detail()("oracle_savings_vs_max", oracle_savings)("data_driven_savings_vs_max", dd_savings)(
                   "capture", capture)("E_data_driven", e_dd)("E_default", e_def)("E_max", e_max)
                   .str();
    return o;
}

Outcome criterion4(const SavingsRun& r) {
    const double dd = r.trained.result(Policy::DataDriven).aggregates.violation_rate;
    const double def = r.trained.result(Policy::DefaultClock).aggregates.violation_rate;
    std::size_t feasible = 0;
    std::size_t late = 0;
    for (const auto& rec : r.oracle.jobs) {
        if (!rec.decision.feasible) continue;
        ++feasible;
        late += rec.normalized_completion <= 1.0 ? 0 : 1;
    }
    Outcome o;
    o.pass = dd <= def && late == 0;
    o.detail = Detail()("violation_rate_data_driven", dd)("violation_rate_default", def)(
                   "violation_rate_max", r.trained.result(Policy::MaxClock).aggregates.violation_rate)(
                   "exact_feasible_jobs_late", std::to_string(late) + "/" + std::to_string(feasible))
                   .str();
    return o;
}

// --- criterion 5: numerical properties on fresh fixtures -----------------

struct Fixture {
    Matrix X;
    std::vector<double> y;
};

Fixture gaussian_fixture(std::size_t n, std::size_t p, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Fixture f{Matrix(n, p), std::vector<double>(n)};
    std::vector<double> beta(p);
    for (std::size_t j = 0; j < p; ++j) beta[j] = j % 3 == 0 ? 0.0 : g(rng);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.5;
        for (std::size_t j = 0; j < p; ++j) {
            f.X(i, j) = g(rng);
            s += beta[j] * f.X(i, j);
        }
        f.y[i] = s + noise * g(rng) + 0.3 * std::sin(2.0 * f.X(i, 0));
    }
    return f;
}

std::size_t nonzeros(const FittedModel& m) {
    const auto& c = std::get<LinearParams>(m.params).coef;
    return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](double v) { return v != 0.0; }));
}

double lambda_max(const Fixture& f) {
    const auto n = static_cast<double>(f.X.rows());
    const double ym = mean_of(f.y);
    double best = 0.0;
    for (std::size_t j = 0; j < f.X.cols(); ++j) {
        double xm = 0.0;
        for (std::size_t i = 0; i < f.X.rows(); ++i) xm += f.X(i, j);
        xm /= n;
        double dot = 0.0;
        for (std::size_t i = 0; i < f.X.rows(); ++i) dot += (f.X(i, j) - xm) * (f.y[i] - ym);
        best = std::max(best, std::abs(dot) / n);
    }
    return best;
}

Outcome criterion5() {
    std::vector<std::string> failed;
    auto require = [&](bool ok, const std::string& name) {
        if (!ok) failed.push_back(name);
    };

    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Fixture f = gaussian_fixture(150, 6, 0.2, seed);
        const FittedModel m = fit(GbrtParams{80, 3, 0.3, 2}, f.X, f.y, 0);
        const auto& trace = m.info.loss_trace;
        bool mono = trace.size() == 81;
        for (std::size_t t = 1; t < trace.size(); ++t) mono = mono && trace[t] <= trace[t - 1];
        require(mono, "gbrt_loss_monotone");
    }

    {
        const Fixture f = gaussian_fixture(100, 10, 0.3, 4);
        const double lmax = lambda_max(f);
        std::size_t previous = f.X.cols() + 1;
        bool mono = true;
        for (int i = 0; i <= 20; ++i) {
            const std::size_t nz = nonzeros(fit(LassoParams{lmax * i / 20.0}, f.X, f.y, 0));
            mono = mono && nz <= previous;
            previous = nz;
        }
        require(mono, "lasso_sparsity_monotone");
        bool zero = true;
        for (double s : {1.0, 2.0, 10.0}) zero = zero && nonzeros(fit(LassoParams{lmax * s}, f.X, f.y, 0)) == 0;
        require(zero, "lasso_lambda_max_zero");
    }

    for (std::uint64_t seed = 5; seed <= 7; ++seed) {
        const Fixture f = gaussian_fixture(120, 8, 0.5, seed);
        const FittedModel m = fit(OlsParams{}, f.X, f.y, 0);
        const auto& p = std::get<LinearParams>(m.params);
        const std::size_t n = f.X.rows();
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = p.intercept;
            for (std::size_t j = 0; j < f.X.cols(); ++j) s += p.coef[j] * f.X(i, j);
            r[i] = s - f.y[i];
        }
        double worst = std::abs(std::accumulate(r.begin(), r.end(), 0.0));
        for (std::size_t j = 0; j < f.X.cols(); ++j) {
            double gj = 0.0;
            for (std::size_t i = 0; i < n; ++i) gj += f.X(i, j) * r[i];
            worst = std::max(worst, std::abs(gj));
        }
        require(worst <= 1e-6 * static_cast<double>(n), "ols_stationarity");
    }

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Fixture f = gaussian_fixture(200, 3, 0.0, 100 + seed);
        const ClusterModel km = kmeans(f.X, 4, seed);
        bool mono = !km.inertia_trace.empty();
        for (std::size_t i = 1; i < km.inertia_trace.size(); ++i)
            mono = mono && km.inertia_trace[i] <= km.inertia_trace[i - 1] * (1.0 + 1e-12);
        require(mono, "kmeans_inertia_monotone");
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, 3);
        double best_random = std::numeric_limits<double>::infinity();
        for (int restart = 0; restart < 50; ++restart) {
            std::vector<std::size_t> a(f.X.rows());
            for (auto& v : a) v = pick(rng);
            best_random = std::min(best_random, partition_inertia(f.X, a, 4));
        }
        require(km.inertia <= best_random, "kmeans_restart_dominance");
    }

    {
        const Fixture train = gaussian_fixture(200, 6, 0.5, 11);
        const Fixture held = gaussian_fixture(200, 6, 0.5, 12);
        for (const ModelKind& kind : {ModelKind{OlsParams{}}, ModelKind{LassoParams{0.02}}, ModelKind{GbrtParams{}}}) {
            const FittedModel m = fit(kind, train.X, train.y, 0);
            double sum = 0.0;
            for (std::size_t i = 0; i < held.X.rows(); ++i) {
                const double e = predict(m, held.X.row(i)) - held.y[i];
                sum += e * e;
            }
            const double two_pass = std::sqrt(sum / static_cast<double>(held.X.rows()));
            require(std::abs(evaluate(m, held.X, held.y).rmse - two_pass) <= 1e-12, "rmse_agreement");
        }
    }

    std::sort(failed.begin(), failed.end());
    failed.erase(std::unique(failed.begin(), failed.end()), failed.end());
    Outcome o;
    o.pass = failed.empty();
    std::string names;
    for (const auto& f : failed) names += (names.empty() ? "" : ",") + f;
    o.detail = o.pass ? "gbrt, lasso, ols, kmeans, rmse properties hold" : "failed: " + names;
    return o;
}

// --- criterion 6: CLI determinism -----------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).string();
        std::string text = slurp(e.path());
        if (rel.rfind("run_", 0) == 0) {
            json j = json::parse(text);
            j.erase("metadata");
            text = j.dump();
        }
        files[rel] = std::move(text);
    }
    return files;
}

Outcome criterion6() {
    const fs::path out = fs::temp_directory_path() / "dvfs_acceptance_determinism";
    const fs::path config = fs::path(DVFS_SOURCE_DIR) / "configs" / "quick.json";
    auto pipeline = [&]() -> std::optional<std::map<std::string, std::string>> {
        fs::remove_all(out);
        for (const char* cmd : {"synth", "train", "simulate"}) {
            const std::string line = std::string(DVFS_CLI_PATH) + " --config '" + config.string() + "' --out '" +
                                     out.string() + "' " + cmd + " > /dev/null 2>&1";
            const int status = std::system(line.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return std::nullopt;
        }
        return snapshot(out);
    };
    const auto a = pipeline();
    const auto b = pipeline();
    fs::remove_all(out);
    Outcome o;
    if (!a || !b) {
        o.pass = false;
        o.detail = "pipeline exited nonzero";
        return o;
    }
    std::size_t differing = 0;
    std::size_t data_files = 0;
    for (const auto& [name, text] : *a) {
        const auto it = b->find(name);
        differing += (it == b->end() || it->second != text) ? 1 : 0;
        const auto ext = fs::path(name).extension();
        data_files += (ext == ".csv" || ext == ".json") ? 1 : 0;
    }
    o.pass = a->size() == b->size() && differing == 0 && data_files > 0;
    o.detail = Detail()("files", a->size())("differing", differing).str();
    return o;
}

// --- criterion 7: serving -------------------------------------------------

Outcome criterion7(const Experiment& ex) {
    std::map<Target, FittedModel> models{{Target::Energy, ex.gbrt.at(Target::Energy)},
                                         {Target::Time, ex.gbrt.at(Target::Time)}};
    ModelServer server(models);
    const int port = server.bind("127.0.0.1", 0);
    std::thread th([&] { server.run(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    client.set_read_timeout(10);

    std::mt19937_64 rng(kSeed);
    const auto& records = ex.syn.dataset.records;
    const auto& configs = ex.device.supported_configs;
    std::uniform_int_distribution<std::size_t> pick_rec(0, records.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_cfg(0, configs.size() - 1);
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    std::size_t exact = 0;
    for (int i = 0; i < 100; ++i) {
        PredictRequest req;
        req.target = i % 2 == 0 ? Target::Energy : Target::Time;
        req.features = records[pick_rec(rng)].features;
        for (auto& v : req.features) v *= jitter(rng);
        req.config = configs[pick_cfg(rng)];
        const auto res = client.Post("/v1/predict", request_to_json(req).dump(), "application/json");
        if (!res || res->status != 200) continue;
        const json body = json::parse(res->body);
        exact += body["prediction"].get<double>() == predict_raw(models.at(req.target), req.features, req.config) &&
                         body["fingerprint"] == models.at(req.target).fingerprint
                     ? 1
                     : 0;
    }

    const auto& rec = records.front();
    const json good = request_to_json({Target::Energy, rec.features, rec.config});
    json unknown = good;
    unknown["target"] = "carbon";
    json short_features = good;
    short_features["features"] = json::array({1.0, 2.0});
    json bad_clock = good;
    bad_clock["config"]["core_clock"] = "fast";
    const std::vector<std::pair<std::string, int>> matrix{
        {"not json", 400}, {"{}", 400}, {bad_clock.dump(), 400}, {unknown.dump(), 404}, {short_features.dump(), 422}};
    std::size_t codes_ok = 0;
    for (const auto& [body, expected] : matrix) {
        const auto res = client.Post("/v1/predict", body, "application/json");
        codes_ok += res && res->status == expected ? 1 : 0;
    }
    server.stop();
    th.join();

    Outcome o;
    o.pass = exact == 100 && codes_ok == matrix.size();
    o.detail = Detail()("bit_exact", std::to_string(exact) + "/100")(
                   "error_codes", std::to_string(codes_ok) + "/" + std::to_string(matrix.size()))
                   .str();
    return o;
}

int report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = limit_s <= 0.0 || secs < limit_s;
    if (!in_time) o.detail += ", over time limit";
    const bool pass = o.pass && in_time;
    std::printf("%s criterion %d %s: %s (%.2f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    return pass ? 0 : 1;
}

}  // namespace

int main() {
    int failures = 0;
    std::optional<Experiment> ex;
    std::optional<SavingsRun> run;

    failures += report(1, "prediction quality", 60.0, [&] {
        ex.emplace();
        return criterion1(*ex);
    });
    failures += report(2, "scheduler optimality", 10.0, criterion2);
    // Training time is charged to criterion 1; criterion 3 covers the workload and simulations.
    failures += report(3, "energy savings", 120.0, [&] {
        run = savings_run(*ex);
        return criterion3(*ex, *run);
    });
    failures += report(4, "deadline behavior", 0.0, [&] { return criterion4(*run); });
    failures += report(5, "numerical properties", 0.0, criterion5);
    failures += report(6, "end-to-end determinism", 0.0, criterion6);
    failures += report(7, "serving consistency", 0.0, [&] { return criterion7(*ex); });
    return failures;
}
