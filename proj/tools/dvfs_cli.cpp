// dvfs: synth -> train -> evaluate -> simulate -> serve.
//
// Exit codes: 0 success, 2 configuration/validation error, 1 runtime failure.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dvfs/error.hpp"
#include "dvfs/matcher.hpp"
#include "dvfs/predictors.hpp"
#include "dvfs/rng.hpp"
#include "dvfs/scheduler.hpp"
#include "dvfs/server.hpp"
#include "dvfs/simulator.hpp"
#include "dvfs/trace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad configuration or input: exit code 2.
class ConfigError : public dvfs::Error {
public:
    using dvfs::Error::Error;
};

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string device;
    std::string dataset;
    std::string model;
    std::optional<int> n_apps;
    std::optional<double> noise_sigma;
    std::optional<double> test_fraction;
    std::optional<int> k;
    std::optional<int> n_jobs;
    std::optional<double> arrival_rate;
    std::vector<std::string> policies;
    std::string host;
    std::optional<int> port;
};

struct RunConfig {
    std::uint64_t seed = 0;
    fs::path out = "out";
    fs::path device;
    fs::path dataset;  // defaults to <out>/dataset.csv
    fs::path models;   // defaults to <out>/models

    int n_apps = 12;
    dvfs::OracleRanges ranges;

    json primary_model = {{"kind", "gbrt"}};
    std::vector<json> compare_models = {{{"kind", "ols"}}, {{"kind", "lasso"}}, {{"kind", "gbrt"}}};
    double test_fraction = 0.2;
    std::optional<int> k;

    int n_jobs = 200;
    double arrival_rate = 0.01;
    dvfs::Range slack{1.2, 3.0};
    int n_devices = 1;
    dvfs::SimOptions sim;
    std::vector<dvfs::Policy> policies = {dvfs::Policy::DataDriven, dvfs::Policy::DefaultClock,
                                          dvfs::Policy::MaxClock};

    std::string host = "127.0.0.1";
    int port = 8080;

    json effective;  // config after overrides, echoed into the run manifest
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

dvfs::Range range_or(const json& j, const char* key, dvfs::Range fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(std::string("config field '") + key + "' must be [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

json archetypes_json(const std::vector<dvfs::AppArchetype>& types) {
    json out = json::array();
    auto pair = [](const dvfs::Range& r) { return json::array({r.lo, r.hi}); };
    for (const auto& t : types)
        out.push_back({{"name", t.name},
                       {"compute_work", pair(t.compute_work)},
                       {"mem_work", pair(t.mem_work)},
                       {"fixed_time", pair(t.fixed_time)},
                       {"dyn_power_coeff", pair(t.dyn_power_coeff)},
                       {"mem_power_coeff", pair(t.mem_power_coeff)}});
    return out;
}

RunConfig load_config(const Overrides& o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw ConfigError("cannot open config file " + o.config_path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError("config file " + o.config_path + " is not valid JSON: " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    }
    // Relative paths in a config file resolve against the file's directory.
    const fs::path base = o.config_path.empty() ? fs::path() : fs::path(o.config_path).parent_path();
    auto resolve = [&base](const std::string& p) { return p.empty() ? fs::path() : (fs::path(p).is_absolute() ? fs::path(p) : base / p); };

    RunConfig c;
    if (o.seed) {
        c.seed = *o.seed;
    } else if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("config field 'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    } else {
        throw ConfigError("a seed is required (config 'seed' or --seed)");
    }
    c.out = !o.out.empty() ? fs::path(o.out) : resolve(get_or<std::string>(j, "out", "out"));
    c.device = !o.device.empty() ? fs::path(o.device) : resolve(get_or<std::string>(j, "device", ""));

    const json ds = get_or<json>(j, "dataset", json::object());
    c.dataset = !o.dataset.empty() ? fs::path(o.dataset) : resolve(get_or<std::string>(ds, "path", ""));
    if (c.dataset.empty()) c.dataset = c.out / "dataset.csv";
    c.n_apps = o.n_apps.value_or(get_or<int>(ds, "n_apps", c.n_apps));
    c.ranges.noise_sigma = o.noise_sigma.value_or(get_or<double>(ds, "noise_sigma", c.ranges.noise_sigma));
    if (ds.contains("archetypes")) {
        if (!ds["archetypes"].is_array() || ds["archetypes"].empty())
            throw ConfigError("dataset.archetypes must be a non-empty array");
        c.ranges.archetypes.clear();
        for (const auto& a : ds["archetypes"]) {
            if (!a.is_object()) throw ConfigError("each dataset.archetypes entry must be an object");
            dvfs::AppArchetype type;
            type.name = get_or<std::string>(a, "name", "archetype" + std::to_string(c.ranges.archetypes.size()));
            for (const char* key : {"compute_work", "mem_work", "fixed_time", "dyn_power_coeff", "mem_power_coeff"})
                if (!a.contains(key)) throw ConfigError("archetype '" + type.name + "' is missing '" + key + "'");
            type.compute_work = range_or(a, "compute_work", {});
            type.mem_work = range_or(a, "mem_work", {});
            type.fixed_time = range_or(a, "fixed_time", {});
            type.dyn_power_coeff = range_or(a, "dyn_power_coeff", {});
            type.mem_power_coeff = range_or(a, "mem_power_coeff", {});
            c.ranges.archetypes.push_back(std::move(type));
        }
    }

    const json models = get_or<json>(j, "models", json::object());
    c.models = resolve(get_or<std::string>(models, "dir", ""));
    if (c.models.empty()) c.models = c.out / "models";
    if (models.contains("primary")) c.primary_model = models["primary"];
    if (!o.model.empty()) c.primary_model = {{"kind", o.model}};
    if (models.contains("compare")) {
        if (!models["compare"].is_array()) throw ConfigError("models.compare must be an array");
        c.compare_models.assign(models["compare"].begin(), models["compare"].end());
    }
    c.test_fraction = o.test_fraction.value_or(get_or<double>(models, "test_fraction", c.test_fraction));
    const json kb = get_or<json>(j, "knowledge_base", json::object());
    if (o.k) c.k = o.k;
    else if (kb.contains("k") && !kb["k"].is_null()) c.k = get_or<int>(kb, "k", 1);

    const json wl = get_or<json>(j, "workload", json::object());
    c.n_jobs = o.n_jobs.value_or(get_or<int>(wl, "n_jobs", c.n_jobs));
    c.arrival_rate = o.arrival_rate.value_or(get_or<double>(wl, "arrival_rate", c.arrival_rate));
    c.slack = range_or(wl, "slack_factor", c.slack);
    c.n_devices = get_or<int>(wl, "n_devices", c.n_devices);
    c.sim.switch_overhead_ms = get_or<double>(wl, "switch_overhead_ms", 0.0);
    const auto queue = get_or<std::string>(wl, "queue", "edf");
    if (queue == "edf") c.sim.queue = dvfs::QueueDiscipline::EarliestDeadlineFirst;
    else if (queue == "fifo") c.sim.queue = dvfs::QueueDiscipline::Fifo;
    else throw ConfigError("workload.queue must be 'edf' or 'fifo'");

    std::vector<std::string> policy_names = o.policies;
    if (policy_names.empty() && j.contains("policies")) policy_names = get_or<std::vector<std::string>>(j, "policies", {});
    if (!policy_names.empty()) {
        c.policies.clear();
        for (const auto& p : policy_names) c.policies.push_back(dvfs::parse_policy(p));
    }

    const json serve = get_or<json>(j, "serve", json::object());
    c.host = !o.host.empty() ? o.host : get_or<std::string>(serve, "host", c.host);
    c.port = o.port.value_or(get_or<int>(serve, "port", c.port));

    if (c.n_apps < 1) throw ConfigError("n_apps must be >= 1");
    if (c.n_jobs < 1) throw ConfigError("workload.n_jobs must be >= 1");
    if (c.n_devices < 1) throw ConfigError("workload.n_devices must be >= 1");
    if (c.port < 0 || c.port > 65535) throw ConfigError("serve.port out of range");
    dvfs::validate_kind(dvfs::kind_from_json(c.primary_model));
    for (const auto& m : c.compare_models) dvfs::validate_kind(dvfs::kind_from_json(m));

    std::vector<std::string> pnames;
    for (auto p : c.policies) pnames.push_back(dvfs::to_string(p));
    c.effective = {{"seed", c.seed},
                   {"out", c.out.string()},
                   {"device", c.device.string()},
                   {"dataset",
                    {{"path", c.dataset.string()},
                     {"n_apps", c.n_apps},
                     {"noise_sigma", c.ranges.noise_sigma},
                     {"archetypes", archetypes_json(c.ranges.archetypes)}}},
                   {"models",
                    {{"dir", c.models.string()},
                     {"primary", c.primary_model},
                     {"compare", c.compare_models},
                     {"test_fraction", c.test_fraction}}},
                   {"knowledge_base", {{"k", c.k ? json(*c.k) : json(nullptr)}}},
                   {"workload",
                    {{"n_jobs", c.n_jobs},
                     {"arrival_rate", c.arrival_rate},
                     {"slack_factor", {c.slack.lo, c.slack.hi}},
                     {"n_devices", c.n_devices},
                     {"queue", queue},
                     {"switch_overhead_ms", c.sim.switch_overhead_ms}}},
                   {"policies", pnames},
                   {"serve", {{"host", c.host}, {"port", c.port}}}};
    return c;
}

void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError(what + " path is not configured");
    if (!fs::exists(p)) throw ConfigError("missing " + what + ": " + p.string());
}

dvfs::DeviceSpec load_device_checked(const RunConfig& c) {
    if (c.device.empty()) throw ConfigError("no device spec configured (config 'device' or --device)");
    require_file(c.device, "device spec");
    return dvfs::load_device(c.device);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw dvfs::Error("cannot create directory " + dir.string());
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dvfs::Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw dvfs::Error("failed writing " + path.string());
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Wall-clock data lives only under "metadata" so every other output byte is
/// a function of (config, seed).
void write_manifest(const RunConfig& c, const std::string& command) {
    ensure_dir(c.out);
    write_json(c.out / ("run_" + command + ".json"),
               {{"command", command}, {"config", c.effective}, {"metadata", {{"started_at", utc_now()}}}});
}

double mean_target(const dvfs::Dataset& d, dvfs::Target t) {
    double s = 0.0;
    for (const auto& r : d.records) s += t == dvfs::Target::Energy ? r.measurement.energy : r.measurement.exec_time;
    return d.records.empty() ? 0.0 : s / static_cast<double>(d.records.size());
}

fs::path model_path(const RunConfig& c, dvfs::Target t) { return c.models / (dvfs::to_string(t) + ".json"); }
fs::path kb_path(const RunConfig& c) { return c.models / "knowledge_base.json"; }

// --- commands ----------------------------------------------------------

int cmd_synth(const RunConfig& c) {
    const auto device = load_device_checked(c);
    auto data = dvfs::generate_synthetic(c.n_apps, device, c.ranges, dvfs::substream_seed(c.seed, "dataset"));
    ensure_dir(c.dataset.parent_path().empty() ? fs::path(".") : c.dataset.parent_path());
    dvfs::write_dataset(data.dataset, c.dataset);
    dvfs::save_oracles(data.oracles, dvfs::oracle_path_for(c.dataset));
    write_manifest(c, "synth");
    std::cout << "wrote " << data.dataset.records.size() << " records (" << c.n_apps << " apps x "
              << device.supported_configs.size() << " configs) to " << c.dataset.string() << "\n";
    return 0;
}

json eval_entry(const std::string& kind, dvfs::Target t, const dvfs::EvalReport& r, double mean) {
    json j = dvfs::report_to_json(r);
    j["kind"] = kind;
    j["target"] = dvfs::to_string(t);
    j["relative_rmse"] = mean > 0 ? r.rmse / mean : 0.0;
    return j;
}

int cmd_train(const RunConfig& c) {
    const auto device = load_device_checked(c);
    require_file(c.dataset, "dataset");
    const auto raw = dvfs::load_dataset(c.dataset, device);
    const auto normalized = dvfs::normalize(raw);
    const auto [train, test] = dvfs::split(normalized, c.test_fraction, dvfs::substream_seed(c.seed, "split"));
    const auto model_seed = dvfs::substream_seed(c.seed, "model");
    const dvfs::Target targets[] = {dvfs::Target::Energy, dvfs::Target::Time};

    json results = json::array();
    std::printf("%-8s %-7s %12s %12s %10s\n", "model", "target", "rmse", "mae", "rel_rmse");
    for (const auto& kind_json : c.compare_models) {
        const auto kind = dvfs::kind_from_json(kind_json);
        for (auto t : targets) {
            const auto m = dvfs::train_model(kind, t, train, model_seed);
            const auto r = dvfs::evaluate_on(m, test);
            const double mean = mean_target(test, t);
            results.push_back(eval_entry(dvfs::kind_name(kind), t, r, mean));
            std::printf("%-8s %-7s %12.4f %12.4f %10.4f\n", dvfs::kind_name(kind).c_str(), dvfs::to_string(t).c_str(),
                        r.rmse, r.mae, mean > 0 ? r.rmse / mean : 0.0);
        }
    }

    ensure_dir(c.models);
    const auto primary = dvfs::kind_from_json(c.primary_model);
    json deployed = json::object();
    for (auto t : targets) {
        const auto m = dvfs::train_model(primary, t, train, model_seed);
        dvfs::save_model(m, model_path(c, t));
        deployed[dvfs::to_string(t)] = {{"path", model_path(c, t).string()},
                                        {"kind", dvfs::kind_name(primary)},
                                        {"fingerprint", m.fingerprint},
                                        {"train_rmse", m.info.train_rmse}};
    }
    const int k = c.k.value_or(dvfs::default_cluster_count(normalized.app_ids().size()));
    const auto kb = dvfs::build_knowledge_base(normalized, k, dvfs::substream_seed(c.seed, "knowledge_base"));
    dvfs::save_knowledge_base(kb, kb_path(c));

    ensure_dir(c.out / "reports");
    write_json(c.out / "reports" / "train_eval.json",
               {{"train_apps", train.app_ids()},
                {"test_apps", test.app_ids()},
                {"results", results},
                {"deployed", deployed},
                {"knowledge_base", {{"path", kb_path(c).string()}, {"k", k}, {"inertia", kb.clusters.inertia}}}});
    write_manifest(c, "train");
    std::cout << "models written to " << c.models.string() << "\n";
    return 0;
}

std::map<dvfs::Target, dvfs::FittedModel> load_models(const RunConfig& c) {
    std::map<dvfs::Target, dvfs::FittedModel> models;
    for (auto t : {dvfs::Target::Energy, dvfs::Target::Time}) {
        require_file(model_path(c, t), dvfs::to_string(t) + " model");
        models.emplace(t, dvfs::load_model(model_path(c, t)));
    }
    return models;
}

int cmd_evaluate(const RunConfig& c) {
    const auto device = load_device_checked(c);
    require_file(c.dataset, "dataset");
    const auto models = load_models(c);
    const auto raw = dvfs::load_dataset(c.dataset, device);
    // Same split as `train`: statistics are recomputed from the full dataset.
    const auto [train, test] = dvfs::split(dvfs::normalize(raw), c.test_fraction, dvfs::substream_seed(c.seed, "split"));
    json results = json::array();
    std::printf("%-8s %-7s %-6s %12s %12s %10s\n", "model", "target", "split", "rmse", "mae", "rel_rmse");
    for (const auto& [t, m] : models) {
        if (!m.input) throw ConfigError("model " + model_path(c, t).string() + " carries no input schema");
        const auto normalized = dvfs::normalize_with(raw, m.input->norm);
        for (const auto& [name, part] : {std::pair<std::string, const dvfs::Dataset*>{"train", &train}, {"test", &test}}) {
            const auto apps = part->app_ids();
            const auto r = dvfs::evaluate_on(m, dvfs::subset(normalized, apps));
            const double mean = mean_target(*part, t);
            json e = eval_entry(dvfs::kind_name(m.kind), t, r, mean);
            e["split"] = name;
            results.push_back(std::move(e));
            std::printf("%-8s %-7s %-6s %12.4f %12.4f %10.4f\n", dvfs::kind_name(m.kind).c_str(),
                        dvfs::to_string(t).c_str(), name.c_str(), r.rmse, r.mae, mean > 0 ? r.rmse / mean : 0.0);
        }
    }
    ensure_dir(c.out / "reports");
    write_json(c.out / "reports" / "evaluate.json", {{"results", results}});
    write_manifest(c, "evaluate");
    return 0;
}

int cmd_simulate(const RunConfig& c) {
    const auto device = load_device_checked(c);
    const auto oracle_file = dvfs::oracle_path_for(c.dataset);
    require_file(oracle_file, "oracle file");
    require_file(kb_path(c), "knowledge base");
    auto models = load_models(c);
    const auto oracles = dvfs::load_oracles(oracle_file);
    auto kb = dvfs::load_knowledge_base(kb_path(c));

    const auto workload = dvfs::generate_workload(oracles, device, c.n_jobs, c.arrival_rate, c.slack,
                                                  dvfs::substream_seed(c.seed, "workload"));
    std::vector<dvfs::DeviceSpec> devices(static_cast<std::size_t>(c.n_devices), device);
    for (std::size_t i = 0; i < devices.size() && devices.size() > 1; ++i) devices[i].name += "#" + std::to_string(i);

    const dvfs::ModelEstimator estimator(std::move(kb), std::move(models.at(dvfs::Target::Energy)),
                                         std::move(models.at(dvfs::Target::Time)));
    const auto comparison = dvfs::compare_policies(workload, devices, c.policies, estimator, oracles, c.sim);

    // Same workload with exact predictions: the best any predictor can do.
    const dvfs::OracleEstimator oracle(oracles);
    const auto bound = dvfs::simulate(workload, devices, dvfs::Policy::DataDriven, oracle, oracles, c.sim);

    const fs::path dir = c.out / "simulation";
    ensure_dir(dir);
    write_json(dir / "workload.json", dvfs::workload_to_json(workload));
    for (const auto& r : comparison.results) {
        write_json(dir / (dvfs::to_string(r.policy) + ".json"), dvfs::result_to_json(r));
        std::ofstream csv(dir / (dvfs::to_string(r.policy) + ".csv"), std::ios::binary);
        if (!csv) throw dvfs::Error("cannot write " + (dir / (dvfs::to_string(r.policy) + ".csv")).string());
        dvfs::write_result_csv(r, csv);
    }
    json summary = dvfs::comparison_to_json(comparison);
    json oracle_json = {{"total_energy", bound.aggregates.total_energy},
                        {"violation_rate", bound.aggregates.violation_rate}};
    for (const auto& r : comparison.results) {
        if (r.policy == dvfs::Policy::DataDriven) continue;
        const double best = dvfs::savings_percent(bound.aggregates.total_energy, r.aggregates.total_energy);
        json e = {{"optimal_savings_percent", best}};
        for (const auto& dd : comparison.results)
            if (dd.policy == dvfs::Policy::DataDriven && best > 0)
                e["captured_fraction"] =
                    dvfs::savings_percent(dd.aggregates.total_energy, r.aggregates.total_energy) / best;
        oracle_json["vs_" + dvfs::to_string(r.policy)] = e;
    }
    summary["oracle_bound"] = oracle_json;
    write_json(dir / "comparison.json", summary);

    std::ostringstream table;
    dvfs::write_summary(comparison, table);
    table << "\noracle-exact data_driven job energy: " << bound.aggregates.total_energy << " J\n";
    {
        std::ofstream txt(dir / "summary.txt", std::ios::binary);
        txt << table.str();
    }
    write_manifest(c, "simulate");
    std::cout << table.str();
    return 0;
}


int cmd_serve(const RunConfig& c) {
    auto models = load_models(c);
    dvfs::ModelServer server(std::move(models));

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    int port = 0;
    try {
        port = server.bind(c.host, c.port);
    } catch (const dvfs::Error& e) {
        std::cerr << "dvfs serve: " << e.what() << "\n";
        return 1;
    }
    std::thread watcher([&server, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.wait_until_ready();
        server.stop();
    });
    std::cout << "listening on " << c.host << ":" << port << std::endl;
    server.run();
    // run() returned: either a signal stopped it or the socket failed.
    if (watcher.joinable()) {
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
    }
    std::cout << "shut down" << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven GPU frequency scaling: synthetic traces, energy/time models, DVFS scheduling"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    std::uint64_t seed = 0;
    app.add_option("--config", o.config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides config)");
    app.add_option("--out", o.out, "Output directory (overrides config)");
    app.add_option("--device", o.device, "Device spec JSON (overrides config)");
    app.add_option("--dataset", o.dataset, "Trace CSV path (overrides config)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic trace + oracle file");
    synth->add_option("--n-apps", o.n_apps, "Number of applications");
    synth->add_option("--noise-sigma", o.noise_sigma, "Relative measurement noise");

    auto* train = app.add_subcommand("train", "Fit energy/time models and the knowledge base");
    train->add_option("--model", o.model, "Deployed model kind (ols|lasso|gbrt)");
    train->add_option("--test-fraction", o.test_fraction, "Held-out app fraction");
    train->add_option("--k", o.k, "Knowledge-base cluster count");

    auto* evaluate = app.add_subcommand("evaluate", "Score saved models on the train/test split");
    evaluate->add_option("--test-fraction", o.test_fraction, "Held-out app fraction");

    auto* simulate = app.add_subcommand("simulate", "Compare policies on a generated workload");
    simulate->add_option("--n-jobs", o.n_jobs, "Jobs in the workload");
    simulate->add_option("--arrival-rate", o.arrival_rate, "Poisson arrival rate (jobs/s)");
    simulate->add_option("--policies", o.policies, "data_driven default_clock max_clock");

    auto* serve = app.add_subcommand("serve", "Serve models over HTTP");
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("--port", o.port, "Bind port (0 = any free port)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*seed_opt) o.seed = seed;

    try {
        const RunConfig config = load_config(o);
        if (synth->parsed()) return cmd_synth(config);
        if (train->parsed()) return cmd_train(config);
        if (evaluate->parsed()) return cmd_evaluate(config);
        if (simulate->parsed()) return cmd_simulate(config);
        if (serve->parsed()) return cmd_serve(config);
    } catch (const ConfigError& e) {
        std::cerr << "dvfs: " << e.what() << "\n";
        return 2;
    } catch (const dvfs::ValidationError& e) {
        std::cerr << "dvfs: invalid input: " << e.what() << "\n";
        return 2;
    } catch (const dvfs::ParseError& e) {
        std::cerr << "dvfs: invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "dvfs: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
