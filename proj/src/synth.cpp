#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dvfs/error.hpp"
#include "dvfs/rng.hpp"
#include "dvfs/trace.hpp"

namespace dvfs {

FeatureSchema synthetic_schema() {
    FeatureSchema s;
    s.names = {"compute_mcycles", "memory_mcycles", "serial_time_s",  "arith_intensity",
               "compute_fraction", "achieved_occupancy", "inst_fp_frac", "inst_int_frac",
               "inst_ldst_frac",   "inst_ctrl_frac",   "sm_power_w",     "dram_power_w",
               "ipc_proxy",        "dram_bw_proxy",    "core_clock_mhz", "mem_clock_mhz"};
    s.units = {"Mcycles", "Mcycles", "s", "ratio", "fraction", "fraction", "fraction", "fraction",
               "fraction", "fraction", "W", "W", "ratio", "Mcycles/s", "MHz", "MHz"};
    return s;
}

std::vector<AppArchetype> default_archetypes() {
    return {
        {"compute_bound", {9500.0, 11500.0}, {600.0, 900.0}, {0.2, 0.4}, {2.2e-8, 2.8e-8}, {0.02, 0.03}},
        {"memory_bound", {800.0, 1200.0}, {7500.0, 9000.0}, {0.2, 0.4}, {2.0e-8, 3.0e-8}, {0.05, 0.06}},
        {"balanced", {5000.0, 6500.0}, {3500.0, 4500.0}, {0.2, 0.4}, {3.5e-8, 4.5e-8}, {0.03, 0.045}},
    };
}

void OracleSpec::validate() const {
    if (app_id.empty()) throw ValidationError("oracle spec needs an app_id");
    for (double v : {compute_work, mem_work, fixed_time, dyn_power_coeff, mem_power_coeff})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("oracle coefficients for '" + app_id + "' must be finite and >= 0");
    if (!(noise_sigma >= 0.0 && noise_sigma <= 0.5))
        throw ValidationError("oracle noise_sigma for '" + app_id + "' must be in [0, 0.5]");
}

Measurement oracle_eval(const OracleSpec& spec, const FrequencyConfig& config, const DeviceSpec& device) {
    const double core = config.core_clock;
    const double mem = config.mem_clock;
    Measurement m;
    m.exec_time = spec.compute_work / core + spec.mem_work / mem + spec.fixed_time;
    m.avg_power = device.idle_power + spec.dyn_power_coeff * core * core * core + spec.mem_power_coeff * mem;
    m.energy = m.avg_power * m.exec_time;
    return m;
}

Measurement noisy_measurement(const OracleSpec& spec, const FrequencyConfig& config, const DeviceSpec& device,
                              double time_factor, double power_factor) {
    Measurement m = oracle_eval(spec, config, device);
    m.exec_time *= time_factor;
    m.avg_power *= power_factor;
    m.energy = m.avg_power * m.exec_time;
    return m;
}

namespace {

struct InstructionMix {
    double occupancy, fp, integer, ldst, ctrl;
};

// Counters that do not enter the oracle but vary per application; drawn
// from the app's own seed so they are a pure function of the spec.
InstructionMix instruction_mix(const OracleSpec& spec) {
    Rng rng(splitmix64(spec.seed));
    std::uniform_real_distribution<double> occ(0.3, 0.95), share(0.2, 1.0);
    InstructionMix mix{};
    mix.occupancy = occ(rng);
    const double total = spec.compute_work + spec.mem_work;
    const double compute_fraction = total > 0 ? spec.compute_work / total : 0.0;
    mix.ldst = 0.1 + 0.5 * (1.0 - compute_fraction);
    double a = share(rng), b = share(rng), c = share(rng);
    double rest = (1.0 - mix.ldst) / (a + b + c);
    mix.fp = a * rest;
    mix.integer = b * rest;
    mix.ctrl = c * rest;
    return mix;
}

}  // namespace

std::vector<double> oracle_features(const OracleSpec& spec, const FrequencyConfig& config, const DeviceSpec& device) {
    const Measurement m = oracle_eval(spec, config, device);
    const InstructionMix mix = instruction_mix(spec);
    const double core = config.core_clock;
    const double mem = config.mem_clock;
    const double total = spec.compute_work + spec.mem_work;
    return {
        spec.compute_work,
        spec.mem_work,
        spec.fixed_time,
        spec.compute_work / std::max(spec.mem_work, 1.0),
        total > 0 ? spec.compute_work / total : 0.0,
        mix.occupancy,
        mix.fp,
        mix.integer,
        mix.ldst,
        mix.ctrl,
        spec.dyn_power_coeff * core * core * core,
        spec.mem_power_coeff * mem,
        spec.compute_work / (m.exec_time * core),
        spec.mem_work / m.exec_time,
        core,
        mem,
    };
}

SyntheticData generate_synthetic(int n_apps, const DeviceSpec& device, const OracleRanges& ranges,
                                 std::uint64_t seed) {
    if (n_apps < 1) throw ValidationError("n_apps must be >= 1");
    device.validate();
    if (device.supported_configs.size() < 2) throw ValidationError("device needs at least 2 supported configs");
    if (ranges.archetypes.empty()) throw ValidationError("at least one app archetype is required");
    for (const auto& a : ranges.archetypes)
        for (const Range* r : {&a.compute_work, &a.mem_work, &a.fixed_time, &a.dyn_power_coeff, &a.mem_power_coeff})
            if (!(r->lo >= 0.0 && r->hi >= r->lo))
                throw ValidationError("archetype '" + a.name + "' ranges must satisfy 0 <= lo <= hi");
    if (!(ranges.noise_sigma >= 0.0 && ranges.noise_sigma <= 0.5))
        throw ValidationError("noise_sigma must be in [0, 0.5]");

    Rng rng(seed);
    auto uniform = [&rng](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
    std::normal_distribution<double> gauss(0.0, 1.0);

    SyntheticData out;
    out.dataset.schema = synthetic_schema();
    out.dataset.device = device;
    const int width = n_apps > 100 ? 3 : 2;
    for (int i = 0; i < n_apps; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "app%0*d", width, i);
        const AppArchetype& type = ranges.archetypes[static_cast<std::size_t>(i) % ranges.archetypes.size()];
        OracleSpec spec;
        spec.app_id = id;
        spec.compute_work = uniform(type.compute_work);
        spec.mem_work = uniform(type.mem_work);
        spec.fixed_time = uniform(type.fixed_time);
        spec.dyn_power_coeff = uniform(type.dyn_power_coeff);
        spec.mem_power_coeff = uniform(type.mem_power_coeff);
        spec.noise_sigma = ranges.noise_sigma;
        spec.seed = rng();
        spec.validate();

        for (const auto& config : device.supported_configs) {
            double time_factor = 1.0, power_factor = 1.0;
            if (spec.noise_sigma > 0.0) {
                time_factor = std::exp(spec.noise_sigma * gauss(rng));
                power_factor = std::exp(spec.noise_sigma * gauss(rng));
            }
            TrainingRecord r;
            r.app_id = spec.app_id;
            r.config = config;
            r.features = oracle_features(spec, config, device);
            r.measurement = noisy_measurement(spec, config, device, time_factor, power_factor);
            out.dataset.records.push_back(std::move(r));
        }
        out.oracles.push_back(std::move(spec));
    }
    out.dataset.validate();
    return out;
}

}  // namespace dvfs
