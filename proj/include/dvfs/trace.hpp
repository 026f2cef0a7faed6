#pragma once

// Dataset schema, trace CSV I/O, normalization, grouped splitting, and the
// synthetic ground-truth oracle that stands in for real GPU profiling.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dvfs {

/// One (memory clock, core clock) operating point, both in MHz.
struct FrequencyConfig {
    int mem_clock = 0;
    int core_clock = 0;

    friend bool operator==(const FrequencyConfig&, const FrequencyConfig&) = default;
    /// Ordered by core clock first, then memory clock.
    friend std::strong_ordering operator<=>(const FrequencyConfig& a, const FrequencyConfig& b) {
        if (auto c = a.core_clock <=> b.core_clock; c != 0) return c;
        return a.mem_clock <=> b.mem_clock;
    }
};

std::string to_string(const FrequencyConfig& c);

struct DeviceSpec {
    std::string name;
    std::vector<FrequencyConfig> supported_configs;  // ascending, unique
    FrequencyConfig default_config;
    FrequencyConfig max_config;
    double idle_power = 0.0;  // W

    bool supports(const FrequencyConfig& c) const;
    /// Throws ValidationError if any invariant is broken.
    void validate() const;
};

/// Sorts and de-duplicates the config list, then validates.
DeviceSpec make_device(std::string name, std::vector<FrequencyConfig> configs,
                       FrequencyConfig default_config, double idle_power);

DeviceSpec load_device(const std::filesystem::path& path);
void save_device(const DeviceSpec& device, const std::filesystem::path& path);
nlohmann::json device_to_json(const DeviceSpec& device);
DeviceSpec device_from_json(const nlohmann::json& j);

/// Desk-scale stand-in for a Tesla P100-class board: 7 core clocks x 2
/// memory clocks.
DeviceSpec reference_device();

struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<std::string> units;  // may be empty when read from a trace header

    std::size_t size() const { return names.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    void validate() const;
    friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) { return a.names == b.names; }
};

/// The 16-feature schema produced by the synthetic generator.
FeatureSchema synthetic_schema();

struct Measurement {
    double avg_power = 0.0;  // W
    double exec_time = 0.0;  // s
    double energy = 0.0;     // J

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Relative tolerance allowed between energy and avg_power * exec_time.
inline constexpr double kEnergyConsistencyTolerance = 0.05;

void validate_measurement(const Measurement& m);

struct TrainingRecord {
    std::string app_id;
    FrequencyConfig config;
    std::vector<double> features;
    Measurement measurement;

    friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

/// Per-feature z-score statistics (population std; 1 for constant columns).
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::vector<double> apply(std::span<const double> raw) const;
    std::vector<double> invert(std::span<const double> normalized) const;
    friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct Dataset {
    FeatureSchema schema;
    DeviceSpec device;
    std::vector<TrainingRecord> records;
    std::optional<NormStats> norm_stats;

    /// Distinct app ids in lexicographic order.
    std::vector<std::string> app_ids() const;
    /// Record of `app_id` measured at `config`, if present.
    const TrainingRecord* find(std::string_view app_id, const FrequencyConfig& config) const;
    void validate() const;
};

// --- trace CSV ---------------------------------------------------------

Dataset parse_dataset(std::istream& in, const DeviceSpec& device);
Dataset load_dataset(const std::filesystem::path& path, const DeviceSpec& device);
void write_dataset(const Dataset& d, std::ostream& out);
void write_dataset(const Dataset& d, const std::filesystem::path& path);

// --- preprocessing -----------------------------------------------------

/// Z-scores every feature column. If `d` is already normalized the new
/// statistics are composed with the old ones so `denormalize` still
/// recovers the raw features.
Dataset normalize(const Dataset& d);
Dataset denormalize(const Dataset& d);
/// Applies existing statistics (e.g. a model's) to a raw dataset.
Dataset normalize_with(const Dataset& raw, const NormStats& stats);

/// Grouped by app id: every record of an app lands on one side.
std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed);

/// Keeps the records whose app id is in `apps`.
Dataset subset(const Dataset& d, std::span<const std::string> apps);

// --- synthetic oracle --------------------------------------------------

struct OracleSpec {
    std::string app_id;
    double compute_work = 0.0;     // Mcycles: time contribution is compute_work / core_clock
    double mem_work = 0.0;         // Mcycles: time contribution is mem_work / mem_clock
    double fixed_time = 0.0;       // s
    double dyn_power_coeff = 0.0;  // W / MHz^3
    double mem_power_coeff = 0.0;  // W / MHz
    double noise_sigma = 0.0;      // relative std-dev of the lognormal noise
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const OracleSpec&, const OracleSpec&) = default;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampling ranges for one family of applications.
struct AppArchetype {
    std::string name;
    Range compute_work;
    Range mem_work;
    Range fixed_time;
    Range dyn_power_coeff;
    Range mem_power_coeff;
};

/// Compute-bound, memory-bound and balanced kernels.
std::vector<AppArchetype> default_archetypes();

/// App i draws its latent coefficients uniformly from archetype i mod n.
struct OracleRanges {
    std::vector<AppArchetype> archetypes = default_archetypes();
    double noise_sigma = 0.05;
};

/// Noiseless ground truth for one application at one config.
Measurement oracle_eval(const OracleSpec& spec, const FrequencyConfig& config, const DeviceSpec& device);

/// Oracle measurement scaled by frozen multiplicative noise factors.
Measurement noisy_measurement(const OracleSpec& spec, const FrequencyConfig& config, const DeviceSpec& device,
                              double time_factor, double power_factor);

/// Profiling counters an application would expose when run at `config`.
/// Aligned to synthetic_schema().
std::vector<double> oracle_features(const OracleSpec& spec, const FrequencyConfig& config, const DeviceSpec& device);

struct SyntheticData {
    Dataset dataset;
    std::vector<OracleSpec> oracles;
};

SyntheticData generate_synthetic(int n_apps, const DeviceSpec& device, const OracleRanges& ranges,
                                 std::uint64_t seed);

nlohmann::json oracles_to_json(std::span<const OracleSpec> oracles);
std::vector<OracleSpec> oracles_from_json(const nlohmann::json& j);
void save_oracles(std::span<const OracleSpec> oracles, const std::filesystem::path& path);
std::vector<OracleSpec> load_oracles(const std::filesystem::path& path);

/// `<dataset>.oracle.json` beside a dataset path (`x/trace.csv` -> `x/trace.oracle.json`).
std::filesystem::path oracle_path_for(const std::filesystem::path& dataset_path);

}  // namespace dvfs
