#include "dvfs/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dvfs/error.hpp"
#include "dvfs/rng.hpp"

namespace dvfs {

namespace {

constexpr std::string_view kLeadColumns[] = {"app_id", "mem_clock", "core_clock"};
constexpr std::string_view kTailColumns[] = {"avg_power", "exec_time", "energy"};

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string row_label(std::size_t row, std::size_t line) {
    return "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
}

}  // namespace

std::string to_string(const FrequencyConfig& c) {
    return "(" + std::to_string(c.mem_clock) + "," + std::to_string(c.core_clock) + ")";
}

// --- DeviceSpec --------------------------------------------------------

bool DeviceSpec::supports(const FrequencyConfig& c) const {
    return std::binary_search(supported_configs.begin(), supported_configs.end(), c);
}

void DeviceSpec::validate() const {
    if (supported_configs.empty()) throw ValidationError("device '" + name + "' has no supported configs");
    for (const auto& c : supported_configs) {
        if (c.mem_clock <= 0 || c.core_clock <= 0)
            throw ValidationError("device '" + name + "' has non-positive clock in config " + to_string(c));
    }
    if (!std::is_sorted(supported_configs.begin(), supported_configs.end()) ||
        std::adjacent_find(supported_configs.begin(), supported_configs.end()) != supported_configs.end())
        throw ValidationError("device '" + name + "' configs must be ascending and unique");
    if (!supports(default_config))
        throw ValidationError("device '" + name + "' default config " + to_string(default_config) + " is not supported");
    if (!supports(max_config))
        throw ValidationError("device '" + name + "' max config " + to_string(max_config) + " is not supported");
    if (max_config != supported_configs.back())
        throw ValidationError("device '" + name + "' max config must have the highest core clock (then memory clock)");
    if (!(idle_power >= 0.0) || !std::isfinite(idle_power))
        throw ValidationError("device '" + name + "' idle_power must be finite and >= 0");
}

DeviceSpec make_device(std::string name, std::vector<FrequencyConfig> configs, FrequencyConfig default_config,
                       double idle_power) {
    std::sort(configs.begin(), configs.end());
    configs.erase(std::unique(configs.begin(), configs.end()), configs.end());
    DeviceSpec d;
    d.name = std::move(name);
    d.default_config = default_config;
    d.max_config = configs.empty() ? FrequencyConfig{} : configs.back();
    d.supported_configs = std::move(configs);
    d.idle_power = idle_power;
    d.validate();
    return d;
}

DeviceSpec reference_device() {
    std::vector<FrequencyConfig> configs;
    for (int mem : {715, 877})
        for (int core : {544, 683, 810, 936, 1063, 1189, 1328}) configs.push_back({mem, core});
    return make_device("p100-desk", std::move(configs), {877, 1189}, 40.0);
}

namespace {

nlohmann::json config_to_json(const FrequencyConfig& c) {
    return {{"mem_clock", c.mem_clock}, {"core_clock", c.core_clock}};
}

FrequencyConfig config_from_json(const nlohmann::json& j) {
    return {j.at("mem_clock").get<int>(), j.at("core_clock").get<int>()};
}

}  // namespace

nlohmann::json device_to_json(const DeviceSpec& device) {
    nlohmann::json configs = nlohmann::json::array();
    for (const auto& c : device.supported_configs) configs.push_back(config_to_json(c));
    return {{"name", device.name},
            {"supported_configs", configs},
            {"default_config", config_to_json(device.default_config)},
            {"max_config", config_to_json(device.max_config)},
            {"idle_power", device.idle_power}};
}

DeviceSpec device_from_json(const nlohmann::json& j) {
    try {
        DeviceSpec d;
        d.name = j.at("name").get<std::string>();
        for (const auto& c : j.at("supported_configs")) d.supported_configs.push_back(config_from_json(c));
        std::sort(d.supported_configs.begin(), d.supported_configs.end());
        d.default_config = config_from_json(j.at("default_config"));
        d.max_config = config_from_json(j.at("max_config"));
        d.idle_power = j.at("idle_power").get<double>();
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("device spec: ") + e.what());
    }
}

DeviceSpec load_device(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open device spec " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("device spec " + path.string() + ": " + e.what());
    }
    return device_from_json(j);
}

void save_device(const DeviceSpec& device, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << device_to_json(device).dump(2) << '\n';
}

// --- FeatureSchema -----------------------------------------------------

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    return std::nullopt;
}

void FeatureSchema::validate() const {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty()) throw ValidationError("empty feature name");
        if (!seen.insert(n).second) throw ValidationError("duplicate feature name '" + n + "'");
    }
    if (!units.empty() && units.size() != names.size())
        throw ValidationError("feature units do not align with names");
}

// --- Measurement -------------------------------------------------------

void validate_measurement(const Measurement& m) {
    if (!std::isfinite(m.avg_power) || !std::isfinite(m.exec_time) || !std::isfinite(m.energy))
        throw ValidationError("measurement contains non-finite values");
    if (m.avg_power <= 0 || m.exec_time <= 0 || m.energy <= 0)
        throw ValidationError("measurement values must be positive");
    double expected = m.avg_power * m.exec_time;
    if (std::abs(m.energy - expected) > kEnergyConsistencyTolerance * m.energy) {
        std::ostringstream msg;
        msg << "energy " << m.energy << " J inconsistent with avg_power x exec_time = " << expected << " J";
        throw ValidationError(msg.str());
    }
}

// --- NormStats ---------------------------------------------------------

std::vector<double> NormStats::apply(std::span<const double> raw) const {
    if (raw.size() != mean.size()) throw ValidationError("feature vector length does not match normalization stats");
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - mean[j]) / stddev[j];
    return out;
}

std::vector<double> NormStats::invert(std::span<const double> normalized) const {
    if (normalized.size() != mean.size())
        throw ValidationError("feature vector length does not match normalization stats");
    std::vector<double> out(normalized.size());
    for (std::size_t j = 0; j < normalized.size(); ++j) out[j] = normalized[j] * stddev[j] + mean[j];
    return out;
}

// --- Dataset -----------------------------------------------------------

std::vector<std::string> Dataset::app_ids() const {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.app_id);
    return {ids.begin(), ids.end()};
}

const TrainingRecord* Dataset::find(std::string_view app_id, const FrequencyConfig& config) const {
    for (const auto& r : records)
        if (r.app_id == app_id && r.config == config) return &r;
    return nullptr;
}

void Dataset::validate() const {
    schema.validate();
    device.validate();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::string where = "record " + std::to_string(i + 1) + " (app '" + r.app_id + "')";
        if (r.app_id.empty()) throw ValidationError(where + ": empty app_id");
        if (r.config.mem_clock <= 0 || r.config.core_clock <= 0)
            throw ValidationError(where + ": clocks must be positive, got " + to_string(r.config));
        if (!device.supports(r.config))
            throw ValidationError(where + ": config " + to_string(r.config) + " not supported by device '" +
                                  device.name + "'");
        if (r.features.size() != schema.size())
            throw ValidationError(where + ": feature vector length " + std::to_string(r.features.size()) +
                                  " != schema length " + std::to_string(schema.size()));
        for (double v : r.features)
            if (!std::isfinite(v)) throw ValidationError(where + ": non-finite feature value");
        try {
            validate_measurement(r.measurement);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    if (norm_stats && (norm_stats->mean.size() != schema.size() || norm_stats->stddev.size() != schema.size()))
        throw ValidationError("normalization stats do not align with schema");
}

// --- CSV ---------------------------------------------------------------

Dataset parse_dataset(std::istream& in, const DeviceSpec& device) {
    device.validate();
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty trace file: missing header row");
    auto header = split_csv(trim(line));
    const std::size_t lead = std::size(kLeadColumns), tail = std::size(kTailColumns);
    if (header.size() < lead + tail) throw ParseError("trace header has too few columns");
    for (std::size_t i = 0; i < lead; ++i)
        if (trim(header[i]) != kLeadColumns[i])
            throw ParseError("trace header column " + std::to_string(i + 1) + " must be '" +
                             std::string(kLeadColumns[i]) + "'");
    for (std::size_t i = 0; i < tail; ++i)
        if (trim(header[header.size() - tail + i]) != kTailColumns[i])
            throw ParseError("trace header must end with avg_power,exec_time,energy");

    Dataset d;
    d.device = device;
    for (std::size_t i = lead; i < header.size() - tail; ++i) d.schema.names.emplace_back(trim(header[i]));
    try {
        d.schema.validate();
    } catch (const ValidationError& e) {
        throw ParseError(std::string("trace header: ") + e.what());
    }

    std::size_t line_no = 1, row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++row;
        auto fields = split_csv(trim(line));
        if (fields.size() != header.size())
            throw ParseError(row_label(row, line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        TrainingRecord r;
        r.app_id = std::string(trim(fields[0]));
        if (r.app_id.empty()) throw ParseError(row_label(row, line_no) + ": empty app_id");
        if (!parse_number(fields[1], r.config.mem_clock) || !parse_number(fields[2], r.config.core_clock))
            throw ParseError(row_label(row, line_no) + ": clocks must be integers");
        for (std::size_t i = lead; i < header.size() - tail; ++i) {
            double v;
            if (!parse_number(fields[i], v))
                throw ParseError(row_label(row, line_no) + ": bad number in column '" + std::string(header[i]) + "'");
            r.features.push_back(v);
        }
        std::size_t t = header.size() - tail;
        if (!parse_number(fields[t], r.measurement.avg_power) || !parse_number(fields[t + 1], r.measurement.exec_time) ||
            !parse_number(fields[t + 2], r.measurement.energy))
            throw ParseError(row_label(row, line_no) + ": bad measurement value");

        if (r.config.mem_clock <= 0 || r.config.core_clock <= 0)
            throw ValidationError(row_label(row, line_no) + ": clocks must be positive, got " + to_string(r.config));
        if (!device.supports(r.config))
            throw ValidationError(row_label(row, line_no) + ": config " + to_string(r.config) +
                                  " not supported by device '" + device.name + "'");
        for (double v : r.features)
            if (!std::isfinite(v)) throw ValidationError(row_label(row, line_no) + ": non-finite feature value");
        try {
            validate_measurement(r.measurement);
        } catch (const ValidationError& e) {
            throw ValidationError(row_label(row, line_no) + ": " + e.what());
        }
        d.records.push_back(std::move(r));
    }
    d.validate();
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, const DeviceSpec& device) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file " + path.string());
    return parse_dataset(in, device);
}

void write_dataset(const Dataset& d, std::ostream& out) {
    out << "app_id,mem_clock,core_clock";
    for (const auto& n : d.schema.names) out << ',' << n;
    out << ",avg_power,exec_time,energy\n";
    for (const auto& r : d.records) {
        out << r.app_id << ',' << r.config.mem_clock << ',' << r.config.core_clock;
        for (double v : r.features) out << ',' << format_double(v);
        out << ',' << format_double(r.measurement.avg_power) << ',' << format_double(r.measurement.exec_time) << ','
            << format_double(r.measurement.energy) << '\n';
    }
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write trace file " + path.string());
    write_dataset(d, out);
    if (!out) throw Error("failed writing trace file " + path.string());
}

// --- preprocessing -----------------------------------------------------

Dataset normalize(const Dataset& d) {
    if (d.records.size() < 2) throw ValidationError("normalize needs at least 2 records");
    const std::size_t n = d.records.size(), dim = d.schema.size();
    NormStats stats;
    stats.mean.assign(dim, 0.0);
    stats.stddev.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        double sum = 0.0;
        for (const auto& r : d.records) sum += r.features[j];
        double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& r : d.records) ss += (r.features[j] - mean) * (r.features[j] - mean);
        double sd = std::sqrt(ss / static_cast<double>(n));
        // Columns with no spread (relative to their magnitude) are treated as constant.
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) sd = 1.0;
        stats.mean[j] = mean;
        stats.stddev[j] = sd;
    }

    Dataset out = d;
    for (auto& r : out.records) r.features = stats.apply(r.features);
    if (d.norm_stats) {
        NormStats composed;
        composed.mean.resize(dim);
        composed.stddev.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            composed.mean[j] = d.norm_stats->mean[j] + d.norm_stats->stddev[j] * stats.mean[j];
            composed.stddev[j] = d.norm_stats->stddev[j] * stats.stddev[j];
        }
        out.norm_stats = std::move(composed);
    } else {
        out.norm_stats = std::move(stats);
    }
    return out;
}

Dataset denormalize(const Dataset& d) {
    if (!d.norm_stats) return d;
    Dataset out = d;
    for (auto& r : out.records) r.features = d.norm_stats->invert(r.features);
    out.norm_stats.reset();
    return out;
}

Dataset normalize_with(const Dataset& raw, const NormStats& stats) {
    if (raw.norm_stats) throw ValidationError("dataset is already normalized");
    if (stats.mean.size() != raw.schema.size() || stats.stddev.size() != raw.schema.size())
        throw ValidationError("normalization stats do not align with the dataset schema");
    Dataset out = raw;
    for (auto& r : out.records) r.features = stats.apply(r.features);
    out.norm_stats = stats;
    return out;
}

Dataset subset(const Dataset& d, std::span<const std::string> apps) {
    std::set<std::string> keep(apps.begin(), apps.end());
    Dataset out;
    out.schema = d.schema;
    out.device = d.device;
    out.norm_stats = d.norm_stats;
    for (const auto& r : d.records)
        if (keep.count(r.app_id)) out.records.push_back(r);
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (d.records.empty()) throw ValidationError("cannot split an empty dataset");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must be in (0, 1)");
    auto apps = d.app_ids();
    if (apps.size() < 2) throw ValidationError("split needs at least 2 distinct app ids");

    Rng rng(seed);
    for (std::size_t i = apps.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(apps[i], apps[pick(rng)]);
    }
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(apps.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, apps.size() - 1);

    std::vector<std::string> test_apps(apps.begin(), apps.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::string> train_apps(apps.begin() + static_cast<std::ptrdiff_t>(n_test), apps.end());
    return {subset(d, train_apps), subset(d, test_apps)};
}

// --- oracle JSON -------------------------------------------------------

nlohmann::json oracles_to_json(std::span<const OracleSpec> oracles) {
    nlohmann::json apps = nlohmann::json::array();
    for (const auto& o : oracles) {
        apps.push_back({{"app_id", o.app_id},
                        {"compute_work", o.compute_work},
                        {"mem_work", o.mem_work},
                        {"fixed_time", o.fixed_time},
                        {"dyn_power_coeff", o.dyn_power_coeff},
                        {"mem_power_coeff", o.mem_power_coeff},
                        {"noise_sigma", o.noise_sigma},
                        {"seed", o.seed}});
    }
    return {{"format", "dvfs-oracle"}, {"version", 1}, {"apps", apps}};
}

std::vector<OracleSpec> oracles_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "dvfs-oracle") throw ParseError("not an oracle file");
        if (j.at("version").get<int>() != 1) throw ParseError("unsupported oracle file version");
        std::vector<OracleSpec> out;
        for (const auto& a : j.at("apps")) {
            OracleSpec o;
            o.app_id = a.at("app_id").get<std::string>();
            o.compute_work = a.at("compute_work").get<double>();
            o.mem_work = a.at("mem_work").get<double>();
            o.fixed_time = a.at("fixed_time").get<double>();
            o.dyn_power_coeff = a.at("dyn_power_coeff").get<double>();
            o.mem_power_coeff = a.at("mem_power_coeff").get<double>();
            o.noise_sigma = a.at("noise_sigma").get<double>();
            o.seed = a.at("seed").get<std::uint64_t>();
            o.validate();
            out.push_back(std::move(o));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("oracle file: ") + e.what());
    }
}

void save_oracles(std::span<const OracleSpec> oracles, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << oracles_to_json(oracles).dump(2) << '\n';
}

std::vector<OracleSpec> load_oracles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open oracle file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("oracle file " + path.string() + ": " + e.what());
    }
    return oracles_from_json(j);
}

std::filesystem::path oracle_path_for(const std::filesystem::path& dataset_path) {
    auto p = dataset_path;
    p.replace_extension(".oracle.json");
    return p;
}

}  // namespace dvfs
