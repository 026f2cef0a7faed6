#include "dvfs/scheduler.hpp"

#include <cmath>

#include "dvfs/error.hpp"

namespace dvfs {

void Job::validate() const {
    if (job_id.empty() || app_id.empty()) throw ValidationError("job needs a job_id and an app_id");
    if (!std::isfinite(arrival_time) || !std::isfinite(deadline) || !(deadline > arrival_time))
        throw ValidationError("job '" + job_id + "': deadline must be after arrival");
    for (double v : default_profile)
        if (!std::isfinite(v)) throw ValidationError("job '" + job_id + "': non-finite profile value");
    if (!(time_noise > 0.0) || !(power_noise > 0.0)) throw ValidationError("job '" + job_id + "': noise factors must be > 0");
}

std::string to_string(Policy p) {
    switch (p) {
        case Policy::DataDriven: return "data_driven";
        case Policy::DefaultClock: return "default_clock";
        case Policy::MaxClock: return "max_clock";
    }
    return "unknown";
}

Policy parse_policy(std::string_view s) {
    if (s == "data_driven") return Policy::DataDriven;
    if (s == "default_clock") return Policy::DefaultClock;
    if (s == "max_clock") return Policy::MaxClock;
    throw ValidationError("unknown policy '" + std::string(s) + "' (expected data_driven|default_clock|max_clock)");
}

CandidateTable predict_all_configs(const Job& job, const KnowledgeBase& kb, const FittedModel& energy_model,
                                   const FittedModel& time_model, const DeviceSpec& device) {
    if (energy_model.fingerprint != kb.fingerprint() || time_model.fingerprint != kb.fingerprint())
        throw ValidationError("model fingerprints (" + energy_model.fingerprint + ", " + time_model.fingerprint +
                              ") do not match the knowledge base (" + kb.fingerprint() + ")");
    const MatchResult match = match_application(job.default_profile, kb);
    const auto profile = kb.profile(match.app_id);

    CandidateTable table;
    table.reserve(device.supported_configs.size());
    for (const auto& config : device.supported_configs) {
        const auto x = model_input(profile, config);
        table.push_back({config, predict(time_model, x), predict(energy_model, x)});
    }
    return table;
}

namespace {

const Candidate& row_for(const CandidateTable& table, const FrequencyConfig& config) {
    for (const auto& c : table)
        if (c.config == config) return c;
    throw ValidationError("candidate table has no row for config " + to_string(config));
}

}  // namespace

ScheduleDecision select_frequency(const CandidateTable& table, double start_time, double deadline, Policy policy,
                                  const DeviceSpec& device, std::string job_id) {
    if (table.empty()) throw ValidationError("empty candidate table");
    auto fits = [&](const Candidate& c) { return start_time + c.predicted_time <= deadline; };

    const Candidate* chosen = nullptr;
    bool feasible = false;
    switch (policy) {
        case Policy::DataDriven:
            for (const auto& c : table) {
                if (!fits(c)) continue;
                if (!chosen || c.predicted_energy < chosen->predicted_energy ||
                    (c.predicted_energy == chosen->predicted_energy && c.config < chosen->config))
                    chosen = &c;
            }
            feasible = chosen != nullptr;
            if (!chosen) {
                for (const auto& c : table) {
                    if (!chosen || c.predicted_time < chosen->predicted_time ||
                        (c.predicted_time == chosen->predicted_time && c.config < chosen->config))
                        chosen = &c;
                }
            }
            break;
        case Policy::DefaultClock:
            chosen = &row_for(table, device.default_config);
            feasible = fits(*chosen);
            break;
        case Policy::MaxClock:
            chosen = &row_for(table, device.max_config);
            feasible = fits(*chosen);
            break;
    }
    return {std::move(job_id), chosen->config, chosen->predicted_time, chosen->predicted_energy, feasible, table};
}

ModelEstimator::ModelEstimator(KnowledgeBase kb, FittedModel energy_model, FittedModel time_model)
    : kb_(std::move(kb)), energy_(std::move(energy_model)), time_(std::move(time_model)) {
    if (energy_.target != Target::Energy) throw ValidationError("energy model has target " + to_string(energy_.target));
    if (time_.target != Target::Time) throw ValidationError("time model has target " + to_string(time_.target));
    if (energy_.fingerprint != kb_.fingerprint() || time_.fingerprint != kb_.fingerprint())
        throw ValidationError("model fingerprints do not match the knowledge base");
}

CandidateTable ModelEstimator::estimate(const Job& job, const DeviceSpec& device) const {
    return predict_all_configs(job, kb_, energy_, time_, device);
}

OracleEstimator::OracleEstimator(std::span<const OracleSpec> apps) {
    for (const auto& a : apps) apps_.emplace(a.app_id, a);
}

CandidateTable OracleEstimator::estimate(const Job& job, const DeviceSpec& device) const {
    auto it = apps_.find(job.app_id);
    if (it == apps_.end()) throw ValidationError("no ground truth for app '" + job.app_id + "'");
    CandidateTable table;
    table.reserve(device.supported_configs.size());
    for (const auto& config : device.supported_configs) {
        const Measurement m = noisy_measurement(it->second, config, device, job.time_noise, job.power_noise);
        table.push_back({config, m.exec_time, m.energy});
    }
    return table;
}

}  // namespace dvfs
