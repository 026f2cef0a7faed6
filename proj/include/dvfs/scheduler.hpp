#pragma once

// Frequency-selection policies: the data-driven deadline-aware policy and
// the default-clock / max-clock baselines.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dvfs/matcher.hpp"
#include "dvfs/predictors.hpp"
#include "dvfs/trace.hpp"

namespace dvfs {

struct Job {
    std::string job_id;
    std::string app_id;
    double arrival_time = 0.0;  // s
    double deadline = 0.0;      // s, absolute
    std::vector<double> default_profile;  // raw features measured at the default clock
    // Frozen execution-variance draws applied to the ground truth.
    double time_noise = 1.0;
    double power_noise = 1.0;

    void validate() const;
};

struct Candidate {
    FrequencyConfig config;
    double predicted_time = 0.0;
    double predicted_energy = 0.0;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

using CandidateTable = std::vector<Candidate>;

enum class Policy { DataDriven, DefaultClock, MaxClock };

std::string to_string(Policy p);  // "data_driven" | "default_clock" | "max_clock"
Policy parse_policy(std::string_view s);

struct ScheduleDecision {
    std::string job_id;
    FrequencyConfig chosen_config;
    double predicted_time = 0.0;
    double predicted_energy = 0.0;
    bool feasible = false;
    CandidateTable candidate_table;
};

/// Matches the job against the knowledge base and queries both models with
/// (matched profile ++ candidate clocks), one row per supported config.
CandidateTable predict_all_configs(const Job& job, const KnowledgeBase& kb, const FittedModel& energy_model,
                                   const FittedModel& time_model, const DeviceSpec& device);

/// DataDriven: cheapest predicted energy among configs that finish by the
/// deadline (ties: lower core clock, then lower memory clock); when none
/// does, the fastest config flagged infeasible. Baselines: the device's
/// default / max config with feasibility read from the table.
ScheduleDecision select_frequency(const CandidateTable& table, double start_time, double deadline, Policy policy,
                                  const DeviceSpec& device, std::string job_id = {});

/// Source of candidate tables for the simulator.
class CandidateEstimator {
public:
    virtual ~CandidateEstimator() = default;
    virtual CandidateTable estimate(const Job& job, const DeviceSpec& device) const = 0;
};

/// Trained models + knowledge base.
class ModelEstimator final : public CandidateEstimator {
public:
    ModelEstimator(KnowledgeBase kb, FittedModel energy_model, FittedModel time_model);
    CandidateTable estimate(const Job& job, const DeviceSpec& device) const override;

    const KnowledgeBase& knowledge_base() const { return kb_; }
    const FittedModel& energy_model() const { return energy_; }
    const FittedModel& time_model() const { return time_; }

private:
    KnowledgeBase kb_;
    FittedModel energy_;
    FittedModel time_;
};

/// Exact ground truth, including each job's frozen noise draw. Bounds what
/// any predictor can achieve.
class OracleEstimator final : public CandidateEstimator {
public:
    explicit OracleEstimator(std::span<const OracleSpec> apps);
    CandidateTable estimate(const Job& job, const DeviceSpec& device) const override;

private:
    std::map<std::string, OracleSpec, std::less<>> apps_;
};

}  // namespace dvfs
