#pragma once

// Discrete-event execution of a job stream on one or more devices under a
// frequency policy.

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dvfs/scheduler.hpp"
#include "dvfs/trace.hpp"
#include "json.hpp"

namespace dvfs {

struct Workload {
    std::vector<Job> jobs;  // sorted by arrival_time
    std::uint64_t seed = 0;
    double arrival_rate = 0.0;  // jobs / s
    Range slack_factor;

    void validate() const;
};

/// Poisson arrivals; each job picks an app uniformly, gets deadline =
/// arrival + slack * (default-clock oracle time) with slack ~ U[lo, hi], its
/// default-clock profile, and frozen lognormal noise draws.
Workload generate_workload(std::span<const OracleSpec> apps, const DeviceSpec& device, int n_jobs,
                           double arrival_rate, Range slack_factor, std::uint64_t seed);

enum class QueueDiscipline { EarliestDeadlineFirst, Fifo };

struct SimOptions {
    QueueDiscipline queue = QueueDiscipline::EarliestDeadlineFirst;
    double switch_overhead_ms = 0.0;  // charged when a device changes config
};

struct JobRecord {
    ScheduleDecision decision;
    std::string app_id;
    std::size_t device = 0;
    double arrival = 0.0;
    double deadline = 0.0;
    double start = 0.0;
    double finish = 0.0;
    double actual_time = 0.0;
    double actual_energy = 0.0;
    bool deadline_met = false;
    double normalized_completion = 0.0;  // (finish - arrival) / (deadline - arrival)
};

struct SimAggregates {
    std::size_t n_jobs = 0;
    double total_energy = 0.0;   // sum of per-job energy, J
    double idle_energy = 0.0;    // idle power over idle device time up to the makespan, J
    double device_energy = 0.0;  // total_energy + idle_energy
    double mean_job_energy = 0.0;
    std::map<std::string, double> mean_energy_per_app;
    std::size_t violations = 0;
    double violation_rate = 0.0;
    std::size_t infeasible_decisions = 0;
    double mean_normalized_completion = 0.0;
    double max_normalized_completion = 0.0;
    double makespan = 0.0;
    std::map<std::string, std::size_t> config_histogram;  // "(mem,core)" -> jobs
};

struct SimulationResult {
    Policy policy = Policy::DataDriven;
    std::vector<JobRecord> jobs;  // workload order
    SimAggregates aggregates;
};

/// Jobs go to devices round-robin by workload position; each device serves
/// its queue non-preemptively. The policy decides at dispatch time using the
/// estimator; actual time/energy come from the ground truth with the job's
/// frozen noise.
SimulationResult simulate(const Workload& w, std::span<const DeviceSpec> devices, Policy policy,
                          const CandidateEstimator& estimator, std::span<const OracleSpec> ground_truth,
                          const SimOptions& options = {});

struct PolicyComparison {
    std::vector<SimulationResult> results;
    /// savings_percent[i][j] = 100 * (E_j - E_i) / E_j over total_energy.
    std::vector<std::vector<double>> savings_percent;

    const SimulationResult& result(Policy p) const;
    double savings(Policy policy, Policy baseline) const;
};

/// Simulations for each policy run concurrently; each owns its state.
PolicyComparison compare_policies(const Workload& w, std::span<const DeviceSpec> devices,
                                  std::span<const Policy> policies, const CandidateEstimator& estimator,
                                  std::span<const OracleSpec> ground_truth, const SimOptions& options = {});

double savings_percent(double energy, double baseline_energy);

// --- reports -----------------------------------------------------------

nlohmann::json workload_to_json(const Workload& w);
nlohmann::json result_to_json(const SimulationResult& r);
nlohmann::json comparison_to_json(const PolicyComparison& c);
void write_result_csv(const SimulationResult& r, std::ostream& out);
/// Plain-text table: energy per policy, savings, violation rate, normalized completion.
void write_summary(const PolicyComparison& c, std::ostream& out);

}  // namespace dvfs
