#include "dvfs/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <queue>
#include <set>
#include <tuple>

#include "dvfs/error.hpp"
#include "dvfs/rng.hpp"

namespace dvfs {

void Workload::validate() const {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        jobs[i].validate();
        if (!ids.insert(jobs[i].job_id).second) throw ValidationError("duplicate job id '" + jobs[i].job_id + "'");
        if (i > 0 && jobs[i].arrival_time < jobs[i - 1].arrival_time)
            throw ValidationError("workload arrivals must be non-decreasing");
    }
}

Workload generate_workload(std::span<const OracleSpec> apps, const DeviceSpec& device, int n_jobs,
                           double arrival_rate, Range slack_factor, std::uint64_t seed) {
    if (n_jobs < 1) throw ValidationError("n_jobs must be >= 1");
    if (apps.empty()) throw ValidationError("workload needs at least one application");
    if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate)) throw ValidationError("arrival_rate must be > 0");
    if (!(slack_factor.lo > 0.0) || slack_factor.hi < slack_factor.lo)
        throw ValidationError("slack factor range needs 0 < lo <= hi");
    device.validate();

    Rng rng(seed);
    std::exponential_distribution<double> gap(arrival_rate);
    std::uniform_int_distribution<std::size_t> pick(0, apps.size() - 1);
    std::uniform_real_distribution<double> slack(slack_factor.lo, slack_factor.hi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Workload w;
    w.seed = seed;
    w.arrival_rate = arrival_rate;
    w.slack_factor = slack_factor;
    double t = 0.0;
    for (int i = 0; i < n_jobs; ++i) {
        t += gap(rng);
        const OracleSpec& app = apps[pick(rng)];
        const double s = slack_factor.lo == slack_factor.hi ? slack_factor.lo : slack(rng);
        Job job;
        char id[32];
        std::snprintf(id, sizeof id, "job%05d", i);
        job.job_id = id;
        job.app_id = app.app_id;
        job.arrival_time = t;
        job.deadline = t + s * oracle_eval(app, device.default_config, device).exec_time;
        job.default_profile = oracle_features(app, device.default_config, device);
        if (app.noise_sigma > 0.0) {
            job.time_noise = std::exp(app.noise_sigma * gauss(rng));
            job.power_noise = std::exp(app.noise_sigma * gauss(rng));
        }
        w.jobs.push_back(std::move(job));
    }
    return w;
}

namespace {

enum class EventKind { Completion = 0, Arrival = 1 };

struct Event {
    double time;
    EventKind kind;
    std::size_t seq;
    std::size_t index;  // device for completions, job for arrivals

    bool operator>(const Event& o) const {
        return std::tie(time, kind, seq) > std::tie(o.time, o.kind, o.seq);
    }
};

struct DeviceState {
    bool busy = false;
    FrequencyConfig current;
    std::vector<std::size_t> waiting;
    double busy_time = 0.0;
};

}  // namespace

SimulationResult simulate(const Workload& w, std::span<const DeviceSpec> devices, Policy policy,
                          const CandidateEstimator& estimator, std::span<const OracleSpec> ground_truth,
                          const SimOptions& options) {
    if (devices.empty()) throw ValidationError("simulation needs at least one device");
    for (const auto& d : devices) d.validate();
    if (!(options.switch_overhead_ms >= 0.0)) throw ValidationError("switch overhead must be >= 0");
    w.validate();

    std::map<std::string, const OracleSpec*, std::less<>> truth;
    for (const auto& spec : ground_truth) truth.emplace(spec.app_id, &spec);
    for (const auto& job : w.jobs)
        if (!truth.count(job.app_id))
            throw ValidationError("job '" + job.job_id + "' references unknown app '" + job.app_id + "'");

    SimulationResult result;
    result.policy = policy;
    result.jobs.resize(w.jobs.size());

    std::vector<DeviceState> state(devices.size());
    for (std::size_t d = 0; d < devices.size(); ++d) state[d].current = devices[d].default_config;

    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    std::size_t seq = 0;
    for (std::size_t i = 0; i < w.jobs.size(); ++i) events.push({w.jobs[i].arrival_time, EventKind::Arrival, seq++, i});

    const double overhead = options.switch_overhead_ms / 1000.0;
    auto queue_before = [&](std::size_t a, std::size_t b) {
        const Job& ja = w.jobs[a];
        const Job& jb = w.jobs[b];
        if (options.queue == QueueDiscipline::EarliestDeadlineFirst && ja.deadline != jb.deadline)
            return ja.deadline < jb.deadline;
        if (ja.arrival_time != jb.arrival_time) return ja.arrival_time < jb.arrival_time;
        return a < b;
    };

    auto dispatch = [&](std::size_t d, double now) {
        auto& dev = state[d];
        if (dev.busy || dev.waiting.empty()) return;
        auto it = std::min_element(dev.waiting.begin(), dev.waiting.end(), queue_before);
        const std::size_t j = *it;
        dev.waiting.erase(it);
        const Job& job = w.jobs[j];
        const DeviceSpec& device = devices[d];

        const CandidateTable table = estimator.estimate(job, device);
        ScheduleDecision decision = select_frequency(table, now + overhead, job.deadline, policy, device, job.job_id);
        const double start = decision.chosen_config == dev.current ? now : now + overhead;
        const Measurement actual = noisy_measurement(*truth.at(job.app_id), decision.chosen_config, device,
                                                     job.time_noise, job.power_noise);

        JobRecord& rec = result.jobs[j];
        rec.app_id = job.app_id;
        rec.device = d;
        rec.arrival = job.arrival_time;
        rec.deadline = job.deadline;
        rec.start = start;
        rec.actual_time = actual.exec_time;
        rec.actual_energy = actual.energy;
        rec.finish = start + actual.exec_time;
        rec.deadline_met = rec.finish <= job.deadline;
        rec.normalized_completion = (rec.finish - job.arrival_time) / (job.deadline - job.arrival_time);
        rec.decision = std::move(decision);

        dev.busy = true;
        dev.current = rec.decision.chosen_config;
        dev.busy_time += actual.exec_time;
        events.push({rec.finish, EventKind::Completion, seq++, d});
    };

    while (!events.empty()) {
        const double now = events.top().time;
        while (!events.empty() && events.top().time == now) {
            const Event e = events.top();
            events.pop();
            if (e.kind == EventKind::Completion) {
                state[e.index].busy = false;
            } else {
                state[e.index % devices.size()].waiting.push_back(e.index);
            }
        }
        for (std::size_t d = 0; d < devices.size(); ++d) dispatch(d, now);
    }

    auto& agg = result.aggregates;
    agg.n_jobs = result.jobs.size();
    std::map<std::string, std::pair<double, std::size_t>> per_app;
    double nc_sum = 0.0;
    for (const auto& rec : result.jobs) {
        agg.total_energy += rec.actual_energy;
        agg.makespan = std::max(agg.makespan, rec.finish);
        if (!rec.deadline_met) ++agg.violations;
        if (!rec.decision.feasible) ++agg.infeasible_decisions;
        nc_sum += rec.normalized_completion;
        agg.max_normalized_completion = std::max(agg.max_normalized_completion, rec.normalized_completion);
        auto& acc = per_app[rec.app_id];
        acc.first += rec.actual_energy;
        ++acc.second;
        ++agg.config_histogram[to_string(rec.decision.chosen_config)];
    }
    for (std::size_t d = 0; d < devices.size(); ++d)
        agg.idle_energy += devices[d].idle_power * std::max(0.0, agg.makespan - state[d].busy_time);
    agg.device_energy = agg.total_energy + agg.idle_energy;
    if (agg.n_jobs > 0) {
        const auto n = static_cast<double>(agg.n_jobs);
        agg.mean_job_energy = agg.total_energy / n;
        agg.violation_rate = static_cast<double>(agg.violations) / n;
        agg.mean_normalized_completion = nc_sum / n;
    }
    for (const auto& [app, acc] : per_app) agg.mean_energy_per_app[app] = acc.first / static_cast<double>(acc.second);
    return result;
}

double savings_percent(double energy, double baseline_energy) {
    if (baseline_energy == 0.0) return 0.0;
    return 100.0 * (baseline_energy - energy) / baseline_energy;
}

const SimulationResult& PolicyComparison::result(Policy p) const {
    for (const auto& r : results)
        if (r.policy == p) return r;
    throw ValidationError("comparison has no result for policy " + to_string(p));
}

double PolicyComparison::savings(Policy policy, Policy baseline) const {
    return dvfs::savings_percent(result(policy).aggregates.total_energy, result(baseline).aggregates.total_energy);
}

PolicyComparison compare_policies(const Workload& w, std::span<const DeviceSpec> devices,
                                  std::span<const Policy> policies, const CandidateEstimator& estimator,
                                  std::span<const OracleSpec> ground_truth, const SimOptions& options) {
    if (policies.empty()) throw ValidationError("compare_policies needs at least one policy");
    PolicyComparison c;
    c.results.resize(policies.size());
    std::vector<std::exception_ptr> errors(policies.size());
    const auto n = static_cast<long>(policies.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            c.results[k] = simulate(w, devices, policies[k], estimator, ground_truth, options);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    c.savings_percent.assign(policies.size(), std::vector<double>(policies.size(), 0.0));
    for (std::size_t i = 0; i < policies.size(); ++i)
        for (std::size_t j = 0; j < policies.size(); ++j)
            c.savings_percent[i][j] =
                dvfs::savings_percent(c.results[i].aggregates.total_energy, c.results[j].aggregates.total_energy);
    return c;
}

}  // namespace dvfs
