#include <charconv>
#include <cstdio>

#include "dvfs/simulator.hpp"

namespace dvfs {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

json config_json(const FrequencyConfig& c) { return {{"mem_clock", c.mem_clock}, {"core_clock", c.core_clock}}; }

json aggregates_json(const SimAggregates& a) {
    return {{"n_jobs", a.n_jobs},
            {"total_energy", a.total_energy},
            {"idle_energy", a.idle_energy},
            {"device_energy", a.device_energy},
            {"mean_job_energy", a.mean_job_energy},
            {"mean_energy_per_app", a.mean_energy_per_app},
            {"violations", a.violations},
            {"violation_rate", a.violation_rate},
            {"infeasible_decisions", a.infeasible_decisions},
            {"mean_normalized_completion", a.mean_normalized_completion},
            {"max_normalized_completion", a.max_normalized_completion},
            {"makespan", a.makespan},
            {"config_histogram", a.config_histogram}};
}

}  // namespace

json workload_to_json(const Workload& w) {
    json jobs = json::array();
    for (const auto& j : w.jobs)
        jobs.push_back({{"job_id", j.job_id},
                        {"app_id", j.app_id},
                        {"arrival_time", j.arrival_time},
                        {"deadline", j.deadline},
                        {"time_noise", j.time_noise},
                        {"power_noise", j.power_noise},
                        {"default_profile", j.default_profile}});
    return {{"seed", w.seed},
            {"arrival_rate", w.arrival_rate},
            {"slack_factor", {w.slack_factor.lo, w.slack_factor.hi}},
            {"jobs", std::move(jobs)}};
}

json result_to_json(const SimulationResult& r) {
    json jobs = json::array();
    for (const auto& rec : r.jobs) {
        json table = json::array();
        for (const auto& c : rec.decision.candidate_table)
            table.push_back({{"config", config_json(c.config)},
                             {"predicted_time", c.predicted_time},
                             {"predicted_energy", c.predicted_energy}});
        jobs.push_back({{"job_id", rec.decision.job_id},
                        {"app_id", rec.app_id},
                        {"device", rec.device},
                        {"arrival", rec.arrival},
                        {"deadline", rec.deadline},
                        {"start", rec.start},
                        {"finish", rec.finish},
                        {"actual_time", rec.actual_time},
                        {"actual_energy", rec.actual_energy},
                        {"deadline_met", rec.deadline_met},
                        {"normalized_completion", rec.normalized_completion},
                        {"decision",
                         {{"chosen_config", config_json(rec.decision.chosen_config)},
                          {"predicted_time", rec.decision.predicted_time},
                          {"predicted_energy", rec.decision.predicted_energy},
                          {"feasible", rec.decision.feasible},
                          {"candidate_table", std::move(table)}}}});
    }
    return {{"policy", to_string(r.policy)}, {"aggregates", aggregates_json(r.aggregates)}, {"jobs", std::move(jobs)}};
}

json comparison_to_json(const PolicyComparison& c) {
    json policies = json::array();
    for (const auto& r : c.results)
        policies.push_back({{"policy", to_string(r.policy)}, {"aggregates", aggregates_json(r.aggregates)}});
    json savings = json::array();
    for (std::size_t i = 0; i < c.results.size(); ++i)
        for (std::size_t j = 0; j < c.results.size(); ++j)
            savings.push_back({{"policy", to_string(c.results[i].policy)},
                               {"baseline", to_string(c.results[j].policy)},
                               {"savings_percent", c.savings_percent[i][j]}});
    return {{"policies", std::move(policies)}, {"savings", std::move(savings)}};
}

void write_result_csv(const SimulationResult& r, std::ostream& out) {
    out << "job_id,app_id,device,arrival,deadline,start,finish,mem_clock,core_clock,predicted_time,"
           "predicted_energy,feasible,actual_time,actual_energy,deadline_met,normalized_completion\n";
    for (const auto& rec : r.jobs) {
        const auto& d = rec.decision;
        out << d.job_id << ',' << rec.app_id << ',' << rec.device << ',' << num(rec.arrival) << ','
            << num(rec.deadline) << ',' << num(rec.start) << ',' << num(rec.finish) << ',' << d.chosen_config.mem_clock
            << ',' << d.chosen_config.core_clock << ',' << num(d.predicted_time) << ',' << num(d.predicted_energy)
            << ',' << (d.feasible ? 1 : 0) << ',' << num(rec.actual_time) << ',' << num(rec.actual_energy) << ','
            << (rec.deadline_met ? 1 : 0) << ',' << num(rec.normalized_completion) << '\n';
    }
    // Aggregate row: makespan in `finish`, infeasible count in `feasible`,
    // total job energy in `actual_energy`, violation count in `deadline_met`,
    // mean normalized completion in the last column.
    const auto& a = r.aggregates;
    out << "__aggregate__," << to_string(r.policy) << ",,,,," << num(a.makespan) << ",,,,," << a.infeasible_decisions
        << ",," << num(a.total_energy) << ',' << a.violations << ',' << num(a.mean_normalized_completion) << '\n';
}

void write_summary(const PolicyComparison& c, std::ostream& out) {
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %14s %14s %10s %10s %10s\n", "policy", "job_energy_J", "device_energy_J",
                  "viol_rate", "mean_ncomp", "max_ncomp");
    out << line;
    for (const auto& r : c.results) {
        const auto& a = r.aggregates;
        std::snprintf(line, sizeof line, "%-14s %14.1f %14.1f %10.3f %10.3f %10.3f\n", to_string(r.policy).c_str(),
                      a.total_energy, a.device_energy, a.violation_rate, a.mean_normalized_completion,
                      a.max_normalized_completion);
        out << line;
    }
    out << "\nenergy savings (row vs column, % of column's job energy)\n";
    std::snprintf(line, sizeof line, "%-14s", "");
    out << line;
    for (const auto& r : c.results) {
        std::snprintf(line, sizeof line, " %14s", to_string(r.policy).c_str());
        out << line;
    }
    out << '\n';
    for (std::size_t i = 0; i < c.results.size(); ++i) {
        std::snprintf(line, sizeof line, "%-14s", to_string(c.results[i].policy).c_str());
        out << line;
        for (std::size_t j = 0; j < c.results.size(); ++j) {
            std::snprintf(line, sizeof line, " %13.2f%%", c.savings_percent[i][j]);
            out << line;
        }
        out << '\n';
    }
}

}  // namespace dvfs
