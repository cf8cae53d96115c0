#include "lapsim/json_io.hpp"

#include <cmath>

namespace lapsim {

using nlohmann::json;

namespace {

json matrix_json(const std::vector<std::vector<double>>& m) {
    json out = json::array();
    for (const auto& row : m) out.push_back(row);
    return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

json edge_value_json(const SystemSpec& spec, const std::vector<double>& values) {
    json out = json::array();
    for (int e = 0; e < spec.num_edges(); ++e) {
        out.push_back({{"i", spec.edges[e].cls + 1},
                       {"j", spec.edges[e].pool + 1},
                       {"value", values[e]}});
    }
    return out;
}

} // namespace

json spp_json(const SystemSpec& spec, const SppSolution& sol, const CrpReport& crp) {
    json doc;
    doc["rho"] = sol.rho;
    doc["flows"] = edge_value_json(spec, sol.flows);
    doc["pool_loads"] = sol.pool_loads;
    json basic = json::array();
    for (int e : crp.basic_activities) {
        basic.push_back({{"i", spec.edges[e].cls + 1}, {"j", spec.edges[e].pool + 1}});
    }
    doc["crp"] = {{"basic_activities", basic},
                  {"is_tree", crp.is_tree},
                  {"covers_all", crp.covers_all},
                  {"rho_subcritical", crp.rho_subcritical},
                  {"degeneracy_flag", crp.degeneracy_flag},
                  {"tol", crp.tol}};
    return doc;
}

json priorities_json(const SystemSpec& spec, const PriorityAssignment& pa) {
    json doc;
    json cls = json::array();
    for (int i = 0; i < spec.num_classes; ++i) {
        cls.push_back({{"class", i + 1}, {"rank", pa.class_rank[i]}});
    }
    doc["class_priority"] = cls;
    json edges = json::array();
    for (int e = 0; e < spec.num_edges(); ++e) {
        edges.push_back({{"i", spec.edges[e].cls + 1},
                         {"j", spec.edges[e].pool + 1},
                         {"rank", pa.edge_rank[e]}});
    }
    doc["edge_priority"] = edges;
    json pools = json::array();
    for (int j = 0; j < spec.num_pools; ++j) {
        pools.push_back({{"pool", j + 1}, {"canonical", pa.pool_rank[j]}});
    }
    doc["pool_relabeling"] = pools;
    doc["last_pool"] = pa.last_pool + 1;
    return doc;
}

json equilibrium_json(const SystemSpec& spec, const PriorityAssignment& pa,
                      const EquilibriumPoint& eq, const Assumption3Report& a3) {
    json doc;
    doc["priorities"] = priorities_json(spec, pa);
    doc["routing_rates"] = edge_value_json(spec, eq.routing_rates);
    doc["occupancies"] = edge_value_json(spec, eq.occupancies);
    doc["pool_slack"] = eq.pool_slack;
    json a3doc;
    a3doc["pass"] = a3.pass;
    a3doc["all_positive"] = a3.all_positive;
    a3doc["pools_full"] = a3.pools_full;
    a3doc["last_pool_slack"] = a3.last_pool_slack;
    a3doc["flow_conserved"] = a3.flow_conserved;
    json zero = json::array();
    for (int e : a3.zero_edges) {
        zero.push_back({{"i", spec.edges[e].cls + 1}, {"j", spec.edges[e].pool + 1}});
    }
    a3doc["zero_edges"] = zero;
    json unf = json::array();
    for (int j : a3.unfilled_pools) unf.push_back(j + 1);
    a3doc["unfilled_pools"] = unf;
    doc["assumption3"] = a3doc;
    return doc;
}

json stationary_stats_json(const SystemSpec& spec, const StationaryStats& stats) {
    json doc;
    doc["r"] = stats.r;
    doc["horizon"] = stats.horizon;
    doc["burn_in"] = stats.burn_in;
    doc["batches"] = stats.batches;
    doc["seed"] = stats.seed;
    doc["events"] = stats.events;
    doc["mean_psi_hat"] = edge_value_json(spec, stats.mean_psi_hat);
    doc["mean_abs_q_hat"] = stats.mean_abs_q_hat;
    doc["mean_abs_z_hat"] = stats.mean_abs_z_hat;
    doc["mean_abs_q_raw"] = stats.mean_abs_q_raw;
    doc["mean_abs_z_raw"] = stats.mean_abs_z_raw;
    doc["cov_psi"] = matrix_json(stats.cov_psi);
    doc["se_mean_psi_hat"] = stats.se_mean_psi_hat;
    doc["se_var_psi_hat"] = stats.se_var_psi_hat;
    doc["se_mean_abs_q_hat"] = stats.se_mean_abs_q_hat;
    doc["se_mean_abs_z_hat"] = stats.se_mean_abs_z_hat;
    return doc;
}

json diffusion_json(const SystemSpec& spec, const DiffusionModel& model,
                    const StabilityReport& stability) {
    json doc;
    json labels = json::array();
    for (const Edge& e : spec.edges) labels.push_back({{"i", e.cls + 1}, {"j", e.pool + 1}});
    doc["edge_order"] = labels;
    doc["lift"] = matrix_json(model.lift);
    doc["drift"] = matrix_json(model.drift);
    doc["drift_edge"] = matrix_json(model.drift_edge);
    json noise = json::array();
    for (int i = 0; i < model.noise_diag.size(); ++i) noise.push_back(model.noise_diag(i));
    doc["noise_diag"] = noise;
    json eigs = json::array();
    for (const auto& ev : stability.eigenvalues) {
        eigs.push_back({{"re", ev.real()}, {"im", ev.imag()}});
    }
    doc["eigenvalues"] = eigs;
    doc["max_real_part"] = stability.max_real_part;
    doc["stable"] = stability.stable;
    doc["sigma_x"] = matrix_json(model.sigma_x);
    doc["sigma_psi"] = matrix_json(model.sigma_psi);
    return doc;
}

json sweep_report_json(const SweepReport& report) {
    json doc;
    doc["rho"] = report.rho;
    doc["horizon"] = report.opts.horizon;
    doc["burn_in"] = report.opts.burn_in;
    doc["batches"] = report.opts.batches;
    doc["replicas"] = report.opts.replicas;
    doc["base_seed"] = report.opts.seed;
    doc["nu"] = report.opts.nu;
    json labels = json::array();
    for (const auto& [i, j] : report.edge_labels) labels.push_back({{"i", i}, {"j", j}});
    doc["edge_order"] = labels;
    json pools = json::array();
    for (int j : report.report_pools) pools.push_back(j + 1);
    doc["report_pools"] = pools;
    doc["sigma_psi"] = matrix_json(report.sigma_psi);
    doc["partial"] = report.partial;
    doc["replica_errors"] = report.replica_errors;
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["r"] = row.r;
        r["seeds"] = row.seeds;
        r["events"] = row.events;
        r["runtime_sec"] = row.runtime_sec;
        r["cov_psi"] = matrix_json(row.cov_psi);
        r["rel_frob_err"] = row.rel_frob_err;
        r["se_rel_frob_err"] = row.se_rel_frob_err;
        r["var_psi"] = row.var_psi;
        r["se_var_psi"] = row.se_var_psi;
        r["mean_abs_q_hat"] = row.mean_abs_q_hat;
        r["se_mean_abs_q_hat"] = row.se_mean_abs_q_hat;
        r["mean_abs_z_hat"] = row.mean_abs_z_hat;
        r["se_mean_abs_z_hat"] = row.se_mean_abs_z_hat;
        r["mean_q_nu"] = row.mean_q_nu;
        r["se_mean_q_nu"] = row.se_mean_q_nu;
        r["mean_z_nu"] = row.mean_z_nu;
        r["se_mean_z_nu"] = row.se_mean_z_nu;
        rows.push_back(r);
    }
    doc["rows"] = rows;
    return doc;
}

json convergence_json(const ConvergenceSummary& summary) {
    json doc;
    json trends = json::array();
    for (const auto& t : summary.trends) {
        trends.push_back({{"metric", t.metric},
                          {"values", t.values},
                          {"std_errors", t.std_errors},
                          {"final_value", t.final_value},
                          {"verdict", t.verdict}});
    }
    doc["trends"] = trends;
    doc["any_non_monotone"] = summary.any_non_monotone;
    return doc;
}

json descent_json(const DescentReport& report) {
    json doc;
    doc["r"] = report.r;
    doc["displacement"] = report.displacement;
    doc["hit_threshold"] = report.hit_threshold;
    doc["stay_threshold"] = report.stay_threshold;
    doc["window"] = report.window;
    doc["replicas"] = report.replicas;
    doc["hits"] = report.hits;
    doc["stayed"] = report.stayed;
    doc["hit_frequency"] = report.hit_frequency;
    doc["stay_frequency"] = report.stay_frequency;
    json times = json::array();
    for (double t : report.hit_times) {
        if (std::isnan(t)) {
            times.push_back(nullptr);
        } else {
            times.push_back(t);
        }
    }
    doc["hit_times"] = times;
    doc["mean_hit_time"] = report.mean_hit_time;
    doc["se_hit_time"] = report.se_hit_time;
    doc["mean_hit_time_over_log_r"] = report.mean_hit_time_over_log_r;
    doc["se_hit_time_over_log_r"] = report.se_hit_time_over_log_r;
    return doc;
}

} // namespace lapsim
