#ifndef LAPSIM_HARNESS_HPP
#define LAPSIM_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lapsim/diffusion.hpp"
#include "lapsim/lap.hpp"
#include "lapsim/model.hpp"
#include "lapsim/planner.hpp"
#include "lapsim/simulator.hpp"

namespace lapsim {

struct SweepOptions {
    std::vector<int> r_list;
    double horizon = 2000.0;
    double burn_in = -1.0; // negative: use default_burn_in()
    int batches = 20;
    int replicas = 4;
    std::uint64_t seed = 1;
    double nu = 0.25;
    int threads = 0; // 0: LAPSIM_THREADS env, else hardware concurrency
};

/// Scaling-sweep results for one value of r, aggregated over replicas.
struct SweepRow {
    int r = 0;
    std::vector<std::uint64_t> seeds;
    std::uint64_t events = 0;
    double runtime_sec = 0.0;

    std::vector<std::vector<double>> cov_psi; // pooled empirical covariance
    double rel_frob_err = 0.0;                // vs the diffusion sigma_psi
    double se_rel_frob_err = 0.0;             // across replicas

    std::vector<double> var_psi, se_var_psi;              // per edge
    std::vector<double> mean_abs_q_hat, se_mean_abs_q_hat; // per class
    std::vector<double> mean_abs_z_hat, se_mean_abs_z_hat; // per pool j != last
    std::vector<double> mean_q_nu, se_mean_q_nu;           // r^-nu * mean |Q_i|
    std::vector<double> mean_z_nu, se_mean_z_nu;           // r^-nu * mean |Z_j|, j != last
};

struct SweepReport {
    SweepOptions opts;
    std::vector<SweepRow> rows; // sorted by r
    std::vector<std::pair<int, int>> edge_labels; // 1-based (class, pool) per edge
    std::vector<int> report_pools;                // pools j != last (0-based)
    std::vector<std::vector<double>> sigma_psi;   // diffusion reference
    double rho = 0.0;
    bool partial = false; // a replica failed; surviving rows are kept
    std::vector<std::string> replica_errors;
};

struct MetricTrend {
    std::string metric;
    std::vector<double> values;
    std::vector<double> std_errors;
    double final_value = 0.0;
    std::string verdict; // converging | inconclusive | non-monotone | single-point
};

struct ConvergenceSummary {
    std::vector<MetricTrend> trends;
    bool any_non_monotone = false;
};

struct DescentOptions {
    int r = 400;
    double epsilon = 0.25;       // displacement ~ r^(1/2+epsilon)
    int replicas = 50;
    double hit_c = 5.0;          // hit when |F| <= hit_c * sqrt(r)
    double window_c = 5.0;       // hit deadline and stay window: window_c * log r
    double displacement_scale = 1.0;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct DescentReport {
    int r = 0;
    long long displacement = 0;   // extra lowest-priority-class customers
    double hit_threshold = 0.0;
    double stay_threshold = 0.0;  // r^(1/2+epsilon)
    double window = 0.0;
    int replicas = 0;
    int hits = 0;
    int stayed = 0; // among hits: |F| stayed below stay_threshold over the window
    double hit_frequency = 0.0;
    double stay_frequency = 0.0;
    std::vector<double> hit_times; // NaN when no hit
    double mean_hit_time = 0.0;
    double se_hit_time = 0.0;
    double mean_hit_time_over_log_r = 0.0;
    double se_hit_time_over_log_r = 0.0;
};

/// Burn-in heuristic: max(100, 20 / |slowest drift eigenvalue|), the mixing
/// scale of the limiting process near equilibrium.
double default_burn_in(const DiffusionModel& model);

/// Worker count: `requested` if positive, else LAPSIM_THREADS, else
/// hardware concurrency.
int resolve_threads(int requested);

/// Runs simulate_stationary for every (r, replica) cell, in parallel, and
/// aggregates per-r metrics against the diffusion covariance. Requires
/// rho < 1 and Assumption 3; throws AssumptionViolated otherwise.
SweepReport run_sweep(const SystemSpec& spec, const SweepOptions& opts);

/// Monotonicity verdict per tightness metric. Throws EmptyReport.
ConvergenceSummary convergence_metrics(const SweepReport& report);

/// Starts replicas from a state displaced by ~r^(1/2+epsilon) extra
/// lowest-priority customers (routed LAP-consistently: idle servers first,
/// remainder queued) and measures the first time the deviation norm drops
/// to hit_c * sqrt(r), plus whether it stays at sub-displacement scale over
/// a log-r window. A statistical check, not a proof.
DescentReport descent_experiment(const SystemSpec& spec, const DescentOptions& opts);

enum class ReportFormat { Csv, Json, Both };

/// Writes sweep.csv / sweep.json under `dir`. The CSV is in long form,
/// one row per (r, metric): r,metric,value,std_error. Throws IoError.
std::vector<std::string> emit_report(const SweepReport& report, const std::string& dir,
                                     ReportFormat format = ReportFormat::Both);

} // namespace lapsim

#endif
