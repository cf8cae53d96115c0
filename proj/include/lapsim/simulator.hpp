#ifndef LAPSIM_SIMULATOR_HPP
#define LAPSIM_SIMULATOR_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lapsim/lap.hpp"
#include "lapsim/model.hpp"
#include "lapsim/rng.hpp"

namespace lapsim {

/// Markov state of the r-th system: per-edge busy-server counts, per-class
/// queues, clock. Pool j holds floor(beta_j * r) servers.
struct SimState {
    int r = 0;
    std::vector<long long> busy;       // Psi_ij per canonical edge
    std::vector<long long> queue;      // Q_i per class
    std::vector<long long> capacity;   // N_j per pool
    std::vector<long long> pool_busy;  // sum_i Psi_ij per pool
    double clock = 0.0;

    bool pool_full(int j) const { return pool_busy[j] >= capacity[j]; }
};

enum class EventKind { Arrival, Completion };

struct StepResult {
    double holding_time = 0.0;
    EventKind kind = EventKind::Arrival;
    int cls = -1;   // arriving class, or class of the completed service
    int edge = -1;  // completion edge; -1 for arrivals
    int routed_pool = -1;   // arrival destination pool, -1 if queued
    int refill_class = -1;  // class moved from queue into the freed server
};

/// Diffusion-scaled deviations from the equilibrium point.
struct ScaledDeviation {
    std::vector<double> psi_hat; // per edge: (Psi - psi* r) / sqrt(r)
    std::vector<double> q_hat;   // per class: Q / sqrt(r)
    std::vector<double> z_hat;   // per pool: (sum_i Psi_ij - r sum_i psi*_ij) / sqrt(r)
};

struct SimOptions {
    double horizon = 2000.0;
    double burn_in = 200.0;
    std::uint64_t seed = 1;
    int batches = 20;
    bool empty_start = false;
};

/// Time-averaged statistics of the diffusion-scaled state over
/// [burn_in, horizon], with batch-means standard errors.
struct StationaryStats {
    int r = 0;
    double horizon = 0.0;
    double burn_in = 0.0;
    int batches = 0;
    std::uint64_t seed = 0;
    std::uint64_t events = 0;

    std::vector<double> mean_psi_hat;          // per edge
    std::vector<double> mean_abs_q_hat;        // per class
    std::vector<double> mean_abs_z_hat;        // per pool
    std::vector<double> mean_abs_q_raw;        // per class, unscaled Q
    std::vector<double> mean_abs_z_raw;        // per pool, unscaled Z
    std::vector<std::vector<double>> cov_psi;  // |E| x |E| covariance of psi_hat

    std::vector<double> se_mean_psi_hat;
    std::vector<double> se_var_psi_hat;        // SE of the diagonal of cov_psi
    std::vector<double> se_mean_abs_q_hat;
    std::vector<double> se_mean_abs_z_hat;

    // Per-batch summaries (batch-means analysis and sweep aggregation).
    struct Batch {
        double duration = 0.0;
        std::vector<double> mean_psi_hat;
        std::vector<std::vector<double>> second_psi; // E[psi_hat psi_hat^T]
        std::vector<double> mean_abs_q_hat;
        std::vector<double> mean_abs_z_hat;
        std::vector<double> mean_abs_q_raw;
        std::vector<double> mean_abs_z_raw;
    };
    std::vector<Batch> batch;
};

/// Builds the start state: occupancies rounded to the equilibrium point and
/// clipped to pool capacity, queues empty (or everything zero).
SimState initial_state(const SystemSpec& spec, const EquilibriumPoint& eq, int r,
                       bool empty_start = false);

/// LAP routing: the arriving class-i customer takes an idle server in the
/// highest-priority eligible pool; returns -1 (queue) if all are full.
int route_arrival(const SimState& state, const SystemSpec& spec, int cls,
                  const PriorityAssignment& pa);

/// LAP scheduling: a freed pool-j server takes the highest-priority class
/// with a nonempty queue among those it can serve; -1 to idle.
int schedule_completion(const SimState& state, const SystemSpec& spec, int pool,
                        const PriorityAssignment& pa);

/// One CTMC transition: exponential holding time at the total event rate,
/// then an arrival or a service completion chosen proportionally to rate.
StepResult step(SimState& state, const SystemSpec& spec, const PriorityAssignment& pa,
                Rng& rng);

ScaledDeviation scaled_deviation(const SimState& state, const SystemSpec& spec,
                                 const EquilibriumPoint& eq, int r);

/// Euclidean norm of the deviation (Psi - psi* r, Q) in unscaled units.
double deviation_norm(const SimState& state, const SystemSpec& spec,
                      const EquilibriumPoint& eq, int r);

/// Observer for an equally spaced time series of scaled deviations.
struct SeriesObserver {
    double sample_dt = 1.0;
    std::function<void(double t, const ScaledDeviation&)> on_sample;
};

/// Runs the chain to `horizon` model-time units, discarding `burn_in`, and
/// accumulates time-weighted moments of the scaled deviations.
StationaryStats simulate_stationary(const SystemSpec& spec, const PriorityAssignment& pa,
                                    const EquilibriumPoint& eq, int r, const SimOptions& opts,
                                    const SeriesObserver* observer = nullptr);

/// Verifies capacity, queue nonnegativity, and the LAP no-starvation
/// invariant (a customer waits only if every eligible pool is full).
/// Returns an empty string when the state is consistent.
std::string state_invariant_violation(const SimState& state, const SystemSpec& spec);

} // namespace lapsim

#endif
