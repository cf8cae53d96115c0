#ifndef LAPSIM_LAP_HPP
#define LAPSIM_LAP_HPP

#include <vector>

#include "lapsim/model.hpp"

namespace lapsim {

/// Static priorities over customer classes and activities produced by the
/// two leaf-stripping procedures. Ranks are 1-based, 1 = highest priority.
/// class_rank(i) < class_rank(i') implies every edge of i outranks every
/// edge of i'; within a pool, edge order equals class order; the pool of
/// the lowest-priority edge is the one pool left slack at equilibrium.
struct PriorityAssignment {
    std::vector<int> class_rank;    // per original class index
    std::vector<int> edge_rank;     // per canonical edge index
    std::vector<int> class_order;   // original class ids, highest first
    std::vector<int> edge_order;    // edge ids, highest first
    std::vector<int> pool_rank;     // canonical pool numbering, 1-based
    int last_pool = -1;             // pool of the lowest-priority edge

    int lowest_class() const { return class_order.back(); }
    int lowest_edge() const { return edge_order.back(); }
};

/// The fluid operating point under LAP: per-edge routing rates and
/// occupancies from the greedy priority recursion, zero queues.
struct EquilibriumPoint {
    std::vector<double> routing_rates; // lambda_ij per edge
    std::vector<double> occupancies;   // psi*_ij = lambda_ij / mu_ij
    std::vector<double> pool_slack;    // beta_j - sum_i psi*_ij
    std::vector<double> residual_demand; // lambda_i - sum_j lambda_ij (0 when servable)
};

struct Assumption3Report {
    bool pass = false;
    bool all_positive = false;
    bool pools_full = false;     // every pool except last_pool full within tol
    bool last_pool_slack = false;
    bool flow_conserved = false; // residual demand zero within tol
    std::vector<int> zero_edges;     // edges with psi* <= 0
    std::vector<int> unfilled_pools; // pools j != last_pool with slack beyond tol
    double tol = 0.0;
};

/// Options for assign_priorities. By default leaves are stripped with the
/// deterministic tie-break: pool leaves before class leaves, smallest index
/// among equals, and edges to pool leaves picked by smallest pool index.
/// prefer_last_edge, when set to a valid edge index, steers both procedures
/// so that edge ends up with the lowest priority.
struct PriorityOptions {
    int prefer_last_edge = -1;
};

/// Leaf-stripping priority assignment (two passes: classes, then edges).
PriorityAssignment assign_priorities(const SystemSpec& spec, PriorityOptions opts = {});

/// Greedy recursion in increasing edge-priority order:
///   lambda_ij = min(remaining demand of i, mu_ij * remaining space in j).
EquilibriumPoint compute_equilibrium(const SystemSpec& spec, const PriorityAssignment& pa);

/// Pass iff every activity is used at equilibrium (psi* > 0 on all edges),
/// every pool except the last-priority one is exactly full (within tol),
/// and the last pool is strictly slack.
Assumption3Report check_assumption3(const SystemSpec& spec, const PriorityAssignment& pa,
                                    const EquilibriumPoint& eq, double tol = 1e-12);

} // namespace lapsim

#endif
