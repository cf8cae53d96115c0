#ifndef LAPSIM_PLANNER_HPP
#define LAPSIM_PLANNER_HPP

#include <vector>

#include "lapsim/model.hpp"

namespace lapsim {

/// Optimal solution of the static planning problem
///   min rho  s.t.  flows >= 0, per-class flows sum to lambda_i,
///                  sum_i flow_ij / (beta_j mu_ij) <= rho for every pool.
struct SppSolution {
    std::vector<double> flows; // lambda0_ij per edge, canonical edge order
    std::vector<double> pool_loads;
    double rho = 0.0;
};

/// Report on the complete-resource-pooling and subcritical-load assumptions.
/// is_tree: the basic activities span a tree covering every class and pool
/// they touch, with every class covered. degeneracy_flag: some flow sits on
/// the boundary or a pool load ties the optimum within tol, so the LP
/// optimum may not be unique (uniqueness itself is not decided here).
struct CrpReport {
    std::vector<int> basic_activities; // edge indices with flow > tol
    bool is_tree = false;
    bool covers_all = false; // basic activities touch every class and pool
    bool rho_subcritical = false;
    bool degeneracy_flag = false;
    double rho = 0.0;
    double tol = 0.0;
};

/// Solves the SPP by bisection on rho. For a fixed rho, routing feasibility
/// on the activity tree is decided exactly by leaf elimination: a leaf class
/// must send all remaining demand over its only edge; a leaf pool absorbs as
/// much of its only class's demand as its load budget allows. Feasibility is
/// monotone in rho, so bisection converges to the optimum; the flows
/// returned are the assignments made at the final feasible rho.
SppSolution solve_spp(const SystemSpec& spec);

CrpReport check_crp(const SystemSpec& spec, const SppSolution& sol, double tol = 1e-9);

} // namespace lapsim

#endif
