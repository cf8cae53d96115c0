#include "lapsim/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lapsim {

namespace {

// One leaf-elimination feasibility pass at fixed rho. If feasible, fills
// `flows` (canonical edge order) with a routing that meets every class
// demand within the pool load budgets. Deterministic: among current leaves
// the smallest vertex id goes first (classes 0..I-1, then pools I..I+J-1).
bool route_feasible(const SystemSpec& spec, double rho, std::vector<double>& flows) {
    const int num_cls = spec.num_classes;
    const int num_pool = spec.num_pools;
    const int n = num_cls + num_pool;

    flows.assign(spec.edges.size(), 0.0);
    std::vector<double> demand = spec.arrival_rates;   // remaining per class
    std::vector<double> budget(num_pool, rho);         // remaining load per pool
    std::vector<int> degree(n, 0);
    std::vector<char> alive(n, 1);

    for (const Edge& e : spec.edges) {
        ++degree[e.cls];
        ++degree[num_cls + e.pool];
    }
    std::vector<char> edge_alive(spec.edges.size(), 1);

    const double slack = 1e-12 * std::max(1.0, rho);

    // Incident live edge of a vertex; the tree keeps this O(E) overall for
    // the instance sizes here.
    auto live_edge_of = [&](int v) {
        for (int e = 0; e < spec.num_edges(); ++e) {
            if (!edge_alive[e]) continue;
            if (spec.edges[e].cls == v || num_cls + spec.edges[e].pool == v) return e;
        }
        return -1;
    };

    int remaining = n;
    while (remaining > 1) {
        int leaf = -1;
        for (int v = 0; v < n; ++v) {
            if (alive[v] && degree[v] <= 1) {
                leaf = v;
                break;
            }
        }
        if (leaf < 0) return false; // cannot happen on a tree

        int e = live_edge_of(leaf);
        if (e >= 0) {
            const Edge& ed = spec.edges[e];
            const double unit = spec.pool_sizes[ed.pool] * ed.mu; // flow per unit load
            if (leaf < num_cls) {
                // Leaf class: its whole remaining demand must use this edge.
                double need = demand[leaf] / unit;
                if (need > budget[ed.pool] + slack) return false;
                budget[ed.pool] -= need;
                flows[e] = demand[leaf];
                demand[leaf] = 0.0;
            } else {
                // Leaf pool: absorb as much of the class demand as fits.
                double take = std::min(demand[ed.cls], budget[ed.pool] * unit);
                take = std::max(take, 0.0);
                flows[e] = take;
                demand[ed.cls] -= take;
                budget[ed.pool] = 0.0;
            }
            edge_alive[e] = 0;
            --degree[ed.cls];
            --degree[num_cls + ed.pool];
        }
        alive[leaf] = 0;
        --remaining;
    }

    for (int i = 0; i < num_cls; ++i) {
        if (demand[i] > slack * std::max(1.0, spec.arrival_rates[i])) return false;
    }
    return true;
}

} // namespace

SppSolution solve_spp(const SystemSpec& spec) {
    std::vector<double> flows;

    double hi = 1.0;
    int doublings = 0;
    while (!route_feasible(spec, hi, flows)) {
        hi *= 2.0;
        if (++doublings > 80) {
            throw Error(Errc::NumericalFailure, "no feasible rho below 2^80");
        }
    }
    double lo = 0.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++iter) {
        double mid = 0.5 * (lo + hi);
        if (route_feasible(spec, mid, flows)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (!route_feasible(spec, hi, flows)) {
        throw Error(Errc::NumericalFailure, "bisection lost feasibility");
    }

    SppSolution sol;
    sol.flows = flows;
    sol.rho = hi;
    sol.pool_loads.assign(spec.num_pools, 0.0);
    for (int e = 0; e < spec.num_edges(); ++e) {
        const Edge& ed = spec.edges[e];
        sol.pool_loads[ed.pool] += flows[e] / (spec.pool_sizes[ed.pool] * ed.mu);
    }
    // rho is the max pool load by definition; report the achieved value.
    sol.rho = 0.0;
    for (double l : sol.pool_loads) sol.rho = std::max(sol.rho, l);
    return sol;
}

CrpReport check_crp(const SystemSpec& spec, const SppSolution& sol, double tol) {
    CrpReport rep;
    rep.rho = sol.rho;
    rep.tol = tol;
    rep.rho_subcritical = sol.rho < 1.0 - tol;

    for (int e = 0; e < spec.num_edges(); ++e) {
        if (sol.flows[e] > tol) rep.basic_activities.push_back(e);
    }

    // Spanning check over the vertices the basic activities touch, plus
    // class coverage: every class must carry its demand somewhere.
    const int num_cls = spec.num_classes;
    const int n = num_cls + spec.num_pools;
    std::vector<int> parent(n);
    for (int v = 0; v < n; ++v) parent[v] = v;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<char> touched(n, 0);
    bool cycle = false;
    for (int e : rep.basic_activities) {
        int a = spec.edges[e].cls;
        int b = num_cls + spec.edges[e].pool;
        touched[a] = touched[b] = 1;
        int ra = find(a), rb = find(b);
        if (ra == rb) {
            cycle = true;
        } else {
            parent[ra] = rb;
        }
    }
    int components = 0;
    for (int v = 0; v < n; ++v) {
        if (touched[v] && find(v) == v) ++components;
    }
    bool classes_covered = true;
    for (int i = 0; i < num_cls; ++i) {
        if (!touched[i]) classes_covered = false;
    }
    rep.is_tree = !cycle && components == 1 && classes_covered;
    rep.covers_all = classes_covered &&
                     std::all_of(touched.begin(), touched.end(), [](char t) { return t != 0; });

    bool boundary_flow = false;
    for (double f : sol.flows) {
        if (f <= tol) boundary_flow = true;
    }
    // A pool load within tol of rho but distinguishable from it signals a
    // near-tie. Loads within solver accuracy of rho are binding constraints
    // (the generic CRP case, where every pool load equals rho), not ties.
    const double noise = 1e-11 * std::max(1.0, sol.rho);
    bool near_tied_load = false;
    for (double l : sol.pool_loads) {
        double gap = sol.rho - l;
        if (gap > noise && gap <= tol) near_tied_load = true;
    }
    rep.degeneracy_flag = boundary_flow || near_tied_load;
    return rep;
}

} // namespace lapsim
