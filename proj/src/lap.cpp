#include "lapsim/lap.hpp"

#include <algorithm>
#include <cmath>

namespace lapsim {

namespace {

// Vertex ids: classes 0..I-1, pools I..I+J-1.
struct TreeState {
    std::vector<int> degree;
    std::vector<char> vertex_alive;
    std::vector<char> edge_alive;

    TreeState(const SystemSpec& spec)
        : degree(spec.num_classes + spec.num_pools, 0),
          vertex_alive(spec.num_classes + spec.num_pools, 1),
          edge_alive(spec.edges.size(), 1) {
        for (const Edge& e : spec.edges) {
            ++degree[e.cls];
            ++degree[spec.num_classes + e.pool];
        }
    }

    void drop_edge(const SystemSpec& spec, int e) {
        edge_alive[e] = 0;
        --degree[spec.edges[e].cls];
        --degree[spec.num_classes + spec.edges[e].pool];
    }
};

} // namespace

PriorityAssignment assign_priorities(const SystemSpec& spec, PriorityOptions opts) {
    const int num_cls = spec.num_classes;
    const int num_pool = spec.num_pools;
    const int n = num_cls + num_pool;

    int avoid_class = -1, avoid_pool = -1;
    if (opts.prefer_last_edge >= 0) {
        if (opts.prefer_last_edge >= spec.num_edges()) {
            throw Error(Errc::InvalidArgument, "prefer_last_edge out of range");
        }
        avoid_class = spec.edges[opts.prefer_last_edge].cls;
        avoid_pool = spec.edges[opts.prefer_last_edge].pool;
    }

    PriorityAssignment pa;
    pa.class_rank.assign(num_cls, 0);
    pa.edge_rank.assign(spec.edges.size(), 0);

    // Pass 1: strip leaves; customer-class leaves receive class priorities
    // in strip order. Tie-break: pool leaves first, then smallest index;
    // the preferred-last class is stripped only when nothing else is left.
    {
        TreeState ts(spec);
        int next_rank = 1;
        for (int step = 0; step < n; ++step) {
            int leaf = -1;
            for (int v = num_cls; v < n; ++v) {
                if (ts.vertex_alive[v] && ts.degree[v] <= 1) {
                    leaf = v;
                    break;
                }
            }
            if (leaf < 0) {
                for (int v = 0; v < num_cls; ++v) {
                    if (ts.vertex_alive[v] && ts.degree[v] <= 1 && v != avoid_class) {
                        leaf = v;
                        break;
                    }
                }
            }
            if (leaf < 0 && avoid_class >= 0 && ts.vertex_alive[avoid_class] &&
                ts.degree[avoid_class] <= 1) {
                leaf = avoid_class;
            }
            if (leaf < 0) throw Error(Errc::NotATree, "leaf stripping stalled");

            if (leaf < num_cls) {
                pa.class_rank[leaf] = next_rank++;
                pa.class_order.push_back(leaf);
            }
            ts.vertex_alive[leaf] = 0;
            for (int e = 0; e < spec.num_edges(); ++e) {
                if (!ts.edge_alive[e]) continue;
                if (spec.edges[e].cls == leaf || num_cls + spec.edges[e].pool == leaf) {
                    ts.drop_edge(spec, e);
                }
            }
        }
    }

    // Pass 2: walk classes from highest priority down. A leaf class spends
    // its single edge and leaves; a non-leaf class spends an edge to some
    // pool leaf (smallest pool index, deferring the preferred-last pool).
    {
        TreeState ts(spec);
        int next_rank = 1;
        for (int ci = 0; ci < num_cls; ++ci) {
            const int cls = pa.class_order[ci];
            while (true) {
                int live = 0, only_edge = -1;
                for (int e : spec.tree.edges_of_class[cls]) {
                    if (ts.edge_alive[e]) {
                        ++live;
                        only_edge = e;
                    }
                }
                if (live == 0) break;

                int pick;
                if (live == 1) {
                    pick = only_edge;
                } else {
                    pick = -1;
                    int fallback = -1;
                    for (int e : spec.tree.edges_of_class[cls]) {
                        if (!ts.edge_alive[e]) continue;
                        int pv = num_cls + spec.edges[e].pool;
                        if (ts.degree[pv] != 1) continue;
                        if (cls == avoid_class && spec.edges[e].pool == avoid_pool) {
                            fallback = e;
                            continue;
                        }
                        pick = e;
                        break;
                    }
                    if (pick < 0) pick = fallback;
                    if (pick < 0) {
                        throw Error(Errc::NotATree, "no pool-leaf edge for a non-leaf class");
                    }
                }
                pa.edge_rank[pick] = next_rank++;
                pa.edge_order.push_back(pick);
                ts.drop_edge(spec, pick);
                if (live == 1) break; // class removed together with its last edge
            }
        }
    }

    pa.last_pool = spec.edges[pa.edge_order.back()].pool;
    pa.pool_rank.assign(num_pool, 0);
    int next_pool = 1;
    for (int j = 0; j < num_pool; ++j) {
        if (j != pa.last_pool) pa.pool_rank[j] = next_pool++;
    }
    pa.pool_rank[pa.last_pool] = num_pool;
    return pa;
}

EquilibriumPoint compute_equilibrium(const SystemSpec& spec, const PriorityAssignment& pa) {
    EquilibriumPoint eq;
    eq.routing_rates.assign(spec.edges.size(), 0.0);
    eq.occupancies.assign(spec.edges.size(), 0.0);
    eq.pool_slack = spec.pool_sizes;
    eq.residual_demand = spec.arrival_rates;

    for (int e : pa.edge_order) {
        const Edge& ed = spec.edges[e];
        double space = std::max(eq.pool_slack[ed.pool], 0.0);
        double rate = std::min(eq.residual_demand[ed.cls], ed.mu * space);
        rate = std::max(rate, 0.0);
        eq.routing_rates[e] = rate;
        eq.occupancies[e] = rate / ed.mu;
        eq.pool_slack[ed.pool] -= eq.occupancies[e];
        eq.residual_demand[ed.cls] -= rate;
    }
    return eq;
}

Assumption3Report check_assumption3(const SystemSpec& spec, const PriorityAssignment& pa,
                                    const EquilibriumPoint& eq, double tol) {
    Assumption3Report rep;
    rep.tol = tol;

    rep.all_positive = true;
    for (int e = 0; e < spec.num_edges(); ++e) {
        if (!(eq.occupancies[e] > 0.0)) {
            rep.all_positive = false;
            rep.zero_edges.push_back(e);
        }
    }

    rep.pools_full = true;
    for (int j = 0; j < spec.num_pools; ++j) {
        if (j == pa.last_pool) continue;
        if (std::abs(eq.pool_slack[j]) > tol) {
            rep.pools_full = false;
            rep.unfilled_pools.push_back(j);
        }
    }
    rep.last_pool_slack = eq.pool_slack[pa.last_pool] > tol;

    rep.flow_conserved = true;
    for (double res : eq.residual_demand) {
        if (std::abs(res) > tol) rep.flow_conserved = false;
    }

    rep.pass = rep.all_positive && rep.pools_full && rep.last_pool_slack && rep.flow_conserved;
    return rep;
}

} // namespace lapsim
