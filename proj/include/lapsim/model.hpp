#ifndef LAPSIM_MODEL_HPP
#define LAPSIM_MODEL_HPP

#include <string>
#include <vector>

#include "lapsim/error.hpp"

namespace lapsim {

/// One activity: customer class `cls` served by pool `pool` at rate `mu`.
/// Indices are 0-based internally; the JSON interface is 1-based.
struct Edge {
    int cls = 0;
    int pool = 0;
    double mu = 0.0;
};

/// Bipartite adjacency of the activity tree, plus edge lookup tables.
struct ActivityTree {
    std::vector<std::vector<int>> pools_of_class;  // S(i): pools adjacent to class i
    std::vector<std::vector<int>> classes_of_pool; // C(j): classes adjacent to pool j
    std::vector<std::vector<int>> edges_of_class;  // edge indices, same order as pools_of_class
    std::vector<std::vector<int>> edges_of_pool;   // edge indices, same order as classes_of_pool
};

/// The unscaled service system: I customer classes, J server pools,
/// per-class arrival rates, per-pool sizes, and the activity edges.
/// Edges are kept sorted by (cls, pool) so every matrix downstream has a
/// reproducible row order. Construct via validate_spec(); all operations
/// assume a validated spec.
struct SystemSpec {
    int num_classes = 0;
    int num_pools = 0;
    std::vector<double> arrival_rates; // lambda_i, per unit of r
    std::vector<double> pool_sizes;    // beta_j, per unit of r
    std::vector<Edge> edges;           // sorted by (cls, pool)
    ActivityTree tree;

    int num_edges() const { return static_cast<int>(edges.size()); }

    /// Edge index for (cls, pool), or -1 if the activity is not allowed.
    int edge_index(int cls, int pool) const;
};

/// Structural checks without throwing: returns every violated invariant.
/// Empty result means `raw` is a valid spec.
std::vector<SpecIssue> check_spec(const SystemSpec& raw);

/// Validates and normalizes a candidate spec: sorts edges canonically,
/// builds the adjacency tables, and verifies the tree invariants
/// (connected bipartite tree, no isolated class or pool, positive finite
/// rates). Throws SpecError listing all violations.
SystemSpec validate_spec(SystemSpec raw);

/// Pools adjacent to a class. Throws UnknownVertex for an out-of-range index.
const std::vector<int>& neighbors_of_class(const SystemSpec& spec, int cls);

/// Classes adjacent to a pool. Throws UnknownVertex for an out-of-range index.
const std::vector<int>& neighbors_of_pool(const SystemSpec& spec, int pool);

/// Reads a spec from the JSON document layout
///   {"classes": I, "pools": J, "lambda": [...], "beta": [...],
///    "edges": [{"i": 1, "j": 1, "mu": 1.0}, ...]}
/// (1-based class/pool ids) and validates it.
SystemSpec load_spec_json(const std::string& text);
SystemSpec load_spec_file(const std::string& path);

/// Inverse of load_spec_json (1-based ids, canonical edge order).
std::string dump_spec_json(const SystemSpec& spec);

} // namespace lapsim

#endif
