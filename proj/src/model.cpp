#include "lapsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lapsim {

using nlohmann::json;

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::NotATree: return "NotATree";
        case Errc::IsolatedVertex: return "IsolatedVertex";
        case Errc::NonPositiveRate: return "NonPositiveRate";
        case Errc::UnknownVertex: return "UnknownVertex";
        case Errc::Infeasible: return "Infeasible";
        case Errc::NumericalFailure: return "NumericalFailure";
        case Errc::AssumptionViolated: return "AssumptionViolated";
        case Errc::RateOverflow: return "RateOverflow";
        case Errc::InvalidHorizon: return "InvalidHorizon";
        case Errc::SingularSystem: return "SingularSystem";
        case Errc::EigenFailure: return "EigenFailure";
        case Errc::SingularLyapunov: return "SingularLyapunov";
        case Errc::EmptyReport: return "EmptyReport";
        case Errc::IoError: return "IoError";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

std::string SpecError::format(const std::vector<SpecIssue>& issues) {
    std::ostringstream os;
    os << issues.size() << " spec issue(s)";
    for (const auto& it : issues) {
        os << "; " << errc_name(it.code) << ": " << it.detail;
    }
    return os.str();
}

int SystemSpec::edge_index(int cls, int pool) const {
    Edge probe{cls, pool, 0.0};
    auto cmp = [](const Edge& a, const Edge& b) {
        return a.cls != b.cls ? a.cls < b.cls : a.pool < b.pool;
    };
    auto it = std::lower_bound(edges.begin(), edges.end(), probe, cmp);
    if (it != edges.end() && it->cls == cls && it->pool == pool) {
        return static_cast<int>(it - edges.begin());
    }
    return -1;
}

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Union-find over the I+J vertices (classes 0..I-1, pools I..I+J-1).
struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

} // namespace

std::vector<SpecIssue> check_spec(const SystemSpec& raw) {
    std::vector<SpecIssue> issues;
    auto add = [&](Errc c, std::string d) { issues.push_back({c, std::move(d)}); };

    const int num_cls = raw.num_classes;
    const int num_pool = raw.num_pools;
    if (num_cls <= 0) add(Errc::InvalidArgument, "num_classes must be positive");
    if (num_pool <= 0) add(Errc::InvalidArgument, "num_pools must be positive");
    if (static_cast<int>(raw.arrival_rates.size()) != num_cls) {
        add(Errc::InvalidArgument, "arrival_rates size != num_classes");
    }
    if (static_cast<int>(raw.pool_sizes.size()) != num_pool) {
        add(Errc::InvalidArgument, "pool_sizes size != num_pools");
    }
    if (!issues.empty()) return issues;

    for (int i = 0; i < num_cls; ++i) {
        if (!positive_finite(raw.arrival_rates[i])) {
            add(Errc::NonPositiveRate, "lambda[" + std::to_string(i + 1) + "]");
        }
    }
    for (int j = 0; j < num_pool; ++j) {
        if (!positive_finite(raw.pool_sizes[j])) {
            add(Errc::NonPositiveRate, "beta[" + std::to_string(j + 1) + "]");
        }
    }

    std::vector<int> class_degree(num_cls, 0), pool_degree(num_pool, 0);
    Dsu dsu(num_cls + num_pool);
    int merged = 0;
    bool duplicate = false;
    std::vector<std::vector<bool>> seen(num_cls, std::vector<bool>(num_pool, false));
    for (const Edge& e : raw.edges) {
        if (e.cls < 0 || e.cls >= num_cls || e.pool < 0 || e.pool >= num_pool) {
            add(Errc::UnknownVertex, "edge (" + std::to_string(e.cls + 1) + "," +
                                         std::to_string(e.pool + 1) + ") out of range");
            continue;
        }
        if (seen[e.cls][e.pool]) duplicate = true;
        seen[e.cls][e.pool] = true;
        if (!positive_finite(e.mu)) {
            add(Errc::NonPositiveRate, "mu(" + std::to_string(e.cls + 1) + "," +
                                           std::to_string(e.pool + 1) + ")");
        }
        ++class_degree[e.cls];
        ++pool_degree[e.pool];
        if (dsu.unite(e.cls, num_cls + e.pool)) ++merged;
    }
    if (duplicate) add(Errc::InvalidArgument, "duplicate edge");

    for (int i = 0; i < num_cls; ++i) {
        if (class_degree[i] == 0) {
            add(Errc::IsolatedVertex, "class " + std::to_string(i + 1));
        }
    }
    for (int j = 0; j < num_pool; ++j) {
        if (pool_degree[j] == 0) {
            add(Errc::IsolatedVertex, "pool " + std::to_string(j + 1));
        }
    }

    // Tree on I+J vertices: exactly I+J-1 edges and a single component.
    const int expect = num_cls + num_pool - 1;
    if (static_cast<int>(raw.edges.size()) != expect) {
        add(Errc::NotATree, "expected " + std::to_string(expect) + " edges, got " +
                                std::to_string(raw.edges.size()));
    } else if (merged != expect) {
        add(Errc::NotATree, "activity graph has a cycle or is disconnected");
    }
    return issues;
}

SystemSpec validate_spec(SystemSpec raw) {
    auto issues = check_spec(raw);
    if (!issues.empty()) throw SpecError(std::move(issues));

    std::sort(raw.edges.begin(), raw.edges.end(), [](const Edge& a, const Edge& b) {
        return a.cls != b.cls ? a.cls < b.cls : a.pool < b.pool;
    });

    ActivityTree tree;
    tree.pools_of_class.assign(raw.num_classes, {});
    tree.classes_of_pool.assign(raw.num_pools, {});
    tree.edges_of_class.assign(raw.num_classes, {});
    tree.edges_of_pool.assign(raw.num_pools, {});
    for (int e = 0; e < raw.num_edges(); ++e) {
        const Edge& ed = raw.edges[e];
        tree.pools_of_class[ed.cls].push_back(ed.pool);
        tree.edges_of_class[ed.cls].push_back(e);
        tree.classes_of_pool[ed.pool].push_back(ed.cls);
        tree.edges_of_pool[ed.pool].push_back(e);
    }
    raw.tree = std::move(tree);
    return raw;
}

const std::vector<int>& neighbors_of_class(const SystemSpec& spec, int cls) {
    if (cls < 0 || cls >= spec.num_classes) {
        throw Error(Errc::UnknownVertex, "class " + std::to_string(cls + 1));
    }
    return spec.tree.pools_of_class[cls];
}

const std::vector<int>& neighbors_of_pool(const SystemSpec& spec, int pool) {
    if (pool < 0 || pool >= spec.num_pools) {
        throw Error(Errc::UnknownVertex, "pool " + std::to_string(pool + 1));
    }
    return spec.tree.classes_of_pool[pool];
}

SystemSpec load_spec_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("spec JSON: ") + e.what());
    }
    SystemSpec raw;
    try {
        raw.num_classes = doc.at("classes").get<int>();
        raw.num_pools = doc.at("pools").get<int>();
        raw.arrival_rates = doc.at("lambda").get<std::vector<double>>();
        raw.pool_sizes = doc.at("beta").get<std::vector<double>>();
        for (const auto& e : doc.at("edges")) {
            raw.edges.push_back(
                {e.at("i").get<int>() - 1, e.at("j").get<int>() - 1, e.at("mu").get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("spec JSON: ") + e.what());
    }
    return validate_spec(std::move(raw));
}

SystemSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_spec_json(buf.str());
}

std::string dump_spec_json(const SystemSpec& spec) {
    json doc;
    doc["classes"] = spec.num_classes;
    doc["pools"] = spec.num_pools;
    doc["lambda"] = spec.arrival_rates;
    doc["beta"] = spec.pool_sizes;
    json edges = json::array();
    for (const Edge& e : spec.edges) {
        edges.push_back({{"i", e.cls + 1}, {"j", e.pool + 1}, {"mu", e.mu}});
    }
    doc["edges"] = edges;
    return doc.dump(2);
}

} // namespace lapsim
