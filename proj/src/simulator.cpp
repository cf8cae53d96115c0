#include "lapsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lapsim {

SimState initial_state(const SystemSpec& spec, const EquilibriumPoint& eq, int r,
                       bool empty_start) {
    if (r <= 0) throw Error(Errc::InvalidArgument, "scale r must be positive");
    SimState st;
    st.r = r;
    st.busy.assign(spec.edges.size(), 0);
    st.queue.assign(spec.num_classes, 0);
    st.capacity.assign(spec.num_pools, 0);
    st.pool_busy.assign(spec.num_pools, 0);
    for (int j = 0; j < spec.num_pools; ++j) {
        st.capacity[j] = static_cast<long long>(std::floor(spec.pool_sizes[j] * r));
    }
    if (!empty_start) {
        for (int e = 0; e < spec.num_edges(); ++e) {
            int j = spec.edges[e].pool;
            long long want = std::llround(eq.occupancies[e] * r);
            long long fit = std::min(want, st.capacity[j] - st.pool_busy[j]);
            st.busy[e] = std::max(fit, 0LL);
            st.pool_busy[j] += st.busy[e];
        }
    }
    return st;
}

int route_arrival(const SimState& state, const SystemSpec& spec, int cls,
                  const PriorityAssignment& pa) {
    int best_pool = -1, best_rank = 0;
    const auto& edges = spec.tree.edges_of_class[cls];
    for (int e : edges) {
        int j = spec.edges[e].pool;
        if (state.pool_full(j)) continue;
        if (best_pool < 0 || pa.edge_rank[e] < best_rank) {
            best_pool = j;
            best_rank = pa.edge_rank[e];
        }
    }
    return best_pool;
}

int schedule_completion(const SimState& state, const SystemSpec& spec, int pool,
                        const PriorityAssignment& pa) {
    int best_cls = -1, best_rank = 0;
    for (int i : spec.tree.classes_of_pool[pool]) {
        if (state.queue[i] <= 0) continue;
        if (best_cls < 0 || pa.class_rank[i] < best_rank) {
            best_cls = i;
            best_rank = pa.class_rank[i];
        }
    }
    return best_cls;
}

StepResult step(SimState& state, const SystemSpec& spec, const PriorityAssignment& pa,
                Rng& rng) {
    const int num_cls = spec.num_classes;
    const int num_edges = spec.num_edges();

    double arrival_total = 0.0;
    for (int i = 0; i < num_cls; ++i) {
        arrival_total += spec.arrival_rates[i] * state.r;
    }
    double total = arrival_total;
    for (int e = 0; e < num_edges; ++e) {
        total += spec.edges[e].mu * static_cast<double>(state.busy[e]);
    }
    if (!std::isfinite(total) || total <= 0.0) {
        throw Error(Errc::RateOverflow, "total event rate is not finite and positive");
    }

    StepResult res;
    res.holding_time = rng.exponential(total);
    state.clock += res.holding_time;

    double pick = rng.uniform() * total;
    int cls = -1, edge = -1;
    for (int i = 0; i < num_cls; ++i) {
        pick -= spec.arrival_rates[i] * state.r;
        if (pick < 0.0) {
            cls = i;
            break;
        }
    }
    if (cls < 0) {
        for (int e = 0; e < num_edges; ++e) {
            pick -= spec.edges[e].mu * static_cast<double>(state.busy[e]);
            if (pick < 0.0) {
                edge = e;
                break;
            }
        }
        if (edge < 0) edge = num_edges - 1; // roundoff at the top of the scan
        while (edge >= 0 && state.busy[edge] == 0) --edge;
        if (edge < 0) throw Error(Errc::NumericalFailure, "completion with no busy server");
    }

    if (cls >= 0) {
        res.kind = EventKind::Arrival;
        res.cls = cls;
        int j = route_arrival(state, spec, cls, pa);
        res.routed_pool = j;
        if (j >= 0) {
            int e = spec.edge_index(cls, j);
            ++state.busy[e];
            ++state.pool_busy[j];
        } else {
            ++state.queue[cls];
        }
    } else {
        res.kind = EventKind::Completion;
        res.edge = edge;
        res.cls = spec.edges[edge].cls;
        int j = spec.edges[edge].pool;
        --state.busy[edge];
        --state.pool_busy[j];
        int take = schedule_completion(state, spec, j, pa);
        res.refill_class = take;
        if (take >= 0) {
            int e2 = spec.edge_index(take, j);
            --state.queue[take];
            ++state.busy[e2];
            ++state.pool_busy[j];
        }
    }
    return res;
}

ScaledDeviation scaled_deviation(const SimState& state, const SystemSpec& spec,
                                 const EquilibriumPoint& eq, int r) {
    const double root = std::sqrt(static_cast<double>(r));
    ScaledDeviation dev;
    dev.psi_hat.resize(spec.edges.size());
    dev.q_hat.resize(spec.num_classes);
    dev.z_hat.assign(spec.num_pools, 0.0);
    std::vector<double> eq_pool(spec.num_pools, 0.0);
    for (int e = 0; e < spec.num_edges(); ++e) {
        dev.psi_hat[e] = (static_cast<double>(state.busy[e]) - eq.occupancies[e] * r) / root;
        eq_pool[spec.edges[e].pool] += eq.occupancies[e];
    }
    for (int i = 0; i < spec.num_classes; ++i) {
        dev.q_hat[i] = static_cast<double>(state.queue[i]) / root;
    }
    for (int j = 0; j < spec.num_pools; ++j) {
        dev.z_hat[j] = (static_cast<double>(state.pool_busy[j]) - eq_pool[j] * r) / root;
    }
    return dev;
}

double deviation_norm(const SimState& state, const SystemSpec& spec,
                      const EquilibriumPoint& eq, int r) {
    double sq = 0.0;
    for (int e = 0; e < spec.num_edges(); ++e) {
        double d = static_cast<double>(state.busy[e]) - eq.occupancies[e] * r;
        sq += d * d;
    }
    for (int i = 0; i < spec.num_classes; ++i) {
        double d = static_cast<double>(state.queue[i]);
        sq += d * d;
    }
    return std::sqrt(sq);
}

namespace {

// Time-weighted moment accumulator for one batch window.
struct BatchAcc {
    double duration = 0.0;
    std::vector<double> psi;                  // integral of psi_hat
    std::vector<std::vector<double>> psi2;    // integral of psi_hat outer product
    std::vector<double> abs_q_hat, abs_z_hat, abs_q_raw, abs_z_raw;

    BatchAcc(int num_edges, int num_cls, int num_pool)
        : psi(num_edges, 0.0),
          psi2(num_edges, std::vector<double>(num_edges, 0.0)),
          abs_q_hat(num_cls, 0.0),
          abs_z_hat(num_pool, 0.0),
          abs_q_raw(num_cls, 0.0),
          abs_z_raw(num_pool, 0.0) {}

    void add(const ScaledDeviation& dev, double weight, double root_r) {
        duration += weight;
        const int ne = static_cast<int>(psi.size());
        for (int a = 0; a < ne; ++a) {
            psi[a] += dev.psi_hat[a] * weight;
            for (int b = a; b < ne; ++b) {
                psi2[a][b] += dev.psi_hat[a] * dev.psi_hat[b] * weight;
            }
        }
        for (size_t i = 0; i < abs_q_hat.size(); ++i) {
            abs_q_hat[i] += std::abs(dev.q_hat[i]) * weight;
            abs_q_raw[i] += std::abs(dev.q_hat[i]) * root_r * weight;
        }
        for (size_t j = 0; j < abs_z_hat.size(); ++j) {
            abs_z_hat[j] += std::abs(dev.z_hat[j]) * weight;
            abs_z_raw[j] += std::abs(dev.z_hat[j]) * root_r * weight;
        }
    }

    StationaryStats::Batch finish() const {
        StationaryStats::Batch b;
        b.duration = duration;
        const double inv = duration > 0.0 ? 1.0 / duration : 0.0;
        const int ne = static_cast<int>(psi.size());
        b.mean_psi_hat.resize(ne);
        b.second_psi.assign(ne, std::vector<double>(ne, 0.0));
        for (int a = 0; a < ne; ++a) {
            b.mean_psi_hat[a] = psi[a] * inv;
            for (int bb = a; bb < ne; ++bb) {
                b.second_psi[a][bb] = b.second_psi[bb][a] = psi2[a][bb] * inv;
            }
        }
        auto scale = [inv](const std::vector<double>& v) {
            std::vector<double> out(v.size());
            for (size_t k = 0; k < v.size(); ++k) out[k] = v[k] * inv;
            return out;
        };
        b.mean_abs_q_hat = scale(abs_q_hat);
        b.mean_abs_z_hat = scale(abs_z_hat);
        b.mean_abs_q_raw = scale(abs_q_raw);
        b.mean_abs_z_raw = scale(abs_z_raw);
        return b;
    }
};

double batch_se(const std::vector<double>& values) {
    const size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

} // namespace

StationaryStats simulate_stationary(const SystemSpec& spec, const PriorityAssignment& pa,
                                    const EquilibriumPoint& eq, int r, const SimOptions& opts,
                                    const SeriesObserver* observer) {
    if (opts.burn_in >= opts.horizon) {
        throw Error(Errc::InvalidHorizon, "burn_in must be below horizon");
    }
    if (opts.batches < 1) throw Error(Errc::InvalidArgument, "batches must be >= 1");
    if (observer && !(observer->sample_dt > 0.0)) {
        throw Error(Errc::InvalidArgument, "sample_dt must be positive");
    }

    const int num_edges = spec.num_edges();
    const int num_cls = spec.num_classes;
    const int num_pool = spec.num_pools;
    const double root_r = std::sqrt(static_cast<double>(r));
    const double span = opts.horizon - opts.burn_in;
    const double batch_len = span / opts.batches;

    SimState state = initial_state(spec, eq, r, opts.empty_start);
    Rng rng(opts.seed);

    std::vector<BatchAcc> acc(opts.batches, BatchAcc(num_edges, num_cls, num_pool));
    std::uint64_t events = 0;
    double next_sample = 0.0;

    while (state.clock < opts.horizon) {
        const double t0 = state.clock;
        ScaledDeviation dev = scaled_deviation(state, spec, eq, r);
        step(state, spec, pa, rng);
        ++events;
        double t1 = std::min(state.clock, opts.horizon);

        if (observer) {
            while (next_sample < t1 && next_sample <= opts.horizon) {
                if (next_sample >= t0) observer->on_sample(next_sample, dev);
                next_sample += observer->sample_dt;
            }
        }

        // Spread the holding interval over the batch windows it crosses.
        double from = std::max(t0, opts.burn_in);
        while (from < t1) {
            int b = std::min(static_cast<int>((from - opts.burn_in) / batch_len),
                             opts.batches - 1);
            double window_end = opts.burn_in + (b + 1) * batch_len;
            double to = std::min(t1, b == opts.batches - 1 ? opts.horizon : window_end);
            acc[b].add(dev, to - from, root_r);
            from = to;
        }
    }

    StationaryStats stats;
    stats.r = r;
    stats.horizon = opts.horizon;
    stats.burn_in = opts.burn_in;
    stats.batches = opts.batches;
    stats.seed = opts.seed;
    stats.events = events;
    for (const BatchAcc& a : acc) stats.batch.push_back(a.finish());

    // Whole-window means: duration-weighted combination of the batches.
    double total = 0.0;
    stats.mean_psi_hat.assign(num_edges, 0.0);
    stats.mean_abs_q_hat.assign(num_cls, 0.0);
    stats.mean_abs_z_hat.assign(num_pool, 0.0);
    stats.mean_abs_q_raw.assign(num_cls, 0.0);
    stats.mean_abs_z_raw.assign(num_pool, 0.0);
    std::vector<std::vector<double>> second(num_edges, std::vector<double>(num_edges, 0.0));
    for (const auto& b : stats.batch) {
        total += b.duration;
        for (int e = 0; e < num_edges; ++e) {
            stats.mean_psi_hat[e] += b.mean_psi_hat[e] * b.duration;
            for (int f = 0; f < num_edges; ++f) {
                second[e][f] += b.second_psi[e][f] * b.duration;
            }
        }
        for (int i = 0; i < num_cls; ++i) {
            stats.mean_abs_q_hat[i] += b.mean_abs_q_hat[i] * b.duration;
            stats.mean_abs_q_raw[i] += b.mean_abs_q_raw[i] * b.duration;
        }
        for (int j = 0; j < num_pool; ++j) {
            stats.mean_abs_z_hat[j] += b.mean_abs_z_hat[j] * b.duration;
            stats.mean_abs_z_raw[j] += b.mean_abs_z_raw[j] * b.duration;
        }
    }
    const double inv = total > 0.0 ? 1.0 / total : 0.0;
    for (auto& v : stats.mean_psi_hat) v *= inv;
    for (auto& v : stats.mean_abs_q_hat) v *= inv;
    for (auto& v : stats.mean_abs_z_hat) v *= inv;
    for (auto& v : stats.mean_abs_q_raw) v *= inv;
    for (auto& v : stats.mean_abs_z_raw) v *= inv;

    stats.cov_psi.assign(num_edges, std::vector<double>(num_edges, 0.0));
    for (int e = 0; e < num_edges; ++e) {
        for (int f = 0; f < num_edges; ++f) {
            stats.cov_psi[e][f] =
                second[e][f] * inv - stats.mean_psi_hat[e] * stats.mean_psi_hat[f];
        }
    }

    // Batch-means standard errors.
    stats.se_mean_psi_hat.assign(num_edges, 0.0);
    stats.se_var_psi_hat.assign(num_edges, 0.0);
    stats.se_mean_abs_q_hat.assign(num_cls, 0.0);
    stats.se_mean_abs_z_hat.assign(num_pool, 0.0);
    std::vector<double> tmp(stats.batch.size());
    for (int e = 0; e < num_edges; ++e) {
        for (size_t b = 0; b < stats.batch.size(); ++b) tmp[b] = stats.batch[b].mean_psi_hat[e];
        stats.se_mean_psi_hat[e] = batch_se(tmp);
        for (size_t b = 0; b < stats.batch.size(); ++b) {
            const auto& bb = stats.batch[b];
            tmp[b] = bb.second_psi[e][e] - bb.mean_psi_hat[e] * bb.mean_psi_hat[e];
        }
        stats.se_var_psi_hat[e] = batch_se(tmp);
    }
    for (int i = 0; i < num_cls; ++i) {
        for (size_t b = 0; b < stats.batch.size(); ++b) tmp[b] = stats.batch[b].mean_abs_q_hat[i];
        stats.se_mean_abs_q_hat[i] = batch_se(tmp);
    }
    for (int j = 0; j < num_pool; ++j) {
        for (size_t b = 0; b < stats.batch.size(); ++b) tmp[b] = stats.batch[b].mean_abs_z_hat[j];
        stats.se_mean_abs_z_hat[j] = batch_se(tmp);
    }
    return stats;
}

std::string state_invariant_violation(const SimState& state, const SystemSpec& spec) {
    std::ostringstream os;
    std::vector<long long> occ(spec.num_pools, 0);
    for (int e = 0; e < spec.num_edges(); ++e) {
        if (state.busy[e] < 0) {
            os << "negative busy count on edge " << e;
            return os.str();
        }
        occ[spec.edges[e].pool] += state.busy[e];
    }
    for (int j = 0; j < spec.num_pools; ++j) {
        if (occ[j] != state.pool_busy[j]) {
            os << "pool_busy[" << j << "] out of sync";
            return os.str();
        }
        if (occ[j] > state.capacity[j]) {
            os << "pool " << j << " above capacity";
            return os.str();
        }
    }
    for (int i = 0; i < spec.num_classes; ++i) {
        if (state.queue[i] < 0) {
            os << "negative queue for class " << i;
            return os.str();
        }
        if (state.queue[i] > 0) {
            for (int j : spec.tree.pools_of_class[i]) {
                if (!state.pool_full(j)) {
                    os << "class " << i << " queued while pool " << j << " has idle servers";
                    return os.str();
                }
            }
        }
    }
    return {};
}

} // namespace lapsim
