#include <doctest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "lapsim/simulator.hpp"
#include "lapsim/rng.hpp"
#include "oracles.hpp"

using namespace lapsim;
using namespace lapsim::testing;

namespace {

struct Sys {
    SystemSpec spec;
    PriorityAssignment pa;
    EquilibriumPoint eq;
};

Sys make(SystemSpec spec) {
    Sys s;
    s.spec = std::move(spec);
    s.pa = assign_priorities(s.spec);
    s.eq = compute_equilibrium(s.spec, s.pa);
    return s;
}

} // namespace

TEST_CASE("routing prefers the higher-priority pool") {
    Sys s = make(make_w1());
    SimState st = initial_state(s.spec, s.eq, 10, /*empty_start=*/true);
    // Psi_11 = 5, Psi_12 = 3, Psi_22 = 3: both pools have idle servers.
    st.busy = {5, 3, 3};
    st.pool_busy = {5, 6};
    CHECK(route_arrival(st, s.spec, 0, s.pa) == 0);

    // pool 1 full: the class-1 arrival overflows to pool 2
    st.busy = {10, 3, 3};
    st.pool_busy = {10, 6};
    CHECK(route_arrival(st, s.spec, 0, s.pa) == 1);

    // both pools full: queue
    st.busy = {10, 8, 12};
    st.pool_busy = {10, 20};
    CHECK(route_arrival(st, s.spec, 0, s.pa) == -1);
}

TEST_CASE("scheduling picks the highest-priority nonempty queue") {
    Sys s = make(make_w1());
    SimState st = initial_state(s.spec, s.eq, 10, true);
    st.queue = {2, 5};
    CHECK(schedule_completion(st, s.spec, 1, s.pa) == 0);
    st.queue = {0, 5};
    CHECK(schedule_completion(st, s.spec, 1, s.pa) == 1);
    st.queue = {0, 0};
    CHECK(schedule_completion(st, s.spec, 1, s.pa) == -1);
    // pool 1 serves only class 1
    st.queue = {0, 5};
    CHECK(schedule_completion(st, s.spec, 0, s.pa) == -1);
}

TEST_CASE("single-edge step transitions") {
    Sys s = make(make_single_edge());
    // r = 4 gives N = 4
    SimState st = initial_state(s.spec, s.eq, 4, true);
    REQUIRE(st.capacity[0] == 4);

    // arrival with idle servers present busies one more server
    st.busy = {2};
    st.pool_busy = {2};
    st.queue = {0};
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        SimState before = st;
        StepResult res = step(st, s.spec, s.pa, rng);
        CHECK(state_invariant_violation(st, s.spec).empty());
        if (res.kind == EventKind::Arrival && before.pool_busy[0] < 4) {
            CHECK(st.busy[0] == before.busy[0] + 1);
        }
        if (res.kind == EventKind::Completion && before.queue[0] > 0) {
            // freed server immediately takes a queued customer
            CHECK(st.busy[0] == before.busy[0]);
            CHECK(st.queue[0] == before.queue[0] - 1);
        }
    }
}

TEST_CASE("completion on a full pool transfers a queued customer") {
    Sys s = make(make_w1());
    SimState st = initial_state(s.spec, s.eq, 10, true);
    // pool 2 full (N2 = 20), class-2 queue nonempty
    st.busy = {10, 8, 12};
    st.pool_busy = {10, 20};
    st.queue = {0, 1};
    REQUIRE(state_invariant_violation(st, s.spec).empty());

    // force the completion of edge (1,2) by driving the chain until that
    // event fires; the refill must pick class 2 (class-1 queue is empty)
    Rng rng(2);
    for (int k = 0; k < 10000; ++k) {
        SimState before = st;
        StepResult res = step(st, s.spec, s.pa, rng);
        CHECK(state_invariant_violation(st, s.spec).empty());
        if (res.kind == EventKind::Completion && res.edge == s.spec.edge_index(0, 1) &&
            before.queue[1] > 0 && before.queue[0] == 0 && before.pool_full(1)) {
            CHECK(res.refill_class == 1);
            CHECK(st.busy[s.spec.edge_index(1, 1)] ==
                  before.busy[s.spec.edge_index(1, 1)] + 1);
            CHECK(st.busy[s.spec.edge_index(0, 1)] ==
                  before.busy[s.spec.edge_index(0, 1)] - 1);
            CHECK(st.queue[1] == before.queue[1] - 1);
            return;
        }
    }
    FAIL("the targeted completion never occurred");
}

TEST_CASE("conservation: every event moves X by at most one") {
    Rng seed_rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        Sys s = make(random_assumption3_spec(seed_rng));
        SimState st = initial_state(s.spec, s.eq, 50, false);
        Rng rng(1000 + trial);
        auto total_of = [&](int i) {
            long long t = st.queue[i];
            for (int e : s.spec.tree.edges_of_class[i]) t += st.busy[e];
            return t;
        };
        for (int k = 0; k < 5000; ++k) {
            std::vector<long long> before;
            for (int i = 0; i < s.spec.num_classes; ++i) before.push_back(total_of(i));
            StepResult res = step(st, s.spec, s.pa, rng);
            REQUIRE(state_invariant_violation(st, s.spec).empty());
            for (int i = 0; i < s.spec.num_classes; ++i) {
                long long delta = total_of(i) - before[i];
                if (res.cls == i && res.kind == EventKind::Arrival) {
                    CHECK(delta == 1);
                } else if (res.cls == i && res.kind == EventKind::Completion) {
                    CHECK(delta == -1);
                } else {
                    CHECK(delta == 0);
                }
            }
        }
    }
}

TEST_CASE("scaled deviations") {
    Sys s = make(make_single_edge());
    SimState st = initial_state(s.spec, s.eq, 100, false);
    REQUIRE(st.busy[0] == 50);
    st.busy[0] = 55;
    st.pool_busy[0] = 55;
    ScaledDeviation dev = scaled_deviation(st, s.spec, s.eq, 100);
    CHECK(dev.psi_hat[0] == doctest::Approx(0.5).epsilon(1e-12));

    Sys w = make(make_w1());
    SimState wst = initial_state(w.spec, w.eq, 100, false);
    // rounded equilibrium start: every deviation within one rounding unit
    ScaledDeviation wdev = scaled_deviation(wst, w.spec, w.eq, 100);
    for (double v : wdev.psi_hat) CHECK(std::abs(v) <= 0.1 + 1e-12);
    // pool 1 exactly full at the equilibrium: zero idleness deviation
    wst.busy = {100, 80, 80};
    wst.pool_busy = {100, 160};
    wdev = scaled_deviation(wst, w.spec, w.eq, 100);
    CHECK(wdev.z_hat[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("deterministic stats for a fixed seed") {
    Sys s = make(make_w1());
    SimOptions opts;
    opts.horizon = 50.0;
    opts.burn_in = 5.0;
    opts.seed = 99;
    opts.batches = 5;
    StationaryStats a = simulate_stationary(s.spec, s.pa, s.eq, 50, opts);
    StationaryStats b = simulate_stationary(s.spec, s.pa, s.eq, 50, opts);
    CHECK(a.events == b.events);
    REQUIRE(a.cov_psi.size() == b.cov_psi.size());
    for (size_t e = 0; e < a.cov_psi.size(); ++e) {
        for (size_t f = 0; f < a.cov_psi.size(); ++f) {
            CHECK(a.cov_psi[e][f] == b.cov_psi[e][f]);
        }
    }
    CHECK(a.mean_abs_q_hat == b.mean_abs_q_hat);
    CHECK(a.mean_abs_z_hat == b.mean_abs_z_hat);
}

TEST_CASE("pool capacities take the floor of beta r") {
    SystemSpec raw;
    raw.num_classes = 1;
    raw.num_pools = 1;
    raw.arrival_rates = {0.5};
    raw.pool_sizes = {1.5};
    raw.edges = {{0, 0, 1.0}};
    Sys s = make(validate_spec(std::move(raw)));
    SimState st = initial_state(s.spec, s.eq, 7, true);
    CHECK(st.capacity[0] == 10); // floor(1.5 * 7)
}

TEST_CASE("series observer samples on a fixed grid") {
    Sys s = make(make_single_edge());
    SimOptions opts;
    opts.horizon = 10.0;
    opts.burn_in = 1.0;
    opts.seed = 3;
    opts.batches = 2;
    std::vector<double> times;
    SeriesObserver obs;
    obs.sample_dt = 1.0;
    obs.on_sample = [&](double t, const ScaledDeviation& dev) {
        times.push_back(t);
        CHECK(dev.psi_hat.size() == 1);
    };
    simulate_stationary(s.spec, s.pa, s.eq, 20, opts, &obs);
    REQUIRE(times.size() == 10); // t = 0, 1, ..., 9
    for (size_t k = 0; k < times.size(); ++k) {
        CHECK(times[k] == doctest::Approx(static_cast<double>(k)));
    }
}

TEST_CASE("invalid horizon") {
    Sys s = make(make_single_edge());
    SimOptions opts;
    opts.horizon = 100.0;
    opts.burn_in = 100.0;
    CHECK_THROWS_AS(simulate_stationary(s.spec, s.pa, s.eq, 10, opts), Error);
}

TEST_CASE("covariance is symmetric and nearly psd") {
    Sys s = make(make_w1());
    SimOptions opts;
    opts.horizon = 200.0;
    opts.burn_in = 20.0;
    opts.seed = 5;
    StationaryStats stats = simulate_stationary(s.spec, s.pa, s.eq, 100, opts);
    const int n = static_cast<int>(stats.cov_psi.size());
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            CHECK(stats.cov_psi[a][b] == doctest::Approx(stats.cov_psi[b][a]).epsilon(1e-12));
        }
    }
    // Gershgorin-style check is too loose; use the quadratic form on a few
    // deterministic directions instead.
    Rng rng(6);
    for (int probe = 0; probe < 20; ++probe) {
        std::vector<double> v(n);
        for (double& x : v) x = rng.normal();
        double quad = 0.0;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) quad += v[a] * stats.cov_psi[a][b] * v[b];
        }
        CHECK(quad >= -1e-10);
    }
}

// Exact-chain cross-check, small version of the acceptance criterion: the
// single-edge system is a birth-death chain in the total customer count.
TEST_CASE("empirical law matches the exact birth-death solution") {
    Sys s = make(make_single_edge());
    const int r = 3; // N = 3 servers, arrivals at 1.5, load 0.5
    SimState st = initial_state(s.spec, s.eq, r, false);
    Rng rng(12345);

    std::map<long long, double> occupation;
    double total_time = 0.0;
    const int events = 200000;
    for (int k = 0; k < events; ++k) {
        long long x = st.busy[0] + st.queue[0];
        StepResult res = step(st, s.spec, s.pa, rng);
        occupation[x] += res.holding_time;
        total_time += res.holding_time;
    }

    auto pi = birth_death_stationary(1.5, 1.0, 3, 3 + 100);
    double tv = 0.0;
    for (int x = 0; x <= 3 + 20; ++x) {
        double emp = occupation.count(x) ? occupation[x] / total_time : 0.0;
        tv += std::abs(emp - pi[x]);
    }
    CHECK(tv / 2.0 <= 0.05);
}

TEST_CASE("w1 queues and idleness are small at r=400") {
    // Pilot run at horizon 2000 gives mean |Z_hat_1| ~ 0.12 and mean |Q_hat|
    // below 1e-3; the 0.2 threshold has a wide margin at this horizon too.
    Sys s = make(make_w1());
    SimOptions opts;
    opts.horizon = 1000.0;
    opts.burn_in = 100.0;
    opts.seed = 17;
    StationaryStats stats = simulate_stationary(s.spec, s.pa, s.eq, 400, opts);
    CHECK(std::abs(stats.mean_abs_q_hat[0]) < 0.2);
    CHECK(std::abs(stats.mean_abs_q_hat[1]) < 0.2);
    CHECK(std::abs(stats.mean_abs_z_hat[0]) < 0.2);
}

TEST_CASE("single edge variance matches lambda over mu") {
    Sys s = make(make_single_edge());
    SimOptions opts;
    opts.horizon = 2000.0;
    opts.burn_in = 200.0;
    opts.seed = 7;
    opts.batches = 20;
    StationaryStats stats = simulate_stationary(s.spec, s.pa, s.eq, 400, opts);
    double var = stats.cov_psi[0][0];
    double se = stats.se_var_psi_hat[0];
    CHECK(std::abs(var - 0.5) <= 3.0 * se);
}
