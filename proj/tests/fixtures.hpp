#ifndef LAPSIM_TESTS_FIXTURES_HPP
#define LAPSIM_TESTS_FIXTURES_HPP

#include "lapsim/model.hpp"

namespace lapsim::testing {

// Two classes, two pools, W-shaped tree 1-1, 1-2, 2-2.
inline SystemSpec make_w1() {
    SystemSpec raw;
    raw.num_classes = 2;
    raw.num_pools = 2;
    raw.arrival_rates = {1.4, 0.8};
    raw.pool_sizes = {1.0, 2.0};
    raw.edges = {{0, 0, 1.0}, {0, 1, 0.5}, {1, 1, 1.0}};
    return validate_spec(std::move(raw));
}

// One class, one pool, half-loaded.
inline SystemSpec make_single_edge() {
    SystemSpec raw;
    raw.num_classes = 1;
    raw.num_pools = 1;
    raw.arrival_rates = {0.5};
    raw.pool_sizes = {1.0};
    raw.edges = {{0, 0, 1.0}};
    return validate_spec(std::move(raw));
}

// One class fanned out to three pools; pools 1 and 2 fill, pool 3 is slack.
inline SystemSpec make_star3() {
    SystemSpec raw;
    raw.num_classes = 1;
    raw.num_pools = 3;
    raw.arrival_rates = {2.5};
    raw.pool_sizes = {1.0, 1.0, 1.0};
    raw.edges = {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}};
    return validate_spec(std::move(raw));
}

} // namespace lapsim::testing

#endif
