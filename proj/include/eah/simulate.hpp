#pragma once

#include <cstdint>
#include <vector>

#include "eah/types.hpp"

namespace eah {

// Hard per-run event cap; exceeding it raises ExplosionError.
inline constexpr std::size_t kEventCap = 1'000'000;

struct SimConfig {
    ModelSpec model;
    double horizon = 0.0;
    EventStream seeds;  // conditioned-on initial events, may be empty
    std::uint64_t rng_seed = 0;
};

void validate(const SimConfig& cfg);

// One individual of the cluster construction together with the subtrees of
// its direct descendants. Child times are strictly greater than the root's.
struct ClusterTree {
    double time = 0.0;
    int node = 0;
    std::vector<ClusterTree> children;

    std::size_t total_size() const;       // events in this tree, root included
    double last_time() const;             // max event time in the tree
    std::size_t first_generation() const { return children.size(); }
};

struct BranchingResult {
    EventStream stream;                      // merged realization, seeds included
    std::vector<ClusterTree> clusters;       // one tree per immigrant
    std::vector<ClusterTree> seed_offspring;  // subtrees rooted at direct children of seeds
};

// Ogata-style thinning against the running intensity, which bounds the
// intensity between events because both the kernel and the multiplier are
// nonincreasing there. Seeds are injected at their exact times.
EventStream simulate_thinning(const SimConfig& cfg);

// Cluster construction: immigrants form a Poisson process of rate mu; every
// individual at tau spawns direct offspring on [tau, horizon) from a
// non-homogeneous Poisson process with rate alpha(t) A phi(t - tau).
// Requires a subcritical model unless allow_unstable is set, in which case
// only the event cap contains the run.
BranchingResult simulate_branching(const SimConfig& cfg, bool allow_unstable = false);

// counts[i][u] = number of node-u events in [i*delta, (i+1)*delta).
BinnedCounts bin_events(const EventStream& stream, double delta);

}  // namespace eah
