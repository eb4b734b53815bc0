#pragma once

#include <cstdint>
#include <vector>

#include "eah/decay.hpp"
#include "eah/mat.hpp"

namespace eah {

// One arrival: time in days, node index in [0, M).
struct Event {
    double time = 0.0;
    int node = 0;
};

// Time-ordered marked arrivals. Times are strictly increasing (a simple
// process has no ties; ingestion perturbs them instead).
struct EventStream {
    std::vector<Event> events;
    int num_nodes = 0;
    double horizon = 0.0;

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
};

void validate(const EventStream& stream);

// Sorts, then resolves exact ties by nudging the later event forward by
// `nudge` days until times are strictly increasing. Returns the number of
// perturbed events; extends the horizon if a nudge pushes past it.
std::size_t sort_and_perturb_ties(EventStream& stream, double nudge = 1e-9);

// Uniform-bin count matrix n_{i,u}: bin i covers [origin + i*delta,
// origin + (i+1)*delta).
struct BinnedCounts {
    double delta = 0.0;
    double origin = 0.0;
    std::vector<std::vector<long>> counts;  // L bins x M nodes

    std::size_t num_bins() const { return counts.size(); }
    std::size_t num_nodes() const { return counts.empty() ? 0 : counts.front().size(); }
    long total() const;
};

void validate(const BinnedCounts& binned);

// Exponential kernel matrix, represented by its decay rates.
struct KernelSpec {
    Mat beta;  // M x M, all entries > 0

    static KernelSpec uniform(std::size_t dim, double rate);
};

// Nonnegative excitation matrix with a known support skeleton.
struct BranchingMatrix {
    Mat a;
    Mask mask;

    static BranchingMatrix dense(Mat values);

    std::size_t dim() const { return a.rows(); }
};

// Zeroes entries outside the mask in place.
void apply_mask(Mat& a, const Mask& mask);

struct ModelSpec {
    std::vector<double> mu;  // immigrant rates, events/day
    BranchingMatrix a;
    KernelSpec kernel;
    EnvMultiplier alpha = ConstantMultiplier{1.0};

    std::size_t dim() const { return mu.size(); }
};

void validate(const ModelSpec& model);

// Convenience constructor for the frequent univariate case.
ModelSpec univariate_model(double mu, double a, double beta,
                           EnvMultiplier alpha = ConstantMultiplier{1.0});

}  // namespace eah
