#include "eah/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "eah/errors.hpp"

namespace eah {

void validate(const EventStream& stream) {
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < stream.events.size(); ++k) {
        const Event& e = stream.events[k];
        if (!(e.time >= 0.0))
            throw ConfigError("event " + std::to_string(k) + " has negative time");
        if (!(e.time > prev))
            throw ConfigError("event times must be strictly increasing (event " +
                              std::to_string(k) + ")");
        if (e.node < 0 || e.node >= stream.num_nodes)
            throw ConfigError("event " + std::to_string(k) + " has node " +
                              std::to_string(e.node) + " outside [0, " +
                              std::to_string(stream.num_nodes) + ")");
        prev = e.time;
    }
    if (!stream.events.empty() && stream.horizon < stream.events.back().time)
        throw ConfigError("horizon is before the last event");
}

std::size_t sort_and_perturb_ties(EventStream& stream, double nudge) {
    std::stable_sort(stream.events.begin(), stream.events.end(),
                     [](const Event& x, const Event& y) { return x.time < y.time; });
    std::size_t perturbed = 0;
    for (std::size_t k = 1; k < stream.events.size(); ++k) {
        if (stream.events[k].time <= stream.events[k - 1].time) {
            stream.events[k].time = stream.events[k - 1].time + nudge;
            ++perturbed;
        }
    }
    if (!stream.events.empty())
        stream.horizon = std::max(stream.horizon, stream.events.back().time);
    return perturbed;
}

long BinnedCounts::total() const {
    long n = 0;
    for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
    return n;
}

void validate(const BinnedCounts& binned) {
    if (!(binned.delta > 0.0)) throw ConfigError("binsize must be positive");
    const std::size_t m = binned.num_nodes();
    for (std::size_t i = 0; i < binned.counts.size(); ++i) {
        if (binned.counts[i].size() != m) throw ConfigError("ragged count matrix");
        for (long v : binned.counts[i])
            if (v < 0)
                throw ConfigError("negative count in bin " + std::to_string(i));
    }
}

KernelSpec KernelSpec::uniform(std::size_t dim, double rate) {
    return KernelSpec{Mat::constant(dim, dim, rate)};
}

BranchingMatrix BranchingMatrix::dense(Mat values) {
    Mask mask(values.rows(), values.cols(), true);
    return BranchingMatrix{std::move(values), std::move(mask)};
}

void apply_mask(Mat& a, const Mask& mask) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (!mask(i, j)) a(i, j) = 0.0;
}

void validate(const ModelSpec& model) {
    const std::size_t m = model.mu.size();
    if (m == 0) throw ConfigError("model has no nodes");
    for (double v : model.mu)
        if (!(v >= 0.0)) throw ConfigError("mu entries must be >= 0");
    if (model.a.a.rows() != m || model.a.a.cols() != m)
        throw ConfigError("branching matrix must be " + std::to_string(m) + "x" +
                          std::to_string(m));
    if (model.a.mask.rows() != m || model.a.mask.cols() != m)
        throw ConfigError("mask must match the branching matrix shape");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (!(model.a.a(i, j) >= 0.0))
                throw ConfigError("branching entries must be >= 0");
            if (!model.a.mask(i, j) && model.a.a(i, j) != 0.0)
                throw ConfigError("branching entry outside the mask is nonzero");
        }
    if (model.kernel.beta.rows() != m || model.kernel.beta.cols() != m)
        throw ConfigError("kernel matrix must be " + std::to_string(m) + "x" +
                          std::to_string(m));
    for (double b : model.kernel.beta.data())
        if (!(b > 0.0)) throw ConfigError("kernel decay rates must be > 0");
    validate_multiplier(model.alpha, m);
}

ModelSpec univariate_model(double mu, double a, double beta, EnvMultiplier alpha) {
    ModelSpec model;
    model.mu = {mu};
    model.a = BranchingMatrix::dense(Mat::constant(1, 1, a));
    model.kernel = KernelSpec::uniform(1, beta);
    model.alpha = std::move(alpha);
    return model;
}

}  // namespace eah
