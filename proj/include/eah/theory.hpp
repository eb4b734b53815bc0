#pragma once

#include <cstdint>
#include <vector>

#include "eah/mat.hpp"
#include "eah/types.hpp"

namespace eah {

// Stability report: m(u) sampled on a grid, its sup, and the implied mean
// intensity bound mu / (1 - sup_m). For multivariate models m_values carries
// the worst row sum of the pairwise matrix [m_ij(u)] (the conservative
// verdict that gates the simulators) and spectral_radius_sup the sharper
// spectral-radius extension.
struct TheoryReport {
    std::vector<double> u_grid;
    std::vector<double> m_values;
    double sup_m = 0.0;
    bool stable = false;
    double intensity_bound = 0.0;  // +inf when not stable
    double spectral_radius_sup = 0.0;
};

// Cluster-length CDF values D_{J_t}(y) tabulated on a rectangular grid.
struct LengthGrid {
    std::vector<double> t_grid;
    std::vector<double> y_grid;
    Mat d_values;  // t_grid.size() x y_grid.size()
    std::size_t iterations = 0;
    double residual = 0.0;
    // Each sweep of the fixed-point map should move every value upward from
    // the exp(-m(t)) start; recorded so callers can assert it.
    bool monotone_sweeps = true;

    // Bilinear interpolation, clamped to the grid edges.
    double value(double t, double y) const;
};

struct LengthGridSpec {
    double t_max = 20.0;
    double y_max = 20.0;
    double step = 0.05;
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;
};

struct EmpiricalCdf {
    std::vector<double> y_grid;
    std::vector<double> probs;
    std::size_t replicates = 0;
};

// Mean first-generation offspring count m(u) of an ancestor at time u,
// A * integral_u^inf alpha(t) exp(-beta (t-u)) dt. Univariate models only.
double mean_first_generation(const ModelSpec& model, double u);

// Entry-wise m_ij(u): expected direct node-i offspring of a node-j parent at
// time u. Defined for any dimension.
double pair_mean_first_generation(const ModelSpec& model, std::size_t i, std::size_t j,
                                  double u);

// Worst row sum of [m_ij(0)]. Multipliers are nonincreasing, so this is the
// sup over all ancestor times; it is the cheap gate the simulators consult.
double branching_sup(const ModelSpec& model);

// Full report over a u grid (empty grid -> a default 0..40 day grid).
TheoryReport stability_check(const ModelSpec& model, std::vector<double> u_grid = {});

// Survivor function of the residual time after y: probability of no event in
// (y, y + l], for a stable univariate model observed in equilibrium. The
// formula integrates immigrants together with their direct offspring (the
// inner avoidance factor is first-generation only), so its law is that of
// generations zero and one; mc_residual_time samples the same law.
double residual_time_survivor(const ModelSpec& model, double y, double l);

// Picard solution of the cluster-length fixed point on a grid; stable
// univariate models only.
LengthGrid cluster_length_cdf(const ModelSpec& model, const LengthGridSpec& grid = {});

// Monte-Carlo companions built on the branching simulator.
McEstimate mc_residual_time(const ModelSpec& model, double y, double l,
                            std::size_t replicates, std::uint64_t rng_seed);
EmpiricalCdf mc_cluster_length(const ModelSpec& model, double t,
                               const std::vector<double>& y_grid, std::size_t replicates,
                               std::uint64_t rng_seed);

// Spectral radius of a nonnegative square matrix by power iteration.
double spectral_radius(const Mat& m);

}  // namespace eah
