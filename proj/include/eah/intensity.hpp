#pragma once

#include <vector>

#include "eah/types.hpp"

namespace eah {

// Closed form of int_a^b exp(-beta s) ds; b may be +infinity.
double kernel_integral(double beta, double a, double b);

// Conditional intensity vector at time t given a history of events strictly
// before t:
//   lambda_i(t) = mu_i + sum_{t_j < t} alpha_{i,u_j}(t) A_{i,u_j}
//                                       exp(-beta_{i,u_j} (t - t_j)).
std::vector<double> eval_intensity(const ModelSpec& model, const EventStream& history,
                                   double t);

enum class CompensatorMode { Factored, Exact };

// Integrated intensity over [0, t] per node. Factored mode pulls the
// multiplier out of the sum at its horizon value:
//   mu_i t + sum_j (A_{i,u_j} alpha_{i,u_j}(t) / beta_{i,u_j})
//                  (1 - exp(-beta_{i,u_j} (t - t_j))),
// exact mode integrates alpha inside the sum by adaptive quadrature.
std::vector<double> compensator(const ModelSpec& model, const EventStream& history, double t,
                                CompensatorMode mode = CompensatorMode::Factored);

// Exact excitation mass an event of node j placed at t_event contributes to
// node i up to t_end: A_{ij} int_{t_event}^{t_end} alpha_{ij}(s)
// exp(-beta_{ij}(s - t_event)) ds.
double excitation_mass(const ModelSpec& model, std::size_t i, std::size_t j, double t_event,
                       double t_end, double rel_tol = 1e-8);

}  // namespace eah
