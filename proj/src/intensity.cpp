#include "eah/intensity.hpp"

#include <cmath>
#include <string>

#include "eah/errors.hpp"
#include "eah/quadrature.hpp"

namespace eah {

double kernel_integral(double beta, double a, double b) {
    if (!(beta > 0.0)) throw ArgumentError("kernel_integral: beta must be > 0");
    if (!(a >= 0.0)) throw ArgumentError("kernel_integral: a must be >= 0");
    if (a > b) throw ArgumentError("kernel_integral: need a <= b");
    const double upper = std::isinf(b) ? 0.0 : std::exp(-beta * b);
    return (std::exp(-beta * a) - upper) / beta;
}

std::vector<double> eval_intensity(const ModelSpec& model, const EventStream& history,
                                   double t) {
    if (!(t >= 0.0)) throw ArgumentError("eval_intensity: t must be >= 0");
    if (!history.events.empty() && history.events.back().time >= t)
        throw PreconditionError("eval_intensity: history contains an event at or after t");

    const std::size_t m = model.dim();
    std::vector<double> lambda(model.mu);
    for (const Event& e : history.events) {
        const auto j = static_cast<std::size_t>(e.node);
        for (std::size_t i = 0; i < m; ++i) {
            const double a = model.a.a(i, j);
            if (a == 0.0) continue;
            lambda[i] += multiplier_value(model.alpha, i, j, t) * a *
                         std::exp(-model.kernel.beta(i, j) * (t - e.time));
        }
    }
    return lambda;
}

double excitation_mass(const ModelSpec& model, std::size_t i, std::size_t j, double t_event,
                       double t_end, double rel_tol) {
    const double a = model.a.a(i, j);
    if (a == 0.0 || !(t_end > t_event)) return 0.0;
    const double beta = model.kernel.beta(i, j);
    if (const auto* c = std::get_if<ConstantMultiplier>(&model.alpha))
        return a * c->value * kernel_integral(beta, 0.0, t_end - t_event);

    const DecaySpec& spec = std::holds_alternative<ScalarDecayMultiplier>(model.alpha)
                                ? std::get<ScalarDecayMultiplier>(model.alpha).decay
                                : std::get<MatrixMultiplier>(model.alpha).at(i, j);
    auto integrand = [&](double s) {
        return eval_decay(spec, s) * std::exp(-beta * (s - t_event));
    };
    return a * integrate_split_at_pieces(integrand, t_event, t_end, spec, rel_tol);
}

std::vector<double> compensator(const ModelSpec& model, const EventStream& history, double t,
                                CompensatorMode mode) {
    if (!(t >= 0.0)) throw ArgumentError("compensator: t must be >= 0");
    const std::size_t m = model.dim();
    std::vector<double> value(m);
    for (std::size_t i = 0; i < m; ++i) value[i] = model.mu[i] * t;

    for (const Event& e : history.events) {
        if (e.time >= t) break;
        const auto j = static_cast<std::size_t>(e.node);
        for (std::size_t i = 0; i < m; ++i) {
            const double a = model.a.a(i, j);
            if (a == 0.0) continue;
            if (mode == CompensatorMode::Factored) {
                const double beta = model.kernel.beta(i, j);
                value[i] += a * multiplier_value(model.alpha, i, j, t) / beta *
                            (1.0 - std::exp(-beta * (t - e.time)));
            } else {
                value[i] += excitation_mass(model, i, j, e.time, t);
            }
        }
    }
    return value;
}

}  // namespace eah
