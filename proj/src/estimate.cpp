#include "eah/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eah/errors.hpp"
#include "eah/intensity.hpp"
#include "eah/quadrature.hpp"

namespace eah {

namespace {

// Keep full responsibility matrices only for streams this small; beyond that
// the triangular storage dwarfs the fit itself.
constexpr std::size_t kStoreLimit = 1500;

Mask effective_mask(const FitConfig& cfg) {
    if (!cfg.mask.empty()) return cfg.mask;
    return Mask(cfg.dim(), cfg.dim(), true);
}

Mat effective_init(const FitConfig& cfg, const Mask& mask) {
    Mat a = cfg.init_a;
    if (a.empty()) {
        a = Mat(cfg.dim(), cfg.dim(), 0.0);
        for (std::size_t i = 0; i < cfg.dim(); ++i)
            for (std::size_t j = 0; j < cfg.dim(); ++j)
                if (mask(i, j)) a(i, j) = 1.0;
    }
    return a;
}

// integral_{t0}^{t1} alpha_uv(s) exp(-beta (s - t0)) ds
double unit_excitation(const EnvMultiplier& alpha, std::size_t u, std::size_t v, double beta,
                       double t0, double t1) {
    if (t1 <= t0) return 0.0;
    if (const auto* cm = std::get_if<ConstantMultiplier>(&alpha))
        return cm->value * kernel_integral(beta, 0.0, t1 - t0);
    const DecaySpec& decay = std::holds_alternative<ScalarDecayMultiplier>(alpha)
                                 ? std::get<ScalarDecayMultiplier>(alpha).decay
                                 : std::get<MatrixMultiplier>(alpha).at(u, v);
    return integrate_split_at_pieces(
        [&](double s) { return eval_decay(decay, s) * std::exp(-beta * (s - t0)); }, t0, t1,
        decay, 1e-8);
}

double relative_change(const Mat& next, const Mat& prev) {
    double diff = 0.0;
    for (std::size_t k = 0; k < next.data().size(); ++k)
        diff = std::max(diff, std::abs(next.data()[k] - prev.data()[k]));
    return diff / std::max(prev.max_abs(), 1e-12);
}

void check_monotone(const std::vector<double>& trace) {
    for (std::size_t k = 1; k < trace.size(); ++k) {
        const double slack = 1e-9 * std::max(1.0, std::abs(trace[k - 1]));
        if (trace[k] < trace[k - 1] - slack)
            throw Error("EM lower bound decreased between iterations (" +
                        std::to_string(trace[k - 1]) + " -> " + std::to_string(trace[k]) + ")");
    }
}

// M-step denominators do not depend on the iterate; precompute them.
struct MStepDenominators {
    Mat factored;  // alpha_uv(T)/beta_uv * sum_j (1 - exp(-beta (T - t_j)))
    Mat exact;  // sum_j integral_{t_j}^{T} alpha_uv(s) exp(-beta (s - t_j)) ds
};

MStepDenominators continuous_denominators(const FitConfig& cfg, const EventStream& stream,
                                          double horizon) {
    const std::size_t m = cfg.dim();
    MStepDenominators out{Mat(m, m, 0.0), Mat(m, m, 0.0)};
    for (const Event& e : stream.events) {
        const auto v = static_cast<std::size_t>(e.node);
        for (std::size_t u = 0; u < m; ++u) {
            const double beta = cfg.beta.beta(u, v);
            out.factored(u, v) += multiplier_value(cfg.decay, u, v, horizon) / beta *
                               (1.0 - std::exp(-beta * (horizon - e.time)));
            if (cfg.exact_compensator)
                out.exact(u, v) += unit_excitation(cfg.decay, u, v, beta, e.time, horizon);
        }
    }
    return out;
}

Mat mstep_from_sums(const Mat& numerator, const MStepDenominators& denom, const Mask& mask,
                    bool exact) {
    const std::size_t m = numerator.rows();
    Mat a(m, m, 0.0);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < m; ++v) {
            if (!mask(u, v)) continue;
            const double d = exact ? denom.exact(u, v) : denom.factored(u, v);
            if (d > 0.0) a(u, v) = numerator(u, v) / d;
        }
    return a;
}

double effective_horizon(const FitConfig& cfg, double fallback) {
    return cfg.horizon > 0.0 ? cfg.horizon : fallback;
}

}  // namespace

void validate(const FitConfig& cfg) {
    const std::size_t m = cfg.dim();
    if (m == 0) throw ConfigError("fit config needs at least one node");
    if (cfg.beta.beta.rows() != m || cfg.beta.beta.cols() != m)
        throw ConfigError("fit config: beta must be MxM");
    for (double b : cfg.beta.beta.data())
        if (!(b > 0.0)) throw ConfigError("fit config: beta entries must be positive");
    for (double v : cfg.mu)
        if (v < 0.0) throw ConfigError("fit config: mu entries must be nonnegative");
    if (!cfg.mask.empty() && (cfg.mask.rows() != m || cfg.mask.cols() != m))
        throw ConfigError("fit config: mask must be MxM");
    if (!cfg.init_a.empty()) {
        if (cfg.init_a.rows() != m || cfg.init_a.cols() != m)
            throw ConfigError("fit config: init_a must be MxM");
        const Mask mask = effective_mask(cfg);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (cfg.init_a(i, j) < 0.0)
                    throw ConfigError("fit config: init_a entries must be nonnegative");
                if (!mask(i, j) && cfg.init_a(i, j) != 0.0)
                    throw ConfigError("fit config: init_a must vanish off the mask support");
            }
    }
    if (!(cfg.tol > 0.0)) throw ConfigError("fit config: tol must be positive");
    if (cfg.max_iters < 1) throw ConfigError("fit config: max_iters must be >= 1");
    validate_multiplier(cfg.decay, m);
}

Responsibilities em_estep_continuous(const BranchingMatrix& a, const FitConfig& cfg,
                                     const EventStream& stream) {
    validate(cfg);
    validate(stream);
    const std::size_t n = stream.size();
    if (n <= cfg.seed_count) throw EmptyDataError("no events beyond the conditioned-on seeds");

    Responsibilities p(n);
    for (std::size_t i = cfg.seed_count; i < n; ++i) {
        const auto u = static_cast<std::size_t>(stream.events[i].node);
        const double t_i = stream.events[i].time;
        std::vector<double>& row = p[i];
        row.assign(i + 1, 0.0);
        double denom = cfg.mu[u];
        for (std::size_t j = 0; j < i; ++j) {
            const auto v = static_cast<std::size_t>(stream.events[j].node);
            const double entry = a.a(u, v);
            if (entry == 0.0) continue;
            const double beta = cfg.beta.beta(u, v);
            row[j] = entry * multiplier_value(cfg.decay, u, v, t_i) *
                     std::exp(-beta * (t_i - stream.events[j].time));
            denom += row[j];
        }
        if (denom <= 0.0)
            throw OrphanEventError(i, "event " + std::to_string(i) +
                                          " has zero background rate and no prior trigger");
        for (std::size_t j = 0; j < i; ++j) row[j] /= denom;
        row[i] = cfg.mu[u] / denom;
    }
    return p;
}

BranchingMatrix em_mstep_continuous(const Responsibilities& p, const FitConfig& cfg,
                                    const EventStream& stream) {
    validate(cfg);
    validate(stream);
    if (p.size() != stream.size())
        throw ArgumentError("responsibilities do not match the stream length");
    const std::size_t m = cfg.dim();
    const double horizon = effective_horizon(cfg, stream.horizon);
    const MStepDenominators denom = continuous_denominators(cfg, stream, horizon);
    const Mask mask = effective_mask(cfg);

    // Dividing sum(p) by the unit-A compensator derivative alpha(T)/beta *
    // sum(1 - exp{-beta (T - t_j)}) reproduces the displayed update, beta
    // factor included.
    Mat numerator(m, m, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i].empty()) continue;
        const auto u = static_cast<std::size_t>(stream.events[i].node);
        for (std::size_t j = 0; j < std::min(i, p[i].size()); ++j) {
            const auto v = static_cast<std::size_t>(stream.events[j].node);
            numerator(u, v) += p[i][j];
        }
    }

    BranchingMatrix out;
    out.mask = mask;
    out.a = mstep_from_sums(numerator, denom, mask, cfg.exact_compensator);
    return out;
}

double lower_bound(const BranchingMatrix& a, const Responsibilities& p, const FitConfig& cfg,
                   const EventStream& stream) {
    validate(cfg);
    validate(stream);
    if (p.size() != stream.size())
        throw ArgumentError("responsibilities do not match the stream length");
    const double horizon = effective_horizon(cfg, stream.horizon);
    const double neg_inf = -std::numeric_limits<double>::infinity();

    double acc = 0.0;
    for (std::size_t i = cfg.seed_count; i < stream.size(); ++i) {
        if (p[i].empty()) throw ArgumentError("responsibility row " + std::to_string(i) +
                                              " is missing");
        const auto u = static_cast<std::size_t>(stream.events[i].node);
        const double t_i = stream.events[i].time;
        double row_sum = 0.0;
        for (std::size_t j = 0; j < p[i].size(); ++j) {
            const double pij = p[i][j];
            if (pij < 0.0) throw ArgumentError("responsibilities must be nonnegative");
            row_sum += pij;
            if (pij == 0.0) continue;
            if (j == i) {
                if (cfg.mu[u] <= 0.0) return neg_inf;
                acc += pij * std::log(cfg.mu[u] / pij);
            } else {
                const auto v = static_cast<std::size_t>(stream.events[j].node);
                const double rate = a.a(u, v) * multiplier_value(cfg.decay, u, v, t_i) *
                                    std::exp(-cfg.beta.beta(u, v) *
                                             (t_i - stream.events[j].time));
                if (rate <= 0.0) return neg_inf;
                acc += pij * std::log(rate / pij);
            }
        }
        if (row_sum > 1.0 + 1e-9)
            throw ArgumentError("responsibility row " + std::to_string(i) + " sums above 1");
        // Mass missing from the row is attribution to nothing, which has
        // zero rate.
        if (row_sum < 1.0 - 1e-9) return neg_inf;
    }

    const MStepDenominators denom = continuous_denominators(cfg, stream, horizon);
    const std::size_t m = cfg.dim();
    for (std::size_t u = 0; u < m; ++u) {
        acc -= cfg.mu[u] * horizon;
        for (std::size_t v = 0; v < m; ++v)
            acc -= a.a(u, v) *
                   (cfg.exact_compensator ? denom.exact(u, v) : denom.factored(u, v));
    }
    return acc;
}

FitResult em_fit_continuous(const EventStream& stream, const FitConfig& cfg) {
    validate(cfg);
    validate(stream);
    const std::size_t n = stream.size();
    if (n == 0) throw EmptyDataError("cannot fit an empty event stream");
    if (n <= cfg.seed_count) throw EmptyDataError("no events beyond the conditioned-on seeds");
    const std::size_t m = cfg.dim();
    if (stream.num_nodes != 0 && static_cast<std::size_t>(stream.num_nodes) > m)
        throw ConfigError("stream has more nodes than the fit config");

    const double horizon = effective_horizon(cfg, stream.horizon);
    const Mask mask = effective_mask(cfg);
    Mat a = effective_init(cfg, mask);
    const MStepDenominators denom = continuous_denominators(cfg, stream, horizon);

    const double mu_comp = [&] {
        double s = 0.0;
        for (double v : cfg.mu) s += v * horizon;
        return s;
    }();

    FitResult result;
    Mat numerator(m, m, 0.0);
    Mat state(m, m, 0.0);  // state(u,v) = sum_{j processed, u_j=v} e^{-beta_uv (t - t_j)}
    bool converged = false;
    std::size_t iters = 0;

    while (iters < cfg.max_iters) {
        ++iters;
        numerator = Mat(m, m, 0.0);
        state = Mat(m, m, 0.0);
        double bound = 0.0;
        double t_prev = stream.events.empty() ? 0.0 : stream.events.front().time;

        for (std::size_t i = 0; i < n; ++i) {
            const double t_i = stream.events[i].time;
            const auto u = static_cast<std::size_t>(stream.events[i].node);
            const double dt = t_i - t_prev;
            if (dt > 0.0)
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < m; ++c)
                        state(r, c) *= std::exp(-cfg.beta.beta(r, c) * dt);
            t_prev = t_i;

            if (i >= cfg.seed_count) {
                double d_i = cfg.mu[u];
                for (std::size_t v = 0; v < m; ++v) {
                    if (a(u, v) == 0.0 || state(u, v) == 0.0) continue;
                    d_i += a(u, v) * multiplier_value(cfg.decay, u, v, t_i) * state(u, v);
                }
                if (d_i <= 0.0)
                    throw OrphanEventError(
                        i, "event " + std::to_string(i) +
                               " has zero background rate and no prior trigger");
                bound += std::log(d_i);
                for (std::size_t v = 0; v < m; ++v) {
                    if (a(u, v) == 0.0 || state(u, v) == 0.0) continue;
                    numerator(u, v) += a(u, v) * multiplier_value(cfg.decay, u, v, t_i) *
                                       state(u, v) / d_i;
                }
            }
            for (std::size_t r = 0; r < m; ++r) state(r, u) += 1.0;
        }

        bound -= mu_comp;
        for (std::size_t u = 0; u < m; ++u)
            for (std::size_t v = 0; v < m; ++v)
                bound -= a(u, v) *
                         (cfg.exact_compensator ? denom.exact(u, v) : denom.factored(u, v));
        result.lower_bound_trace.push_back(bound);

        Mat a_next = mstep_from_sums(numerator, denom, mask, cfg.exact_compensator);
        const double change = relative_change(a_next, a);
        a = a_next;
        if (change < cfg.tol) {
            converged = true;
            break;
        }
    }

    check_monotone(result.lower_bound_trace);
    result.a_hat.a = a;
    result.a_hat.mask = mask;
    result.iterations = iters;
    result.converged = converged;
    if (n <= kStoreLimit) {
        BranchingMatrix current{a, mask};
        result.responsibilities = em_estep_continuous(current, cfg, stream);
    }
    return result;
}

BinnedEstep em_estep_binned(const BranchingMatrix& a, const FitConfig& cfg,
                            const BinnedCounts& binned) {
    validate(cfg);
    validate(binned);
    const std::size_t m = cfg.dim();
    if (binned.num_nodes() != m) throw ConfigError("binned counts do not match the fit config");
    const std::size_t bins = binned.num_bins();
    const double delta = binned.delta;
    const Mask mask = effective_mask(cfg);

    BinnedEstep estep;
    estep.background = Mat(bins, m, -1.0);
    estep.stored_pairs = bins <= 256;
    if (estep.stored_pairs) estep.pairs.assign(m * m, Mat(bins, bins, 0.0));

    for (std::size_t i = 0; i < bins; ++i) {
        const double t_i = binned.origin + delta * static_cast<double>(i);
        for (std::size_t u = 0; u < m; ++u) {
            double trigger = 0.0;
            bool structural = cfg.mu[u] > 0.0;
            for (std::size_t v = 0; v < m; ++v) {
                const double beta = cfg.beta.beta(u, v);
                const double alpha = multiplier_value(cfg.decay, u, v, t_i);
                double g = 0.0;
                for (std::size_t j = 0; j < i; ++j)
                    g += static_cast<double>(binned.counts[j][v]) *
                         std::exp(-delta * beta * static_cast<double>(i - j));
                if (mask(u, v) && g > 0.0) structural = true;
                trigger += a.a(u, v) * alpha * g;
            }
            const double d_iu = cfg.mu[u] + trigger;
            if (d_iu <= 0.0) {
                if (structural && binned.counts[i][u] > 0)
                    throw OrphanEventError(
                        i, "bin " + std::to_string(i) + " node " + std::to_string(u) +
                               " has triggers on the skeleton but zero rate under A");
                continue;  // conditioned-on row, background stays -1
            }
            estep.background(i, u) = cfg.mu[u] / d_iu;
            if (estep.stored_pairs)
                for (std::size_t v = 0; v < m; ++v) {
                    const double beta = cfg.beta.beta(u, v);
                    const double alpha = multiplier_value(cfg.decay, u, v, t_i);
                    for (std::size_t j = 0; j < i; ++j)
                        estep.pairs[u * m + v](i, j) =
                            a.a(u, v) * alpha *
                            std::exp(-delta * beta * static_cast<double>(i - j)) / d_iu;
                }
        }
    }
    return estep;
}

FitResult em_fit_binned(const BinnedCounts& binned, const FitConfig& cfg) {
    validate(cfg);
    validate(binned);
    const std::size_t m = cfg.dim();
    if (binned.num_nodes() != m) throw ConfigError("binned counts do not match the fit config");
    if (binned.num_bins() == 0 || binned.total() == 0)
        throw EmptyDataError("binned counts hold no events");

    const std::size_t bins = binned.num_bins();
    const std::size_t last = bins - 1;  // the displayed updates call this l
    const double delta = binned.delta;
    const double t_last = binned.origin + delta * static_cast<double>(last);
    const Mask mask = effective_mask(cfg);
    Mat a = effective_init(cfg, mask);

    // M-step denominators, fixed across iterations.
    MStepDenominators denom{Mat(m, m, 0.0), Mat(m, m, 0.0)};
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < m; ++v) {
            const double beta = cfg.beta.beta(u, v);
            double acc = 0.0, acc_exact = 0.0;
            for (std::size_t j = 0; j <= last; ++j) {
                const double n_jv = static_cast<double>(binned.counts[j][v]);
                if (n_jv == 0.0) continue;
                acc += n_jv * (1.0 - std::exp(-delta * beta * static_cast<double>(last - j)));
                if (cfg.exact_compensator) {
                    const double t_j = binned.origin + delta * static_cast<double>(j);
                    acc_exact += n_jv * unit_excitation(cfg.decay, u, v, beta, t_j, t_last);
                }
            }
            denom.factored(u, v) = multiplier_value(cfg.decay, u, v, t_last) / beta * acc;
            denom.exact(u, v) = acc_exact;
        }

    const double mu_comp = [&] {
        double s = 0.0;
        for (double v : cfg.mu) s += v * delta * static_cast<double>(last);
        return s;
    }();

    FitResult result;
    Mat numerator(m, m, 0.0);
    Mat g(m, m, 0.0);  // g(u,v) = sum_{j<i} n_jv e^{-delta beta_uv (i-j)}
    bool converged = false;
    std::size_t iters = 0;

    while (iters < cfg.max_iters) {
        ++iters;
        numerator = Mat(m, m, 0.0);
        g = Mat(m, m, 0.0);
        double bound = 0.0;

        for (std::size_t i = 0; i < bins; ++i) {
            if (i > 0)
                for (std::size_t u = 0; u < m; ++u)
                    for (std::size_t v = 0; v < m; ++v) {
                        const double decay_step = std::exp(-delta * cfg.beta.beta(u, v));
                        g(u, v) = decay_step *
                                  (g(u, v) + static_cast<double>(binned.counts[i - 1][v]));
                    }
            const double t_i = binned.origin + delta * static_cast<double>(i);
            for (std::size_t u = 0; u < m; ++u) {
                const double n_iu = static_cast<double>(binned.counts[i][u]);
                double d_iu = cfg.mu[u];
                for (std::size_t v = 0; v < m; ++v) {
                    if (a(u, v) == 0.0 || g(u, v) == 0.0) continue;
                    d_iu += a(u, v) * multiplier_value(cfg.decay, u, v, t_i) * g(u, v);
                }
                if (d_iu <= 0.0) continue;  // conditioned-on row (seeds under mu = 0)
                if (n_iu > 0.0) bound += n_iu * std::log(d_iu);
                for (std::size_t v = 0; v < m; ++v) {
                    if (a(u, v) == 0.0 || g(u, v) == 0.0) continue;
                    numerator(u, v) += n_iu * a(u, v) *
                                       multiplier_value(cfg.decay, u, v, t_i) * g(u, v) /
                                       d_iu;
                }
            }
        }

        bound -= mu_comp;
        for (std::size_t u = 0; u < m; ++u)
            for (std::size_t v = 0; v < m; ++v)
                bound -= a(u, v) *
                         (cfg.exact_compensator ? denom.exact(u, v) : denom.factored(u, v));
        result.lower_bound_trace.push_back(bound);

        Mat a_next = mstep_from_sums(numerator, denom, mask, cfg.exact_compensator);
        const double change = relative_change(a_next, a);
        a = a_next;
        if (change < cfg.tol) {
            converged = true;
            break;
        }
    }

    check_monotone(result.lower_bound_trace);
    result.a_hat.a = a;
    result.a_hat.mask = mask;
    result.iterations = iters;
    result.converged = converged;
    result.binned = em_estep_binned(result.a_hat, cfg, binned);
    return result;
}

BranchingMatrix calibrate_pin(const BranchingMatrix& a_hat, std::size_t i, std::size_t j,
                              double value) {
    if (i >= a_hat.dim() || j >= a_hat.dim())
        throw ArgumentError("calibrate_pin: entry out of range");
    const double current = a_hat.a(i, j);
    if (current <= 0.0)
        throw CalibrationError("calibrate_pin: pinned entry is zero, cannot rescale");
    BranchingMatrix out = a_hat;
    const double factor = value / current;
    for (double& x : out.a.data()) x *= factor;
    return out;
}

ScaleCalibration calibrate_scale(const BranchingMatrix& a_hat, const Mat& predicted,
                                 const Mat& observed) {
    if (!predicted.same_shape(observed))
        throw ArgumentError("calibrate_scale: prediction and observation shapes differ");
    if (predicted.empty()) throw EmptyDataError("calibrate_scale: nothing to compare");

    const auto rmse = [&](double c) {
        double acc = 0.0;
        const std::size_t n = predicted.data().size();
        for (std::size_t k = 0; k < n; ++k) {
            const double d = c * predicted.data()[k] - observed.data()[k];
            acc += d * d;
        }
        return std::sqrt(acc / static_cast<double>(n));
    };

    // Golden-section over the documented bracket; the objective is a convex
    // function of c, so the bracket only needs to contain the minimum.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 1e-4, hi = 1e4;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = rmse(x1), f2 = rmse(x2);
    for (int iter = 0; iter < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++iter) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = rmse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = rmse(x2);
        }
    }
    ScaleCalibration out;
    out.scale = 0.5 * (lo + hi);
    out.rmse = rmse(out.scale);
    out.a = a_hat;
    for (double& x : out.a.a.data()) x *= out.scale;
    return out;
}

}  // namespace eah
