#include "eah/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "eah/decay.hpp"
#include "eah/errors.hpp"
#include "eah/intensity.hpp"
#include "eah/quadrature.hpp"
#include "eah/simulate.hpp"

namespace eah {

namespace {

constexpr double kTailTol = 1e-10;
constexpr double kQuadRelTol = 1e-8;

void require_univariate(const ModelSpec& model, const char* op) {
    if (model.dim() != 1)
        throw ArgumentError(std::string(op) +
                            ": univariate models only; use stability_check for matrices");
}

void require_stable(const ModelSpec& model, const char* op) {
    const double sup = branching_sup(model);
    if (sup >= 1.0)
        throw TheoryError(std::string(op) + ": model is not subcritical (sup m = " +
                          std::to_string(sup) + ")");
}

// Run fn(r) for r in [0, n) across hardware threads. Each index writes only
// its own slot, so results do not depend on the schedule.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, 8);
    if (workers <= 1 || n < 2 * workers) {
        for (std::size_t r = 0; r < n; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t r = w; r < n; r += workers) fn(r);
        });
    }
    for (std::thread& th : pool) th.join();
}

}  // namespace

double pair_mean_first_generation(const ModelSpec& model, std::size_t i, std::size_t j,
                                  double u) {
    if (u < 0.0) throw ArgumentError("mean first generation: u must be >= 0");
    const double a = model.a.a(i, j);
    if (a == 0.0) return 0.0;
    const double beta = model.kernel.beta(i, j);

    if (const auto* cm = std::get_if<ConstantMultiplier>(&model.alpha))
        return a * cm->value / beta;

    const DecaySpec& decay = std::holds_alternative<ScalarDecayMultiplier>(model.alpha)
                                 ? std::get<ScalarDecayMultiplier>(model.alpha).decay
                                 : std::get<MatrixMultiplier>(model.alpha).at(i, j);
    const double d_u = eval_decay(decay, u);
    if (d_u <= 0.0) return 0.0;  // nonincreasing and nonnegative, so zero stays zero

    // Truncate where the remaining mass is certainly below kTailTol:
    // integral_{T}^{inf} d(t) e^{-beta (t-u)} dt <= d(u) e^{-beta (T-u)} / beta.
    const double span = std::max(1.0, std::log(d_u / (kTailTol * beta)) / beta);
    const double t_end = u + span;
    const double value = integrate_split_at_pieces(
        [&](double t) { return eval_decay(decay, t) * std::exp(-beta * (t - u)); }, u, t_end,
        decay, kQuadRelTol);
    return a * value;
}

double mean_first_generation(const ModelSpec& model, double u) {
    require_univariate(model, "mean_first_generation");
    return pair_mean_first_generation(model, 0, 0, u);
}

double branching_sup(const ModelSpec& model) {
    const std::size_t m = model.dim();
    double sup = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += pair_mean_first_generation(model, i, j, 0.0);
        sup = std::max(sup, row);
    }
    return sup;
}

double spectral_radius(const Mat& m) {
    if (m.rows() != m.cols()) throw ArgumentError("spectral_radius: matrix must be square");
    const std::size_t n = m.rows();
    if (n == 0) return 0.0;
    if (n == 1) return std::abs(m(0, 0));

    // Power iteration on (M + I): shifting by the identity keeps the dominant
    // eigenvalue unique for nonnegative matrices with periodic structure.
    std::vector<double> v(n, 1.0 / static_cast<double>(n)), w(n);
    double eigen = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = v[i];
            for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * v[j];
            w[i] = acc;
        }
        const double norm = std::accumulate(w.begin(), w.end(), 0.0,
                                            [](double s, double x) { return s + std::abs(x); });
        if (norm == 0.0) return 0.0;
        for (double& x : w) x /= norm;
        const double next = norm;
        v.swap(w);
        if (std::abs(next - eigen) <= 1e-12 * std::max(1.0, next) && iter > 2) {
            eigen = next;
            break;
        }
        eigen = next;
    }
    return std::max(0.0, eigen - 1.0);
}

TheoryReport stability_check(const ModelSpec& model, std::vector<double> u_grid) {
    validate(model);
    if (u_grid.empty())
        for (double u = 0.0; u <= 40.0 + 1e-9; u += 0.5) u_grid.push_back(u);
    if (!std::is_sorted(u_grid.begin(), u_grid.end()) || u_grid.front() < 0.0)
        throw ArgumentError("stability_check: u_grid must be sorted and nonnegative");

    const std::size_t m = model.dim();
    TheoryReport report;
    report.u_grid = u_grid;
    report.m_values.reserve(u_grid.size());

    Mat pair_m(m, m, 0.0);
    for (double u : u_grid) {
        double worst_row = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                pair_m(i, j) = pair_mean_first_generation(model, i, j, u);
                row += pair_m(i, j);
            }
            worst_row = std::max(worst_row, row);
        }
        report.m_values.push_back(worst_row);
        report.spectral_radius_sup = std::max(report.spectral_radius_sup, spectral_radius(pair_m));
    }

    // Multipliers are nonincreasing, so m(u) beyond the grid never exceeds the
    // grid values and u = 0 dominates; fold it in even if the grid skips 0.
    report.sup_m = branching_sup(model);
    for (double v : report.m_values) report.sup_m = std::max(report.sup_m, v);
    report.stable = report.sup_m < 1.0;
    const double mu_total = std::accumulate(model.mu.begin(), model.mu.end(), 0.0);
    report.intensity_bound = report.stable
                                 ? mu_total / (1.0 - report.sup_m)
                                 : std::numeric_limits<double>::infinity();
    return report;
}

double residual_time_survivor(const ModelSpec& model, double y, double l) {
    require_univariate(model, "residual_time_survivor");
    if (y < 0.0 || l < 0.0)
        throw ArgumentError("residual_time_survivor: y and l must be >= 0");
    require_stable(model, "residual_time_survivor");
    if (l == 0.0) return 1.0;

    const double mu = model.mu[0];
    const double a = model.a.a(0, 0);
    const double beta = model.kernel.beta(0, 0);

    // Inner mass seen from a source at t <= y factorizes:
    //   C(t) = A integral_y^{y+l} alpha(tau) e^{-beta (tau - t)} dtau
    //        = c_l * e^{-beta (y - t)},  c_l = A integral_0^l alpha(y+s) e^{-beta s} ds.
    double c_l = 0.0;
    if (a != 0.0) {
        if (const auto* cm = std::get_if<ConstantMultiplier>(&model.alpha)) {
            c_l = a * cm->value * kernel_integral(beta, 0.0, l);
        } else {
            const DecaySpec& decay = std::holds_alternative<ScalarDecayMultiplier>(model.alpha)
                                         ? std::get<ScalarDecayMultiplier>(model.alpha).decay
                                         : std::get<MatrixMultiplier>(model.alpha).at(0, 0);
            c_l = a * integrate_split_at_pieces(
                          [&](double s) { return eval_decay(decay, y + s) * std::exp(-beta * s); },
                          0.0, l, decay, kQuadRelTol);
        }
    }
    if (c_l <= 0.0) return std::exp(-mu * l);  // no excitation: plain Poisson gaps

    // Outer integral over source times, substituting w = y - t: the integrand
    // exp(-c_l e^{-beta w}) - 1 has magnitude <= c_l e^{-beta w}, so cut where
    // that bound falls below 1e-12 (truncation error <= 1e-12 / beta).
    const double w_end = std::max(1.0, std::log(c_l / 1e-12) / beta);
    const double outer = adaptive_simpson(
        [&](double w) { return std::expm1(-c_l * std::exp(-beta * w)); }, 0.0, w_end,
        kQuadRelTol);
    return std::exp(mu * outer - mu * l);
}

double LengthGrid::value(double t, double y) const {
    if (t_grid.empty() || y_grid.empty()) throw TheoryError("length grid is empty");
    auto locate = [](const std::vector<double>& g, double x, std::size_t& lo, double& frac) {
        if (x <= g.front()) {
            lo = 0;
            frac = 0.0;
            return;
        }
        if (x >= g.back()) {
            lo = g.size() - 1;
            frac = 0.0;
            return;
        }
        const auto it = std::upper_bound(g.begin(), g.end(), x);
        lo = static_cast<std::size_t>(it - g.begin()) - 1;
        frac = (x - g[lo]) / (g[lo + 1] - g[lo]);
    };
    std::size_t it_lo, iy_lo;
    double ft, fy;
    locate(t_grid, t, it_lo, ft);
    locate(y_grid, y, iy_lo, fy);
    const std::size_t it_hi = std::min(it_lo + 1, t_grid.size() - 1);
    const std::size_t iy_hi = std::min(iy_lo + 1, y_grid.size() - 1);
    const double v00 = d_values(it_lo, iy_lo), v01 = d_values(it_lo, iy_hi);
    const double v10 = d_values(it_hi, iy_lo), v11 = d_values(it_hi, iy_hi);
    return (1.0 - ft) * ((1.0 - fy) * v00 + fy * v01) + ft * ((1.0 - fy) * v10 + fy * v11);
}

LengthGrid cluster_length_cdf(const ModelSpec& model, const LengthGridSpec& grid) {
    require_univariate(model, "cluster_length_cdf");
    if (!(grid.step > 0.0) || !(grid.t_max >= 0.0) || !(grid.y_max >= 0.0))
        throw ArgumentError("cluster_length_cdf: grid steps and extents must be positive");
    require_stable(model, "cluster_length_cdf");

    const double h = grid.step;
    const auto n_t = static_cast<std::size_t>(std::llround(grid.t_max / h)) + 1;
    const auto n_y = static_cast<std::size_t>(std::llround(grid.y_max / h)) + 1;
    // The recursion reads D at ancestor times up to t + y; tabulate an
    // extended t range so those reads stay on the grid, and clamp past its far
    // edge where the multiplier has flattened out.
    const std::size_t n_t_ext = n_t + n_y - 1;

    const double beta = model.kernel.beta(0, 0);
    std::vector<double> m_of_t(n_t_ext), alpha_of_t(n_t_ext), kernel_w(n_y);
    for (std::size_t i = 0; i < n_t_ext; ++i) {
        const double t = static_cast<double>(i) * h;
        m_of_t[i] = mean_first_generation(model, t);
        alpha_of_t[i] = multiplier_value(model.alpha, 0, 0, t) * model.a.a(0, 0);
    }
    for (std::size_t k = 0; k < n_y; ++k)
        kernel_w[k] = std::exp(-beta * static_cast<double>(k) * h);

    Mat d(n_t_ext, n_y, 0.0);
    Mat next(n_t_ext, n_y, 0.0);
    for (std::size_t i = 0; i < n_t_ext; ++i)
        for (std::size_t j = 0; j < n_y; ++j) d(i, j) = std::exp(-m_of_t[i]);

    const std::size_t max_iters = 10000;
    double residual = std::numeric_limits<double>::infinity();
    std::size_t iters = 0;
    bool monotone = true;
    while (iters < max_iters) {
        ++iters;
        residual = 0.0;
        for (std::size_t i = 0; i < n_t_ext; ++i) {
            next(i, 0) = std::exp(-m_of_t[i]);
            for (std::size_t j = 1; j < n_y; ++j) {
                // Trapezoid over s = tau - t on the aligned grid: the sample
                // at offset k reads D(t + kh, y - kh), a grid node (clamped in
                // t past the extended edge).
                double acc = 0.0;
                for (std::size_t k = 0; k <= j; ++k) {
                    const std::size_t row = std::min(i + k, n_t_ext - 1);
                    const double f = d(row, j - k) * alpha_of_t[row] * kernel_w[k];
                    acc += (k == 0 || k == j) ? 0.5 * f : f;
                }
                next(i, j) = std::exp(-m_of_t[i] + acc * h);
            }
        }
        for (std::size_t i = 0; i < n_t_ext; ++i)
            for (std::size_t j = 0; j < n_y; ++j) {
                if (next(i, j) < d(i, j) - 1e-12) monotone = false;
                residual = std::max(residual, std::abs(next(i, j) - d(i, j)));
                d(i, j) = next(i, j);
            }
        if (residual < 1e-8) break;
    }
    if (residual >= 1e-8)
        throw TheoryError("cluster_length_cdf: Picard iteration did not converge (residual " +
                          std::to_string(residual) + ")");

    LengthGrid out;
    out.iterations = iters;
    out.residual = residual;
    out.monotone_sweeps = monotone;
    out.t_grid.resize(n_t);
    out.y_grid.resize(n_y);
    for (std::size_t i = 0; i < n_t; ++i) out.t_grid[i] = static_cast<double>(i) * h;
    for (std::size_t j = 0; j < n_y; ++j) out.y_grid[j] = static_cast<double>(j) * h;
    out.d_values = Mat(n_t, n_y, 0.0);
    for (std::size_t i = 0; i < n_t; ++i)
        for (std::size_t j = 0; j < n_y; ++j)
            out.d_values(i, j) = std::min(1.0, std::max(0.0, d(i, j)));
    return out;
}

McEstimate mc_residual_time(const ModelSpec& model, double y, double l,
                            std::size_t replicates, std::uint64_t rng_seed) {
    validate(model);
    if (y < 0.0 || l < 0.0) throw ArgumentError("mc_residual_time: y and l must be >= 0");
    require_stable(model, "mc_residual_time");
    McEstimate est;
    est.replicates = replicates;
    if (replicates == 0) return est;
    if (l == 0.0) {
        est.value = 1.0;
        return est;
    }

    SimConfig cfg;
    cfg.model = model;
    cfg.horizon = y + l;
    cfg.seeds.num_nodes = static_cast<int>(model.dim());
    cfg.seeds.horizon = cfg.horizon;

    std::vector<std::uint8_t> empty_window(replicates, 0);
    parallel_for(replicates, [&](std::size_t r) {
        SimConfig local = cfg;
        local.rng_seed = rng_seed + r;
        const BranchingResult sim = simulate_branching(local);
        // The analytic survivor integrates immigrants and their direct
        // offspring only (its inner factor is the first-generation avoidance
        // probability), so the empirical companion samples the same law:
        // deeper generations are left out of the window scan.
        bool hit = false;
        for (const ClusterTree& tree : sim.clusters) {
            if (tree.time > y && tree.time < y + l) hit = true;
            for (const ClusterTree& child : tree.children)
                if (child.time > y && child.time < y + l) hit = true;
            if (hit) break;
        }
        empty_window[r] = hit ? 0 : 1;
    });

    double hits = 0.0;
    for (std::uint8_t v : empty_window) hits += v;
    const double p = hits / static_cast<double>(replicates);
    est.value = p;
    est.std_error = std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(replicates)));
    return est;
}

EmpiricalCdf mc_cluster_length(const ModelSpec& model, double t,
                               const std::vector<double>& y_grid, std::size_t replicates,
                               std::uint64_t rng_seed) {
    validate(model);
    if (t < 0.0) throw ArgumentError("mc_cluster_length: t must be >= 0");
    if (y_grid.empty() || !std::is_sorted(y_grid.begin(), y_grid.end()) || y_grid.front() < 0.0)
        throw ArgumentError("mc_cluster_length: y_grid must be sorted and nonnegative");
    require_stable(model, "mc_cluster_length");

    EmpiricalCdf cdf;
    cdf.y_grid = y_grid;
    cdf.probs.assign(y_grid.size(), 0.0);
    cdf.replicates = replicates;
    if (replicates == 0) return cdf;

    // Root one cluster at t: suppress immigration and seed a single ancestor.
    SimConfig cfg;
    cfg.model = model;
    cfg.model.mu.assign(model.dim(), 0.0);
    const std::vector<double>& betas = cfg.model.kernel.beta.data();
    const double beta_min = *std::min_element(betas.begin(), betas.end());
    cfg.horizon = t + y_grid.back() + 60.0 / beta_min;
    cfg.seeds.num_nodes = static_cast<int>(model.dim());
    cfg.seeds.horizon = cfg.horizon;
    cfg.seeds.events.push_back({t, 0});

    std::vector<double> length(replicates, 0.0);
    parallel_for(replicates, [&](std::size_t r) {
        SimConfig local = cfg;
        local.rng_seed = rng_seed + r;
        const BranchingResult sim = simulate_branching(local);
        double last = t;
        for (const Event& e : sim.stream.events) last = std::max(last, e.time);
        length[r] = last - t;
    });

    for (double len : length)
        for (std::size_t j = 0; j < y_grid.size(); ++j)
            if (len <= y_grid[j] + 1e-12) ++cdf.probs[j];
    for (double& p : cdf.probs) p /= static_cast<double>(replicates);
    return cdf;
}

}  // namespace eah
