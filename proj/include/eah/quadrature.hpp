#pragma once

#include <cmath>
#include <vector>

#include "eah/decay.hpp"

namespace eah {

namespace detail {

template <class F>
double simpson_step(F&& f, double a, double fa, double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb, double m,
                            double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_step(f, a, fa, m, fm, lm, flm);
    const double right = simpson_step(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson on [a, b]. `tol` is treated as a relative tolerance scaled
// by a first coarse estimate of the integral's magnitude (with an absolute
// floor so near-zero integrals terminate).
template <class F>
double adaptive_simpson(F&& f, double a, double b, double rel_tol = 1e-8, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = detail::simpson_step(f, a, fa, b, fb, m, fm);
    const double scale = std::max(std::abs(whole), 1e-12);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, rel_tol * scale,
                                        max_depth);
}

// Integrates f over [a, b] split at the decay spec's interior piece
// boundaries, so the adaptive rule never straddles a kink.
template <class F>
double integrate_split_at_pieces(F&& f, double a, double b, const DecaySpec& spec,
                                 double rel_tol = 1e-8) {
    if (!(b > a)) return 0.0;
    std::vector<double> cuts{a};
    for (const auto& piece : spec.pieces) {
        if (piece.from > a && piece.from < b) cuts.push_back(piece.from);
    }
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        total += adaptive_simpson(f, cuts[k], cuts[k + 1], rel_tol);
    return total;
}

}  // namespace eah
