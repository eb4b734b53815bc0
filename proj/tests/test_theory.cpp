#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "eah/decay.hpp"
#include "eah/errors.hpp"
#include "eah/theory.hpp"
#include "eah/types.hpp"

using namespace eah;

namespace {

ModelSpec covid_univariate(double mu, double a, double beta) {
    return univariate_model(mu, a, beta, ScalarDecayMultiplier{DecaySpec::covid_default()});
}

}  // namespace

TEST_CASE("constant multipliers give the closed-form first-generation mean") {
    ModelSpec model = univariate_model(1.0, 1.0, 2.0, ConstantMultiplier{3.0});
    CHECK(mean_first_generation(model, 0.0) == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(mean_first_generation(model, 7.5) == doctest::Approx(1.5).epsilon(1e-10));

    ModelSpec quiet = univariate_model(1.0, 1.0, 2.0, ConstantMultiplier{0.0});
    CHECK(mean_first_generation(quiet, 3.0) == 0.0);

    ModelSpec scaled = univariate_model(1.0, 0.5, 1.0);
    CHECK(mean_first_generation(scaled, 11.0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("decayed first-generation mean matches a brute-force trapezoid") {
    ModelSpec model = covid_univariate(1.0, 1.0, 0.5);
    const double u = 10.0;
    const double got = mean_first_generation(model, u);

    const DecaySpec d = DecaySpec::covid_default();
    const double hi = u + 120.0;  // the exponential tail beyond this is ~1e-26
    const std::size_t n = 1000000;
    const double h = (hi - u) / static_cast<double>(n);
    auto f = [&](double t) { return eval_decay(d, t) * std::exp(-0.5 * (t - u)); };
    double acc = 0.5 * (f(u) + f(hi));
    for (std::size_t k = 1; k < n; ++k) acc += f(u + h * static_cast<double>(k));
    const double oracle = acc * h;

    CHECK(std::fabs(got - oracle) < 1e-6);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("stability verdicts for the classical constant cases") {
    ModelSpec stable = univariate_model(1.0, 0.5, 1.0);
    const TheoryReport ok = stability_check(stable);
    CHECK(ok.sup_m == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(ok.stable);
    CHECK(ok.intensity_bound == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(branching_sup(stable) == doctest::Approx(0.5).epsilon(1e-9));

    ModelSpec hot = univariate_model(1.0, 1.5, 1.0);
    const TheoryReport bad = stability_check(hot);
    CHECK(bad.sup_m == doctest::Approx(1.5).epsilon(1e-9));
    CHECK_FALSE(bad.stable);
    CHECK(std::isinf(bad.intensity_bound));
}

TEST_CASE("decayed stability peaks at the origin and matches a dense grid") {
    ModelSpec model = covid_univariate(1.0, 1.0, 0.5);
    const TheoryReport report = stability_check(model);

    double grid_max = 0.0, at_zero = mean_first_generation(model, 0.0);
    for (double u = 0.0; u <= 60.0; u += 0.05)
        grid_max = std::max(grid_max, mean_first_generation(model, u));
    CHECK(grid_max == doctest::Approx(at_zero).epsilon(1e-9));
    CHECK(report.sup_m == doctest::Approx(grid_max).epsilon(1e-6));
    CHECK(report.stable);

    // The report's per-u values agree with the scalar quadrature.
    REQUIRE(report.u_grid.size() == report.m_values.size());
    for (std::size_t k = 0; k < report.u_grid.size(); k += 17)
        CHECK(report.m_values[k] ==
              doctest::Approx(mean_first_generation(model, report.u_grid[k])).epsilon(1e-8));
}

TEST_CASE("multivariate stability reports row sums and the spectral radius") {
    ModelSpec model;
    model.mu = {0.2, 0.2};
    Mat a(2, 2, 0.0);
    a(0, 1) = 0.9;
    a(1, 0) = 0.1;
    model.a = BranchingMatrix::dense(a);
    model.kernel = KernelSpec::uniform(2, 1.0);

    const TheoryReport report = stability_check(model);
    CHECK(report.sup_m == doctest::Approx(0.9).epsilon(1e-9));  // worst row sum
    CHECK(report.stable);
    CHECK(report.spectral_radius_sup == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(report.spectral_radius_sup < report.sup_m);

    Mat plain(2, 2, 0.0);
    plain(0, 1) = 0.9;
    plain(1, 0) = 0.1;
    CHECK(spectral_radius(plain) == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("residual survivor of a pure Poisson process is exponential") {
    ModelSpec model = univariate_model(0.7, 1.0, 1.0, ConstantMultiplier{0.0});
    for (double l : {0.0, 0.5, 1.0, 2.0, 4.0})
        CHECK(residual_time_survivor(model, 3.0, l) ==
              doctest::Approx(std::exp(-0.7 * l)).epsilon(1e-10));
}

TEST_CASE("residual survivor maps l=0 to one and decreases in l") {
    ModelSpec model = univariate_model(1.0, 0.5, 1.0);
    CHECK(residual_time_survivor(model, 50.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    double prev = 2.0;
    for (double l = 0.0; l <= 5.0; l += 0.5) {
        const double r = residual_time_survivor(model, 50.0, l);
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
        CHECK(r < prev + 1e-12);
        prev = r;
    }
}

TEST_CASE("residual survivor rejects unstable models") {
    ModelSpec hot = univariate_model(1.0, 1.5, 1.0);
    CHECK_THROWS_AS(residual_time_survivor(hot, 5.0, 1.0), TheoryError);
    CHECK_THROWS_AS(cluster_length_cdf(hot), TheoryError);
}

TEST_CASE("Monte-Carlo residual time agrees with the Poisson closed form") {
    ModelSpec model = univariate_model(1.0, 1.0, 1.0, ConstantMultiplier{0.0});
    const McEstimate at_zero = mc_residual_time(model, 5.0, 0.0, 2000, 17);
    CHECK(at_zero.value == 1.0);

    const McEstimate mc = mc_residual_time(model, 5.0, 1.0, 20000, 17);
    CHECK(mc.replicates == 20000);
    CHECK(mc.std_error > 0.0);
    CHECK(std::fabs(mc.value - std::exp(-1.0)) < 3.0 * mc.std_error);
}

TEST_CASE("analytic and Monte-Carlo residual agree in equilibrium") {
    ModelSpec model = univariate_model(1.0, 0.5, 1.0);
    const double analytic = residual_time_survivor(model, 50.0, 1.0);
    const McEstimate mc = mc_residual_time(model, 50.0, 1.0, 20000, 23);
    CHECK(std::fabs(analytic - mc.value) < std::max(0.02, 4.0 * mc.std_error));
}

TEST_CASE("cluster length of a childless immigrant is degenerate at zero") {
    ModelSpec model = univariate_model(1.0, 1.0, 1.0, ConstantMultiplier{0.0});
    LengthGridSpec spec;
    spec.t_max = 2.0;
    spec.y_max = 2.0;
    spec.step = 0.5;
    const LengthGrid grid = cluster_length_cdf(model, spec);
    CHECK(grid.monotone_sweeps);
    for (double t : grid.t_grid)
        for (double y : grid.y_grid)
            CHECK(grid.value(t, y) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cluster-length grid starts at the no-offspring probability") {
    ModelSpec constant = univariate_model(1.0, 0.5, 1.0);
    LengthGridSpec spec;
    spec.t_max = 6.0;
    spec.y_max = 6.0;
    spec.step = 0.1;
    const LengthGrid grid = cluster_length_cdf(constant, spec);
    CHECK(grid.monotone_sweeps);
    CHECK(grid.residual < 1e-8);
    for (double t : {0.0, 1.0, 3.0, 6.0})
        CHECK(grid.value(t, 0.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

    ModelSpec decayed = covid_univariate(1.0, 1.0, 0.5);
    const LengthGrid dg = cluster_length_cdf(decayed, spec);
    for (double t : {0.0, 2.0, 5.0})
        CHECK(dg.value(t, 0.0) ==
              doctest::Approx(std::exp(-mean_first_generation(decayed, t))).epsilon(1e-10));
}

TEST_CASE("cluster-length values are probabilities, nondecreasing in y") {
    ModelSpec model = univariate_model(1.0, 0.5, 1.0);
    LengthGridSpec spec;
    spec.t_max = 8.0;
    spec.y_max = 8.0;
    spec.step = 0.1;
    const LengthGrid grid = cluster_length_cdf(model, spec);
    for (std::size_t ti = 0; ti < grid.t_grid.size(); ++ti) {
        double prev = 0.0;
        for (std::size_t yi = 0; yi < grid.y_grid.size(); ++yi) {
            const double v = grid.d_values(ti, yi);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
    }
    // Long clusters are rare for a subcritical model: the CDF should be close
    // to 1 by y = 8 for late roots.
    CHECK(grid.value(0.0, 8.0) > 0.9);
}

TEST_CASE("Monte-Carlo cluster length basics") {
    ModelSpec quiet = univariate_model(1.0, 1.0, 1.0, ConstantMultiplier{0.0});
    const EmpiricalCdf lone = mc_cluster_length(quiet, 0.0, {0.0, 1.0}, 500, 3);
    REQUIRE(lone.probs.size() == 2);
    CHECK(lone.probs[0] == 1.0);
    CHECK(lone.probs[1] == 1.0);

    ModelSpec model = univariate_model(1.0, 0.5, 1.0);
    const EmpiricalCdf cdf =
        mc_cluster_length(model, 0.0, {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}, 4000, 5);
    double prev = 0.0;
    for (double p : cdf.probs) {
        CHECK(p >= prev);
        CHECK(p <= 1.0);
        prev = p;
    }
}

TEST_CASE("analytic cluster-length CDF tracks the Monte-Carlo oracle") {
    ModelSpec model = univariate_model(1.0, 0.5, 1.0);
    LengthGridSpec spec;
    spec.t_max = 4.0;
    spec.y_max = 8.0;
    spec.step = 0.05;
    const LengthGrid grid = cluster_length_cdf(model, spec);
    const std::vector<double> ys = {0.0, 0.5, 1.0, 2.0, 4.0};
    const EmpiricalCdf mc = mc_cluster_length(model, 0.0, ys, 10000, 29);
    for (std::size_t k = 0; k < ys.size(); ++k)
        CHECK(std::fabs(grid.value(0.0, ys[k]) - mc.probs[k]) < 0.03);
}
