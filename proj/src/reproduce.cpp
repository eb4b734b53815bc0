#include "eah/reproduce.hpp"

#include <algorithm>
#include <cmath>

#include "eah/errors.hpp"
#include "eah/estimate.hpp"
#include "eah/simulate.hpp"

namespace eah {

namespace {

constexpr double kTable1Horizon = 8.0;

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

ModelSpec table1_model(std::size_t sim_index, bool covid_multiplier) {
    if (sim_index >= 3) throw ArgumentError("table1_model: simulation index must be 0..2");
    const double a01[] = {1.5, 1.8, 2.0};
    const double a21[] = {1.5, 1.2, 1.0};

    ModelSpec model;
    model.mu = {0.0, 0.0, 0.0};
    Mat a(3, 3, 0.0);
    a(0, 1) = a01[sim_index];
    a(1, 0) = 1.5;
    a(2, 1) = a21[sim_index];
    Mask mask(3, 3, false);
    mask.set(0, 1, true);
    mask.set(1, 0, true);
    mask.set(2, 1, true);
    model.a = BranchingMatrix{std::move(a), std::move(mask)};
    model.kernel = KernelSpec::uniform(3, 0.5);
    if (covid_multiplier)
        model.alpha = ScalarDecayMultiplier{DecaySpec::covid_default()};
    return model;
}

EventStream table1_seeds(double horizon) {
    EventStream seeds;
    seeds.num_nodes = 3;
    seeds.horizon = horizon;
    for (double t : {7.0 / 24.0, 14.0 / 24.0})
        for (int node : {0, 1, 2}) seeds.events.push_back({t, node});
    sort_and_perturb_ties(seeds);
    return seeds;
}

Table1Report reproduce_table1(std::uint64_t seed, std::size_t runs, bool covid_multiplier,
                              double delta) {
    if (runs == 0) throw ArgumentError("reproduce_table1: runs must be >= 1");
    Table1Report report;
    report.truth.resize(3);
    report.median.resize(3);
    report.iterations.assign(3, 0);
    report.estimates.assign(runs, std::vector<std::array<double, 3>>(3));

    for (std::size_t sim = 0; sim < 3; ++sim) {
        const ModelSpec model = table1_model(sim, covid_multiplier);
        report.truth[sim] = {model.a.a(0, 1), model.a.a(1, 0), model.a.a(2, 1)};

        FitConfig fit;
        fit.beta = model.kernel;
        fit.decay = model.alpha;
        fit.mu = model.mu;
        fit.mask = model.a.mask;

        for (std::size_t run = 0; run < runs; ++run) {
            SimConfig cfg;
            cfg.model = model;
            cfg.horizon = kTable1Horizon;
            cfg.seeds = table1_seeds(kTable1Horizon);
            cfg.rng_seed = seed + 1000 * run + sim;

            const EventStream stream = simulate_thinning(cfg);
            const BinnedCounts binned = bin_events(stream, delta);
            const FitResult result = em_fit_binned(binned, fit);
            const BranchingMatrix pinned = calibrate_pin(result.a_hat, 1, 0, 1.5);
            report.estimates[run][sim] = {pinned.a(0, 1), pinned.a(1, 0), pinned.a(2, 1)};
            report.iterations[sim] = std::max(report.iterations[sim], result.iterations);
        }

        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<double> column;
            column.reserve(runs);
            for (std::size_t run = 0; run < runs; ++run)
                column.push_back(report.estimates[run][sim][k]);
            report.median[sim][k] = median_of(std::move(column));
        }
    }
    return report;
}

ModelSpec forecast_demo_generator() {
    ModelSpec model;
    model.mu = {0.0, 0.0, 0.0, 0.0};
    Mat a(4, 4, 0.0);
    a(0, 0) = 60.0;
    a(0, 1) = 6.0;
    a(1, 0) = 8.0;
    a(1, 1) = 55.0;
    a(1, 2) = 5.0;
    a(2, 1) = 7.0;
    a(2, 2) = 50.0;
    a(2, 3) = 4.0;
    a(3, 2) = 6.0;
    a(3, 3) = 45.0;
    model.a = BranchingMatrix::dense(std::move(a));
    model.kernel = KernelSpec::uniform(4, 0.5);
    model.alpha = ScalarDecayMultiplier{DecaySpec::covid_default()};
    return model;
}

namespace {

struct DemoFit {
    ForecastDemoEntry entry;
    PredictionSeries predictions;
};

DemoFit fit_demo_model(const std::string& name, double beta, const EnvMultiplier& alpha,
                       const BinnedCounts& data) {
    const std::size_t m = data.num_nodes();
    FitConfig fit;
    fit.beta = KernelSpec::uniform(m, beta);
    fit.decay = alpha;
    fit.mu.assign(m, 0.0);

    const FitResult result = em_fit_binned(data, fit);

    ModelSpec model;
    model.mu.assign(m, 0.0);
    model.a = result.a_hat;
    model.kernel = fit.beta;
    model.alpha = alpha;

    const std::size_t bins = data.num_bins();
    PredictionSeries raw = rolling_one_step(model, data, 1, bins);
    const ScaleCalibration cal = calibrate_scale(result.a_hat, raw.predicted, raw.observed);

    model.a = cal.a;
    PredictionSeries series = rolling_one_step(model, data, 1, bins);

    // Late window: the final third of the predicted bins.
    const std::size_t rows = series.rows();
    const std::size_t late_from = rows - rows / 3;
    double acc_late = 0.0, bias = 0.0;
    std::size_t n_late = 0;
    for (std::size_t r = late_from; r < rows; ++r)
        for (std::size_t u = 0; u < m; ++u) {
            const double diff = series.predicted(r, u) - series.observed(r, u);
            acc_late += diff * diff;
            bias += diff;
            ++n_late;
        }

    DemoFit out;
    out.entry.model = name;
    out.entry.beta = beta;
    out.entry.scale = cal.scale;
    out.entry.rmse_full = series.rmse();
    out.entry.rmse_late = n_late > 0 ? std::sqrt(acc_late / static_cast<double>(n_late)) : 0.0;
    out.entry.late_bias = n_late > 0 ? bias / static_cast<double>(n_late) : 0.0;
    out.predictions = std::move(series);
    return out;
}

}  // namespace

ForecastDemoReport reproduce_forecast_demo(std::uint64_t seed) {
    const double horizon = 27.0;
    SimConfig cfg;
    cfg.model = forecast_demo_generator();
    cfg.horizon = horizon;
    cfg.seeds.num_nodes = 4;
    cfg.seeds.horizon = horizon;
    for (double t : {7.0 / 24.0, 14.0 / 24.0})
        for (int node : {0, 1, 2, 3}) cfg.seeds.events.push_back({t, node});
    sort_and_perturb_ties(cfg.seeds);
    cfg.rng_seed = seed;

    const EventStream stream = simulate_thinning(cfg);

    ForecastDemoReport report;
    report.data = bin_events(stream, 1.0);

    const EnvMultiplier decaying = ScalarDecayMultiplier{DecaySpec::covid_default()};
    const EnvMultiplier flat = ConstantMultiplier{1.0};
    for (double beta : {0.5, 0.1}) {
        DemoFit eahdm = fit_demo_model("eahdm", beta, decaying, report.data);
        DemoFit hawkes = fit_demo_model("hawkes", beta, flat, report.data);
        if (beta == 0.5) {
            report.eahdm_predictions = eahdm.predictions;
            report.hawkes_predictions = hawkes.predictions;
        }
        report.entries.push_back(std::move(eahdm.entry));
        report.entries.push_back(std::move(hawkes.entry));
    }
    return report;
}

}  // namespace eah
