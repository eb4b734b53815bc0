#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "eah/forecast.hpp"
#include "eah/types.hpp"

namespace eah {

// The three-node benchmark: beta = 0.5 everywhere, mu = 0, skeleton with
// free entries (0,1), (1,0), (2,1), truth A_{0,1} in {1.5, 1.8, 2.0},
// A_{1,0} = 1.5, A_{2,1} in {1.5, 1.2, 1.0}.
ModelSpec table1_model(std::size_t sim_index, bool covid_multiplier = false);

// Two conditioned-on arrivals per node on day one (07:00 and 14:00), ties
// nudged apart.
EventStream table1_seeds(double horizon);

struct Table1Report {
    // Entries ordered A_{0,1}, A_{1,0}, A_{2,1} (the table's three columns).
    std::vector<std::array<double, 3>> truth;                 // per simulation
    std::vector<std::vector<std::array<double, 3>>> estimates;  // [run][simulation]
    std::vector<std::array<double, 3>> median;                // per simulation
    std::vector<std::size_t> iterations;                      // worst case per simulation
};

// Full pipeline: simulate 8 days by thinning, bin at 0.1, fit the binned EM
// with the known skeleton, pin A_{1,0} = 1.5.
Table1Report reproduce_table1(std::uint64_t seed, std::size_t runs = 1,
                              bool covid_multiplier = false, double delta = 0.1);

struct ForecastDemoEntry {
    std::string model;  // "eahdm" or "hawkes"
    double beta = 0.0;
    double scale = 1.0;       // calibration factor applied to A-hat
    double rmse_full = 0.0;   // all predicted bins
    double rmse_late = 0.0;   // last third of the window
    double late_bias = 0.0;   // mean(predicted - observed) on the late window
};

struct ForecastDemoReport {
    BinnedCounts data;  // daily bins of the synthetic outbreak
    std::vector<ForecastDemoEntry> entries;
    PredictionSeries eahdm_predictions;   // beta = 0.5, calibrated
    PredictionSeries hawkes_predictions;  // beta = 0.5, calibrated
};

// Synthetic stand-in for the case-count experiment: a four-node outbreak
// whose wave rises and then fades under the decaying multiplier, fitted by
// both a static-kernel model and the decaying-multiplier model at
// beta in {0.5, 0.1}, each scale-calibrated on its own predictions.
ForecastDemoReport reproduce_forecast_demo(std::uint64_t seed);

// The generator behind the demo (exposed for tests).
ModelSpec forecast_demo_generator();

}  // namespace eah
