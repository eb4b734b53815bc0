#pragma once

#include <vector>

#include "eah/mat.hpp"
#include "eah/types.hpp"

namespace eah {

// Rolling one-step expected counts, one row per predicted bin.
struct PredictionSeries {
    std::size_t start = 0;  // first predicted bin index
    std::size_t end = 0;    // one past the last predicted bin index
    Mat predicted;          // (end - start) x M
    Mat observed;           // same shape when has_observed
    bool has_observed = false;

    std::size_t rows() const { return predicted.rows(); }
    double rmse() const;
};

// Expected count per node over bin `next_bin`, conditioning on the binned
// history. Bin masses sit at their bin centers, so lags are whole multiples
// of delta; the environmental multiplier is evaluated at the predicted bin's
// midpoint.
std::vector<double> predict_one_step(const ModelSpec& model, const BinnedCounts& history,
                                     std::size_t next_bin);

// One-step predictions for every bin in [start, end), each conditioned on the
// observed bins before it (never on earlier predictions).
PredictionSeries rolling_one_step(const ModelSpec& model, const BinnedCounts& binned,
                                  std::size_t start, std::size_t end);

}  // namespace eah
