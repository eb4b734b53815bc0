#pragma once

#include <cstdint>
#include <vector>

#include "eah/decay.hpp"
#include "eah/mat.hpp"
#include "eah/types.hpp"

namespace eah {

// Everything the EM pass treats as fixed: mu, beta, the environmental
// multiplier, and the skeleton mask. Only A is estimated.
struct FitConfig {
    KernelSpec beta;
    EnvMultiplier decay = ConstantMultiplier{1.0};
    std::vector<double> mu;
    Mask mask;        // empty -> all entries free
    Mat init_a;       // empty -> 1 on the mask support
    std::size_t max_iters = 500;
    double tol = 1e-6;
    double horizon = 0.0;  // <= 0 -> use the stream/bin horizon
    // Leading events conditioned on rather than attributed: they act as
    // triggers and enter the compensator, but get no responsibility row.
    // Needed when mu = 0 and the process is kicked off by given arrivals.
    std::size_t seed_count = 0;
    // Replace the horizon-evaluated multiplier in the M-step denominator with
    // the exact integrated excitation mass.
    bool exact_compensator = false;

    std::size_t dim() const { return mu.size(); }
};

void validate(const FitConfig& cfg);

// Continuous responsibilities: row i holds p_ij for j = 0..i with the
// background share at index i. Rows for conditioned-on seeds stay empty.
using Responsibilities = std::vector<std::vector<double>>;

// Binned responsibilities: background share per (bin, node), plus the
// per-node-pair matrices p[u*M+v](i,j) when small enough to store.
struct BinnedEstep {
    Mat background;          // bins x nodes; -1 where the row is conditioned on
    std::vector<Mat> pairs;  // per (u,v): bins x bins lower-triangular, j < i
    bool stored_pairs = false;
};

struct FitResult {
    BranchingMatrix a_hat;
    std::vector<double> lower_bound_trace;
    std::size_t iterations = 0;
    bool converged = false;
    Responsibilities responsibilities;  // continuous fits, small streams only
    BinnedEstep binned;                 // binned fits
};

// One E-step / M-step / full EM pass over event-level data.
Responsibilities em_estep_continuous(const BranchingMatrix& a, const FitConfig& cfg,
                                     const EventStream& stream);
BranchingMatrix em_mstep_continuous(const Responsibilities& p, const FitConfig& cfg,
                                    const EventStream& stream);
FitResult em_fit_continuous(const EventStream& stream, const FitConfig& cfg);

// Evaluate the complete-data lower bound at (a, p). Rows must carry their
// full unit of probability; mass missing from a row counts as attribution to
// a zero-rate cause and sends the bound to -infinity, as does explicit mass
// on a zero-rate trigger.
double lower_bound(const BranchingMatrix& a, const Responsibilities& p,
                   const FitConfig& cfg, const EventStream& stream);

// Binned variant on count data.
BinnedEstep em_estep_binned(const BranchingMatrix& a, const FitConfig& cfg,
                            const BinnedCounts& binned);
FitResult em_fit_binned(const BinnedCounts& binned, const FitConfig& cfg);

// Post-hoc calibration. Pin mode rescales so one entry matches a known value.
BranchingMatrix calibrate_pin(const BranchingMatrix& a_hat, std::size_t i, std::size_t j,
                              double value);

// Scale mode: c* minimizing the RMSE between c-scaled predictions and
// observed counts (golden-section over [1e-4, 1e4]). Predictions must scale
// linearly in A, i.e. come from a mu = 0 model.
struct ScaleCalibration {
    BranchingMatrix a;
    double scale = 1.0;
    double rmse = 0.0;
};
ScaleCalibration calibrate_scale(const BranchingMatrix& a_hat, const Mat& predicted,
                                 const Mat& observed);

}  // namespace eah
