#include "eah/forecast.hpp"

#include <cmath>
#include <string>

#include "eah/decay.hpp"
#include "eah/errors.hpp"
#include "eah/intensity.hpp"

namespace eah {

double PredictionSeries::rmse() const {
    if (!has_observed) throw ArgumentError("prediction series has no observed counts");
    if (predicted.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < predicted.data().size(); ++k) {
        const double d = predicted.data()[k] - observed.data()[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(predicted.data().size()));
}

std::vector<double> predict_one_step(const ModelSpec& model, const BinnedCounts& history,
                                     std::size_t next_bin) {
    validate(model);
    validate(history);
    const std::size_t m = model.dim();
    const std::size_t bins = history.num_bins();
    if (bins > 0 && history.num_nodes() != m)
        throw ConfigError("binned history does not match the model dimension");
    if (next_bin != bins)
        throw ArgumentError("predict_one_step: next_bin must be " + std::to_string(bins) +
                            ", the bin after the history");

    const double delta = history.delta;
    const double t_mid =
        history.origin + delta * (static_cast<double>(next_bin) + 0.5);

    std::vector<double> pred(m, 0.0);
    for (std::size_t u = 0; u < m; ++u) {
        double acc = model.mu[u] * delta;
        for (std::size_t v = 0; v < m; ++v) {
            const double a = model.a.a(u, v);
            if (a == 0.0) continue;
            const double alpha = multiplier_value(model.alpha, u, v, t_mid);
            if (alpha == 0.0) continue;
            const double beta = model.kernel.beta(u, v);
            for (std::size_t j = 0; j < bins; ++j) {
                const double n_jv = static_cast<double>(history.counts[j][v]);
                if (n_jv == 0.0) continue;
                // Center-to-center lag: bins - j whole steps to the predicted
                // bin, integrated over one bin width ending there.
                const double lag = delta * static_cast<double>(bins - j);
                acc += n_jv * alpha * a * kernel_integral(beta, lag - delta, lag);
            }
        }
        pred[u] = acc;
    }
    return pred;
}

PredictionSeries rolling_one_step(const ModelSpec& model, const BinnedCounts& binned,
                                  std::size_t start, std::size_t end) {
    validate(model);
    validate(binned);
    const std::size_t bins = binned.num_bins();
    if (start < 1 || end < start || end > bins)
        throw ArgumentError("rolling_one_step: need 1 <= start <= end <= bin count");

    const std::size_t m = model.dim();
    PredictionSeries series;
    series.start = start;
    series.end = end;
    series.predicted = Mat(end - start, m, 0.0);
    series.observed = Mat(end - start, m, 0.0);
    series.has_observed = true;

    BinnedCounts prefix;
    prefix.delta = binned.delta;
    prefix.origin = binned.origin;
    for (std::size_t r = start; r < end; ++r) {
        prefix.counts.assign(binned.counts.begin(),
                             binned.counts.begin() + static_cast<long>(r));
        const std::vector<double> p = predict_one_step(model, prefix, r);
        for (std::size_t u = 0; u < m; ++u) {
            series.predicted(r - start, u) = p[u];
            series.observed(r - start, u) = static_cast<double>(binned.counts[r][u]);
        }
    }
    return series;
}

}  // namespace eah
