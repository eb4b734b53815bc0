// Python surface: thin converters around the C++ core. Matrices travel as
// nested lists, events as (time, node) tuples, reports as dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eah/errors.hpp"
#include "eah/estimate.hpp"
#include "eah/forecast.hpp"
#include "eah/intensity.hpp"
#include "eah/reproduce.hpp"
#include "eah/simulate.hpp"
#include "eah/theory.hpp"
#include "eah/types.hpp"

namespace py = pybind11;
using namespace eah;

namespace {

using Rows = std::vector<std::vector<double>>;

Mat mat_from(const Rows& rows, const char* what) {
    if (rows.empty()) return {};
    Mat m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw ArgumentError(std::string(what) + ": ragged matrix");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

Rows mat_to(const Mat& m) {
    Rows rows(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
    return rows;
}

KernelSpec kernel_from(const py::object& beta, std::size_t dim) {
    if (py::isinstance<py::float_>(beta) || py::isinstance<py::int_>(beta))
        return KernelSpec::uniform(dim, beta.cast<double>());
    return KernelSpec{mat_from(beta.cast<Rows>(), "beta")};
}

Mask mask_from(const py::object& mask, std::size_t dim) {
    if (mask.is_none()) return {};
    const auto rows = mask.cast<std::vector<std::vector<bool>>>();
    if (rows.size() != dim) throw ArgumentError("mask: wrong number of rows");
    Mask out(dim, dim, false);
    for (std::size_t i = 0; i < dim; ++i) {
        if (rows[i].size() != dim) throw ArgumentError("mask: ragged matrix");
        for (std::size_t j = 0; j < dim; ++j) out.set(i, j, rows[i][j]);
    }
    return out;
}

EnvMultiplier multiplier_from(const py::object& multiplier) {
    if (multiplier.is_none()) return ConstantMultiplier{1.0};
    if (py::isinstance<py::str>(multiplier)) {
        const auto name = multiplier.cast<std::string>();
        if (name == "covid") return ScalarDecayMultiplier{DecaySpec::covid_default()};
        if (name == "constant") return ConstantMultiplier{1.0};
        throw ArgumentError("multiplier: expected 'constant', 'covid', or a number");
    }
    return ConstantMultiplier{multiplier.cast<double>()};
}

ModelSpec model_from(const std::vector<double>& mu, const Rows& a, const py::object& beta,
                     const py::object& mask, const py::object& multiplier) {
    ModelSpec model;
    model.mu = mu;
    Mat values = mat_from(a, "a");
    Mask support = mask_from(mask, mu.size());
    if (support.empty())
        model.a = BranchingMatrix::dense(std::move(values));
    else
        model.a = BranchingMatrix{std::move(values), std::move(support)};
    model.kernel = kernel_from(beta, mu.size());
    model.alpha = multiplier_from(multiplier);
    validate(model);
    return model;
}

using PyEvents = std::vector<std::pair<double, int>>;

EventStream stream_from(const PyEvents& events, int num_nodes, double horizon) {
    EventStream stream;
    stream.events.reserve(events.size());
    int max_node = -1;
    double last = 0.0;
    for (const auto& [t, node] : events) {
        stream.events.push_back({t, node});
        if (node > max_node) max_node = node;
        if (t > last) last = t;
    }
    stream.num_nodes = num_nodes > 0 ? num_nodes : max_node + 1;
    stream.horizon = horizon > 0 ? horizon : last;
    sort_and_perturb_ties(stream);
    validate(stream);
    return stream;
}

PyEvents stream_to(const EventStream& stream) {
    PyEvents out;
    out.reserve(stream.events.size());
    for (const Event& e : stream.events) out.emplace_back(e.time, e.node);
    return out;
}

BinnedCounts binned_from(const std::vector<std::vector<long>>& counts, double delta,
                         double origin) {
    BinnedCounts binned;
    binned.delta = delta;
    binned.origin = origin;
    binned.counts = counts;
    validate(binned);
    return binned;
}

FitConfig fit_config_from(const std::vector<double>& mu, const py::object& beta,
                          const py::object& mask, const py::object& multiplier, double tol,
                          std::size_t max_iters, double horizon, std::size_t seed_count,
                          bool exact_compensator) {
    FitConfig cfg;
    cfg.mu = mu;
    cfg.beta = kernel_from(beta, mu.size());
    cfg.mask = mask_from(mask, mu.size());
    cfg.decay = multiplier_from(multiplier);
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    cfg.horizon = horizon;
    cfg.seed_count = seed_count;
    cfg.exact_compensator = exact_compensator;
    validate(cfg);
    return cfg;
}

py::dict fit_result_to(const FitResult& result) {
    py::dict d;
    d["a_hat"] = mat_to(result.a_hat.a);
    d["lower_bound_trace"] = result.lower_bound_trace;
    d["iterations"] = result.iterations;
    d["converged"] = result.converged;
    return d;
}

py::dict series_to(const PredictionSeries& series) {
    py::dict d;
    d["start"] = series.start;
    d["end"] = series.end;
    d["predicted"] = mat_to(series.predicted);
    if (series.has_observed) {
        d["observed"] = mat_to(series.observed);
        d["rmse"] = series.rmse();
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(eah, m) {
    m.doc() = "Environmentally adaptive Hawkes processes: simulation, EM estimation, "
              "one-step forecasting, and cluster theory";
    m.attr("__version__") = "0.1.0";

    py::register_exception<Error>(m, "Error");

    py::class_<ModelSpec>(m, "Model")
        .def(py::init(&model_from), py::arg("mu"), py::arg("a"), py::arg("beta"),
             py::arg("mask") = py::none(), py::arg("multiplier") = py::none(),
             "Point-process model: immigrant rates mu, branching matrix a, exponential "
             "kernel rates beta (scalar or matrix), optional support mask, and an "
             "environmental multiplier (None/number for a constant, 'covid' for the "
             "built-in decay).")
        .def_property_readonly("dim", &ModelSpec::dim)
        .def_property_readonly("mu", [](const ModelSpec& s) { return s.mu; })
        .def_property_readonly("a", [](const ModelSpec& s) { return mat_to(s.a.a); })
        .def_property_readonly("beta",
                               [](const ModelSpec& s) { return mat_to(s.kernel.beta); });

    m.def(
        "simulate",
        [](const ModelSpec& model, double horizon, std::uint64_t seed, const PyEvents& seeds,
           const std::string& method, bool allow_unstable) {
            SimConfig cfg;
            cfg.model = model;
            cfg.horizon = horizon;
            cfg.rng_seed = seed;
            if (!seeds.empty())
                cfg.seeds = stream_from(seeds, static_cast<int>(model.dim()), horizon);
            else {
                cfg.seeds.num_nodes = static_cast<int>(model.dim());
                cfg.seeds.horizon = horizon;
            }
            if (method == "branching")
                return stream_to(simulate_branching(cfg, allow_unstable).stream);
            if (method != "thinning")
                throw ArgumentError("method: expected 'thinning' or 'branching'");
            return stream_to(simulate_thinning(cfg));
        },
        py::arg("model"), py::arg("horizon"), py::arg("seed") = 0,
        py::arg("seeds") = PyEvents{}, py::arg("method") = "thinning",
        py::arg("allow_unstable") = false,
        "Sample an event stream as a list of (time, node) pairs.");

    m.def(
        "bin_counts",
        [](const PyEvents& events, double delta, int num_nodes, double horizon) {
            return bin_events(stream_from(events, num_nodes, horizon), delta).counts;
        },
        py::arg("events"), py::arg("delta"), py::arg("num_nodes") = 0,
        py::arg("horizon") = 0.0, "Bin events into per-node counts of width delta.");

    m.def(
        "fit_events",
        [](const PyEvents& events, const std::vector<double>& mu, const py::object& beta,
           const py::object& mask, const py::object& multiplier, double tol,
           std::size_t max_iters, double horizon, std::size_t seed_count,
           bool exact_compensator) {
            const FitConfig cfg = fit_config_from(mu, beta, mask, multiplier, tol, max_iters,
                                                  horizon, seed_count, exact_compensator);
            const EventStream stream =
                stream_from(events, static_cast<int>(cfg.dim()), horizon);
            return fit_result_to(em_fit_continuous(stream, cfg));
        },
        py::arg("events"), py::arg("mu"), py::arg("beta"), py::arg("mask") = py::none(),
        py::arg("multiplier") = py::none(), py::arg("tol") = 1e-6,
        py::arg("max_iters") = 500, py::arg("horizon") = 0.0, py::arg("seed_count") = 0,
        py::arg("exact_compensator") = false,
        "EM fit of the branching matrix on an event stream.");

    m.def(
        "fit_binned",
        [](const std::vector<std::vector<long>>& counts, double delta,
           const std::vector<double>& mu, const py::object& beta, const py::object& mask,
           const py::object& multiplier, double tol, std::size_t max_iters, double origin,
           bool exact_compensator) {
            const FitConfig cfg = fit_config_from(mu, beta, mask, multiplier, tol, max_iters,
                                                  0.0, 0, exact_compensator);
            return fit_result_to(em_fit_binned(binned_from(counts, delta, origin), cfg));
        },
        py::arg("counts"), py::arg("delta"), py::arg("mu"), py::arg("beta"),
        py::arg("mask") = py::none(), py::arg("multiplier") = py::none(),
        py::arg("tol") = 1e-6, py::arg("max_iters") = 500, py::arg("origin") = 0.0,
        py::arg("exact_compensator") = false,
        "EM fit of the branching matrix on binned counts.");

    m.def(
        "predict",
        [](const ModelSpec& model, const std::vector<std::vector<long>>& counts,
           double delta, std::size_t start, py::object end, double origin) {
            const BinnedCounts binned = binned_from(counts, delta, origin);
            const std::size_t stop =
                end.is_none() ? binned.num_bins() : end.cast<std::size_t>();
            return series_to(rolling_one_step(model, binned, start, stop));
        },
        py::arg("model"), py::arg("counts"), py::arg("delta") = 1.0, py::arg("start") = 1,
        py::arg("end") = py::none(), py::arg("origin") = 0.0,
        "Rolling one-step expected counts over bins [start, end).");

    m.def(
        "intensity",
        [](const ModelSpec& model, const PyEvents& events, double t) {
            return eval_intensity(
                model, stream_from(events, static_cast<int>(model.dim()), 0.0), t);
        },
        py::arg("model"), py::arg("events"), py::arg("t"),
        "Conditional intensity per node at time t given the (strict) history.");

    m.def("branching_sup", &branching_sup, py::arg("model"),
          "Worst-row-sum branching ratio at ancestor time zero.");

    m.def(
        "stability",
        [](const ModelSpec& model, const std::vector<double>& u_grid) {
            const TheoryReport r = stability_check(model, u_grid);
            py::dict d;
            d["u_grid"] = r.u_grid;
            d["m_values"] = r.m_values;
            d["sup_m"] = r.sup_m;
            d["stable"] = r.stable;
            d["intensity_bound"] = r.intensity_bound;
            d["spectral_radius_sup"] = r.spectral_radius_sup;
            return d;
        },
        py::arg("model"), py::arg("u_grid") = std::vector<double>{},
        "Branching ratio m(u) on a grid with the implied mean-intensity bound.");

    m.def("residual_survivor", &residual_time_survivor, py::arg("model"), py::arg("y"),
          py::arg("l"),
          "Probability of no event in (y, y+l] for a stable univariate model in "
          "equilibrium.");

    m.def(
        "mc_residual",
        [](const ModelSpec& model, double y, double l, std::size_t replicates,
           std::uint64_t seed) {
            const McEstimate est = mc_residual_time(model, y, l, replicates, seed);
            py::dict d;
            d["value"] = est.value;
            d["std_error"] = est.std_error;
            d["replicates"] = est.replicates;
            return d;
        },
        py::arg("model"), py::arg("y"), py::arg("l"), py::arg("replicates") = 10000,
        py::arg("seed") = 1, "Monte-Carlo companion of residual_survivor.");

    m.def(
        "cluster_length",
        [](const ModelSpec& model, double t_max, double y_max, double step) {
            LengthGridSpec spec;
            spec.t_max = t_max;
            spec.y_max = y_max;
            spec.step = step;
            const LengthGrid grid = cluster_length_cdf(model, spec);
            py::dict d;
            d["t_grid"] = grid.t_grid;
            d["y_grid"] = grid.y_grid;
            d["d"] = mat_to(grid.d_values);
            d["iterations"] = grid.iterations;
            d["residual"] = grid.residual;
            return d;
        },
        py::arg("model"), py::arg("t_max") = 20.0, py::arg("y_max") = 20.0,
        py::arg("step") = 0.05,
        "Cluster-length CDF D_{J_t}(y) tabulated on a rectangular grid.");

    m.def(
        "mc_cluster_length",
        [](const ModelSpec& model, double t, const std::vector<double>& y_grid,
           std::size_t replicates, std::uint64_t seed) {
            const EmpiricalCdf cdf = mc_cluster_length(model, t, y_grid, replicates, seed);
            py::dict d;
            d["y_grid"] = cdf.y_grid;
            d["probs"] = cdf.probs;
            d["replicates"] = cdf.replicates;
            return d;
        },
        py::arg("model"), py::arg("t"), py::arg("y_grid"), py::arg("replicates") = 2000,
        py::arg("seed") = 1, "Monte-Carlo companion of cluster_length.");

    m.def(
        "reproduce_table1",
        [](std::uint64_t seed, std::size_t runs, bool covid_multiplier, double delta) {
            const Table1Report rep = reproduce_table1(seed, runs, covid_multiplier, delta);
            py::dict d;
            d["truth"] = rep.truth;
            d["estimates"] = rep.estimates;
            d["median"] = rep.median;
            d["iterations"] = rep.iterations;
            return d;
        },
        py::arg("seed") = 1, py::arg("runs") = 1, py::arg("covid_multiplier") = false,
        py::arg("delta") = 0.1,
        "Three-node benchmark: simulate, binned EM, pinned calibration; entries ordered "
        "A(0,1), A(1,0), A(2,1).");

    m.def(
        "reproduce_forecast_demo",
        [](std::uint64_t seed) {
            const ForecastDemoReport rep = reproduce_forecast_demo(seed);
            py::list entries;
            for (const ForecastDemoEntry& e : rep.entries) {
                py::dict row;
                row["model"] = e.model;
                row["beta"] = e.beta;
                row["scale"] = e.scale;
                row["rmse_full"] = e.rmse_full;
                row["rmse_late"] = e.rmse_late;
                row["late_bias"] = e.late_bias;
                entries.append(std::move(row));
            }
            py::dict d;
            d["counts"] = rep.data.counts;
            d["entries"] = std::move(entries);
            d["eahdm"] = series_to(rep.eahdm_predictions);
            d["hawkes"] = series_to(rep.hawkes_predictions);
            return d;
        },
        py::arg("seed") = 1,
        "Synthetic outbreak comparing decaying-multiplier and static one-step fits.");
}
