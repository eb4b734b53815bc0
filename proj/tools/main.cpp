// Command-line front end: simulate | fit | predict | theory | reproduce.
// Results go to files under --out; standard error carries diagnostics only.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eah/errors.hpp"
#include "eah/estimate.hpp"
#include "eah/forecast.hpp"
#include "eah/io.hpp"
#include "eah/reproduce.hpp"
#include "eah/simulate.hpp"
#include "eah/svg.hpp"
#include "eah/theory.hpp"
#include "eah/types.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v, int precision = 9) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw eah::Error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw eah::Error("write failed: " + path.string());
}

void note_written(const fs::path& path) { std::cerr << "wrote " << path.string() << "\n"; }

void emit(const fs::path& path, const std::string& content) {
    write_file(path, content);
    note_written(path);
}

std::string events_to_json(const eah::EventStream& stream) {
    ordered_json j;
    j["num_nodes"] = stream.num_nodes;
    j["horizon"] = stream.horizon;
    ordered_json rows = ordered_json::array();
    for (const eah::Event& e : stream.events) {
        ordered_json row;
        row["time"] = e.time;
        row["node"] = e.node;
        rows.push_back(std::move(row));
    }
    j["events"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string node_label(const std::vector<std::string>& names, std::size_t u) {
    if (u < names.size() && !names[u].empty()) return names[u];
    return "node " + std::to_string(u);
}

// One chart per node: observed solid black, predicted dashed red.
void write_prediction_svgs(const fs::path& plot_dir, const std::string& file_prefix,
                           const std::string& title_prefix,
                           const eah::PredictionSeries& series,
                           const std::vector<std::string>& names) {
    if (series.rows() == 0) return;
    std::vector<double> x;
    for (std::size_t b = series.start; b < series.end; ++b)
        x.push_back(static_cast<double>(b));
    const std::size_t m = series.predicted.cols();
    for (std::size_t u = 0; u < m; ++u) {
        std::vector<double> obs, pred;
        for (std::size_t r = 0; r < series.rows(); ++r) {
            obs.push_back(series.observed(r, u));
            pred.push_back(series.predicted(r, u));
        }
        std::vector<eah::SvgSeries> lines;
        lines.push_back({"observed", std::move(obs), "#000000", false});
        lines.push_back({"predicted", std::move(pred), "#cc0000", true});
        const std::string svg = eah::svg_line_chart(title_prefix + node_label(names, u), x,
                                                    lines, "bin", "count");
        emit(plot_dir / (file_prefix + "node" + std::to_string(u) + ".svg"), svg);
    }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config, out, format = "csv", method = "thinning";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool allow_unstable = false;
};

void run_simulate(const SimulateArgs& a) {
    eah::LoadedConfig cfg = eah::read_model_config(a.config);
    if (!cfg.has_sim) throw eah::ConfigError("config has no 'simulate' section");
    if (a.seed_set) cfg.sim.rng_seed = a.seed;

    eah::EventStream stream = a.method == "branching"
                                  ? eah::simulate_branching(cfg.sim, a.allow_unstable).stream
                                  : eah::simulate_thinning(cfg.sim);

    fs::create_directories(a.out);
    if (a.format == "json") {
        emit(fs::path(a.out) / "events.json", events_to_json(stream));
    } else {
        const fs::path path = fs::path(a.out) / "events.csv";
        eah::write_events_csv(path.string(), stream);
        note_written(path);
    }
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string config, out, events, counts;
    bool binned = false;
};

void run_fit(const FitArgs& a) {
    eah::LoadedConfig cfg = eah::read_model_config(a.config);
    eah::FitResult result;
    if (!a.counts.empty()) {
        eah::CountsTable table = eah::read_counts_csv(a.counts);
        if (table.counts.num_nodes() != cfg.fit.dim())
            throw eah::ConfigError("counts file has " +
                                   std::to_string(table.counts.num_nodes()) +
                                   " nodes but the config declares " +
                                   std::to_string(cfg.fit.dim()));
        result = eah::em_fit_binned(table.counts, cfg.fit);
    } else {
        eah::EventStream stream = eah::read_events_csv(a.events);
        if (static_cast<std::size_t>(stream.num_nodes) > cfg.fit.dim())
            throw eah::ConfigError("events file uses more nodes than the config declares");
        stream.num_nodes = static_cast<int>(cfg.fit.dim());
        if (a.binned)
            result = eah::em_fit_binned(eah::bin_events(stream, cfg.fit_delta), cfg.fit);
        else
            result = eah::em_fit_continuous(stream, cfg.fit);
    }
    fs::create_directories(a.out);
    emit(fs::path(a.out) / "fit.json", eah::fit_to_json(result));
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    std::string config, out, counts, format = "csv";
    std::size_t start = 1;
};

std::string predictions_to_json(const eah::PredictionSeries& series) {
    ordered_json j;
    j["start"] = series.start;
    j["end"] = series.end;
    ordered_json rows = ordered_json::array();
    for (std::size_t r = 0; r < series.rows(); ++r)
        for (std::size_t u = 0; u < series.predicted.cols(); ++u) {
            ordered_json row;
            row["bin"] = series.start + r;
            row["node"] = u;
            row["predicted"] = series.predicted(r, u);
            if (series.has_observed)
                row["observed"] = series.observed(r, u);
            rows.push_back(std::move(row));
        }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

void run_predict(const PredictArgs& a) {
    eah::LoadedConfig cfg = eah::read_model_config(a.config);
    eah::CountsTable table = eah::read_counts_csv(a.counts);
    if (table.counts.num_nodes() != cfg.model.dim())
        throw eah::ConfigError("counts file has " + std::to_string(table.counts.num_nodes()) +
                               " nodes but the config declares " +
                               std::to_string(cfg.model.dim()));

    const eah::PredictionSeries series =
        eah::rolling_one_step(cfg.model, table.counts, a.start, table.counts.num_bins());

    fs::create_directories(fs::path(a.out) / "plots");
    if (a.format == "json")
        emit(fs::path(a.out) / "predictions.json", predictions_to_json(series));
    else
        emit(fs::path(a.out) / "predictions.csv", eah::predictions_to_csv(series));
    write_prediction_svgs(fs::path(a.out) / "plots", "", "one-step forecast, ", series,
                          table.node_names);
}

// ------------------------------------------------------------------ theory

struct TheoryArgs {
    std::string config, out;
    double u_max = 40.0, u_step = 0.5;
    double y = 0.0, l = 0.0;
    double t_max = 20.0, y_max = 20.0, step = 0.05, mc_t = 0.0;
    std::size_t mc = 0;
    std::uint64_t seed = 1;
};

std::vector<double> u_grid_of(const TheoryArgs& a) {
    std::vector<double> grid;
    for (double u = 0.0; u <= a.u_max + 1e-9; u += a.u_step) grid.push_back(u);
    return grid;
}

void run_theory_stability(const TheoryArgs& a) {
    eah::LoadedConfig cfg = eah::read_model_config(a.config);
    const eah::TheoryReport report = eah::stability_check(cfg.model, u_grid_of(a));
    fs::create_directories(a.out);
    emit(fs::path(a.out) / "theory.json", eah::theory_to_json(report));
}

void run_theory_residual(const TheoryArgs& a) {
    eah::LoadedConfig cfg = eah::read_model_config(a.config);
    const eah::TheoryReport report = eah::stability_check(cfg.model, u_grid_of(a));
    const double value = eah::residual_time_survivor(cfg.model, a.y, a.l);

    ordered_json j = ordered_json::parse(eah::theory_to_json(report));
    ordered_json r;
    r["y"] = a.y;
    r["l"] = a.l;
    r["value"] = value;
    if (a.mc > 0) {
        const eah::McEstimate est = eah::mc_residual_time(cfg.model, a.y, a.l, a.mc, a.seed);
        ordered_json m;
        m["value"] = est.value;
        m["std_error"] = est.std_error;
        m["replicates"] = est.replicates;
        r["mc"] = std::move(m);
    }
    j["residual"] = std::move(r);

    fs::create_directories(a.out);
    emit(fs::path(a.out) / "theory.json", j.dump(2) + "\n");
}

void run_theory_cluster(const TheoryArgs& a) {
    eah::LoadedConfig cfg = eah::read_model_config(a.config);
    const eah::TheoryReport report = eah::stability_check(cfg.model, u_grid_of(a));
    eah::LengthGridSpec spec;
    spec.t_max = a.t_max;
    spec.y_max = a.y_max;
    spec.step = a.step;
    const eah::LengthGrid grid = eah::cluster_length_cdf(cfg.model, spec);

    ordered_json j = ordered_json::parse(eah::theory_to_json(report, &grid));
    if (a.mc > 0) {
        const eah::EmpiricalCdf cdf =
            eah::mc_cluster_length(cfg.model, a.mc_t, grid.y_grid, a.mc, a.seed);
        ordered_json m;
        m["t"] = a.mc_t;
        m["y_grid"] = cdf.y_grid;
        m["probs"] = cdf.probs;
        m["replicates"] = cdf.replicates;
        j["cluster_length_mc"] = std::move(m);
    }

    fs::create_directories(a.out);
    emit(fs::path(a.out) / "theory.json", j.dump(2) + "\n");
    emit(fs::path(a.out) / "cluster_length.csv", eah::length_grid_to_csv(grid));
}

// --------------------------------------------------------------- reproduce

struct Table1Args {
    std::string out, format = "csv", multiplier = "constant";
    std::uint64_t seed = 1;
    std::size_t runs = 1;
    double delta = 0.1;
};

const char* const kTable1Labels[3] = {"A(0,1)", "A(1,0)", "A(2,1)"};

void run_table1(const Table1Args& a) {
    const eah::Table1Report rep =
        eah::reproduce_table1(a.seed, a.runs, a.multiplier == "covid", a.delta);
    fs::create_directories(a.out);

    if (a.format == "json") {
        ordered_json j;
        ordered_json sims = ordered_json::array();
        for (std::size_t s = 0; s < rep.truth.size(); ++s) {
            ordered_json row;
            row["simulation"] = s;
            for (std::size_t k = 0; k < 3; ++k) row["truth"][kTable1Labels[k]] = rep.truth[s][k];
            for (std::size_t k = 0; k < 3; ++k)
                row["median"][kTable1Labels[k]] = rep.median[s][k];
            row["iterations"] = rep.iterations[s];
            sims.push_back(std::move(row));
        }
        j["simulations"] = std::move(sims);
        ordered_json runs = ordered_json::array();
        for (std::size_t r = 0; r < rep.estimates.size(); ++r)
            for (std::size_t s = 0; s < rep.estimates[r].size(); ++s) {
                ordered_json row;
                row["run"] = r;
                row["simulation"] = s;
                for (std::size_t k = 0; k < 3; ++k)
                    row["estimates"][kTable1Labels[k]] = rep.estimates[r][s][k];
                runs.push_back(std::move(row));
            }
        j["runs"] = std::move(runs);
        emit(fs::path(a.out) / "table1.json", j.dump(2) + "\n");
        return;
    }

    std::string csv = "simulation,parameter,truth,estimate\n";
    for (std::size_t s = 0; s < rep.truth.size(); ++s)
        for (std::size_t k = 0; k < 3; ++k)
            csv += std::to_string(s) + "," + kTable1Labels[k] + "," + fmt(rep.truth[s][k]) +
                   "," + fmt(rep.median[s][k]) + "\n";
    emit(fs::path(a.out) / "table1.csv", csv);

    std::string runs_csv = "run,simulation,parameter,estimate\n";
    for (std::size_t r = 0; r < rep.estimates.size(); ++r)
        for (std::size_t s = 0; s < rep.estimates[r].size(); ++s)
            for (std::size_t k = 0; k < 3; ++k)
                runs_csv += std::to_string(r) + "," + std::to_string(s) + "," +
                            kTable1Labels[k] + "," + fmt(rep.estimates[r][s][k]) + "\n";
    emit(fs::path(a.out) / "table1_runs.csv", runs_csv);
}

struct DemoArgs {
    std::string out, format = "csv";
    std::uint64_t seed = 1;
};

void run_forecast_demo(const DemoArgs& a) {
    const eah::ForecastDemoReport rep = eah::reproduce_forecast_demo(a.seed);
    fs::create_directories(fs::path(a.out) / "plots");

    const eah::PredictionSeries& eahdm = rep.eahdm_predictions;
    const eah::PredictionSeries& hawkes = rep.hawkes_predictions;
    const std::size_t m = rep.data.num_nodes();

    if (a.format == "json") {
        ordered_json entries = ordered_json::array();
        for (const eah::ForecastDemoEntry& e : rep.entries) {
            ordered_json row;
            row["model"] = e.model;
            row["beta"] = e.beta;
            row["scale"] = e.scale;
            row["rmse_full"] = e.rmse_full;
            row["rmse_late"] = e.rmse_late;
            row["late_bias"] = e.late_bias;
            entries.push_back(std::move(row));
        }
        ordered_json j;
        j["entries"] = std::move(entries);
        emit(fs::path(a.out) / "forecast_rmse.json", j.dump(2) + "\n");

        ordered_json rows = ordered_json::array();
        for (std::size_t r = 0; r < eahdm.rows(); ++r)
            for (std::size_t u = 0; u < m; ++u) {
                ordered_json row;
                row["bin"] = eahdm.start + r;
                row["node"] = u;
                row["observed"] = eahdm.observed(r, u);
                row["eahdm"] = eahdm.predicted(r, u);
                row["hawkes"] = hawkes.predicted(r, u);
                rows.push_back(std::move(row));
            }
        ordered_json p;
        p["start"] = eahdm.start;
        p["end"] = eahdm.end;
        p["rows"] = std::move(rows);
        emit(fs::path(a.out) / "predictions.json", p.dump(2) + "\n");

        ordered_json c;
        c["delta"] = rep.data.delta;
        c["origin"] = rep.data.origin;
        c["counts"] = rep.data.counts;
        emit(fs::path(a.out) / "counts.json", c.dump(2) + "\n");
    } else {
        std::string csv = "model,beta,scale,rmse_full,rmse_late,late_bias\n";
        for (const eah::ForecastDemoEntry& e : rep.entries)
            csv += e.model + "," + fmt(e.beta, 2) + "," + fmt(e.scale) + "," +
                   fmt(e.rmse_full) + "," + fmt(e.rmse_late) + "," + fmt(e.late_bias) + "\n";
        emit(fs::path(a.out) / "forecast_rmse.csv", csv);

        std::string pred = "bin,node,observed,eahdm,hawkes\n";
        for (std::size_t r = 0; r < eahdm.rows(); ++r)
            for (std::size_t u = 0; u < m; ++u)
                pred += std::to_string(eahdm.start + r) + "," + std::to_string(u) + "," +
                        fmt(eahdm.observed(r, u), 0) + "," + fmt(eahdm.predicted(r, u)) +
                        "," + fmt(hawkes.predicted(r, u)) + "\n";
        emit(fs::path(a.out) / "predictions.csv", pred);

        std::string counts = "bin";
        for (std::size_t u = 0; u < m; ++u) counts += ",node" + std::to_string(u);
        counts += "\n";
        for (std::size_t b = 0; b < rep.data.num_bins(); ++b) {
            counts += std::to_string(b);
            for (std::size_t u = 0; u < m; ++u)
                counts += "," + std::to_string(rep.data.counts[b][u]);
            counts += "\n";
        }
        emit(fs::path(a.out) / "counts.csv", counts);
    }

    std::vector<std::string> names;
    write_prediction_svgs(fs::path(a.out) / "plots", "eahdm_", "decaying-multiplier fit, ",
                          eahdm, names);
    write_prediction_svgs(fs::path(a.out) / "plots", "hawkes_", "static fit, ", hawkes,
                          names);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Environmentally adaptive Hawkes toolkit: simulation, EM fitting, "
                 "one-step forecasting, and stability / cluster theory checks"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "Sample an event stream from a model");
    sim->add_option("--config", sim_args.config, "model + simulate JSON config")->required();
    sim->add_option("--out", sim_args.out, "output directory")->required();
    CLI::Option* sim_seed = sim->add_option("--seed", sim_args.seed,
                                            "override the config's rng_seed");
    sim->add_option("--format", sim_args.format, "events file format")
        ->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--method", sim_args.method, "sampler (default thinning)")
        ->check(CLI::IsMember({"thinning", "branching"}));
    sim->add_flag("--allow-unstable", sim_args.allow_unstable,
                  "let the branching sampler run on an unstable model (capped)");

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "Estimate the branching matrix by EM");
    fit->add_option("--config", fit_args.config, "model + fit JSON config")->required();
    fit->add_option("--out", fit_args.out, "output directory")->required();
    CLI::Option* fit_events = fit->add_option("--events", fit_args.events,
                                              "event stream CSV (time,node)");
    CLI::Option* fit_counts = fit->add_option("--counts", fit_args.counts,
                                              "daily counts CSV (date,node columns)");
    fit_events->excludes(fit_counts);
    fit_counts->excludes(fit_events);
    fit->add_flag("--binned", fit_args.binned,
                  "bin the event stream at the config's fit delta before fitting");

    PredictArgs pred_args;
    CLI::App* pred = app.add_subcommand("predict", "Rolling one-step-ahead expected counts");
    pred->add_option("--config", pred_args.config, "model JSON config")->required();
    pred->add_option("--counts", pred_args.counts, "daily counts CSV")->required();
    pred->add_option("--out", pred_args.out, "output directory")->required();
    pred->add_option("--start", pred_args.start, "first bin to predict (default 1)");
    pred->add_option("--format", pred_args.format, "predictions file format")
        ->check(CLI::IsMember({"csv", "json"}));

    TheoryArgs th_args;
    CLI::App* theory = app.add_subcommand("theory", "Numerical theory checks");
    theory->require_subcommand(1);
    CLI::App* th_stab = theory->add_subcommand("stability",
                                               "Branching ratio m(u), sup, intensity bound");
    CLI::App* th_res = theory->add_subcommand("residual",
                                              "Residual-time survivor after y over length l");
    CLI::App* th_len = theory->add_subcommand("cluster-length",
                                              "Cluster length CDF on a grid");
    for (CLI::App* sub : {th_stab, th_res, th_len}) {
        sub->add_option("--config", th_args.config, "model JSON config")->required();
        sub->add_option("--out", th_args.out, "output directory")->required();
        sub->add_option("--u-max", th_args.u_max, "stability grid end (default 40)");
        sub->add_option("--u-step", th_args.u_step, "stability grid step (default 0.5)")
            ->check(CLI::PositiveNumber);
    }
    th_res->add_option("--y", th_args.y, "elapsed time since the ancestor")->required();
    th_res->add_option("--l", th_args.l, "look-ahead window length")->required();
    th_res->add_option("--mc", th_args.mc, "Monte-Carlo replicates for a cross-check");
    th_res->add_option("--seed", th_args.seed, "Monte-Carlo seed (default 1)");
    th_len->add_option("--t-max", th_args.t_max, "ancestor-time grid end (default 20)");
    th_len->add_option("--y-max", th_args.y_max, "length grid end (default 20)");
    th_len->add_option("--step", th_args.step, "grid step (default 0.05)")
        ->check(CLI::PositiveNumber);
    th_len->add_option("--mc", th_args.mc, "Monte-Carlo replicates for a cross-check");
    th_len->add_option("--mc-t", th_args.mc_t, "ancestor time for the Monte-Carlo check");
    th_len->add_option("--seed", th_args.seed, "Monte-Carlo seed (default 1)");

    CLI::App* repro = app.add_subcommand("reproduce", "Built-in experiment pipelines");
    repro->require_subcommand(1);
    Table1Args t1_args;
    CLI::App* t1 = repro->add_subcommand(
        "table1", "Three-node benchmark: simulate, binned EM, pinned calibration");
    t1->add_option("--out", t1_args.out, "output directory")->required();
    t1->add_option("--seed", t1_args.seed, "base seed (default 1)");
    t1->add_option("--runs", t1_args.runs, "independent replications (default 1)")
        ->check(CLI::PositiveNumber);
    t1->add_option("--multiplier", t1_args.multiplier,
                   "generation multiplier: constant (default) or covid decay")
        ->check(CLI::IsMember({"constant", "covid"}));
    t1->add_option("--delta", t1_args.delta, "bin width in days (default 0.1)")
        ->check(CLI::PositiveNumber);
    t1->add_option("--format", t1_args.format, "table format")
        ->check(CLI::IsMember({"csv", "json"}));

    DemoArgs demo_args;
    CLI::App* demo = repro->add_subcommand(
        "forecast-demo", "Synthetic outbreak: decaying-multiplier vs static one-step fits");
    demo->add_option("--out", demo_args.out, "output directory")->required();
    demo->add_option("--seed", demo_args.seed, "generator seed (default 1)");
    demo->add_option("--format", demo_args.format, "table format")
        ->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    sim_args.seed_set = sim_seed->count() > 0;
    if (fit->parsed() && fit_events->count() == 0 && fit_counts->count() == 0) {
        std::cerr << "fit: provide --events or --counts\n";
        return 1;
    }

    try {
        if (sim->parsed()) run_simulate(sim_args);
        else if (fit->parsed()) run_fit(fit_args);
        else if (pred->parsed()) run_predict(pred_args);
        else if (theory->parsed()) {
            if (th_stab->parsed()) run_theory_stability(th_args);
            else if (th_res->parsed()) run_theory_residual(th_args);
            else run_theory_cluster(th_args);
        } else if (repro->parsed()) {
            if (t1->parsed()) run_table1(t1_args);
            else run_forecast_demo(demo_args);
        }
        return 0;
    } catch (const eah::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::OrphanEventError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::EmptyDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const eah::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
