#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eah/estimate.hpp"
#include "eah/forecast.hpp"
#include "eah/simulate.hpp"
#include "eah/theory.hpp"
#include "eah/types.hpp"

namespace eah {

// Daily counts: ISO-date column then one integer column per node. Bin 0 sits
// at the first date with delta = 1 day.
struct CountsTable {
    BinnedCounts counts;
    std::string first_date;               // ISO-8601
    std::vector<std::string> node_names;  // header labels after the date column
};

CountsTable read_counts_csv(const std::string& path);

// Events: columns time,node (header optional). Duplicate times are perturbed
// by +1e-9 with a warning on standard error.
EventStream read_events_csv(const std::string& path);

void write_events_csv(const std::string& path, const EventStream& stream);

// JSON config with sections model / fit / simulate; unknown keys rejected.
struct LoadedConfig {
    ModelSpec model;
    FitConfig fit;
    SimConfig sim;
    double fit_delta = 0.1;
    bool has_sim = false;
};

LoadedConfig read_model_config(const std::string& path);

// Everything a command wants persisted; write_outputs lays the files out
// under dir: fit.json, predictions.csv, theory.json, plots/*.svg. Identical
// inputs produce byte-identical files.
struct OutputBundle {
    std::optional<FitResult> fit;
    std::optional<PredictionSeries> predictions;
    std::optional<TheoryReport> theory;
    std::optional<LengthGrid> lengths;
    std::vector<std::pair<std::string, std::string>> svgs;  // name -> content
};

void write_outputs(const OutputBundle& bundle, const std::string& dir);

std::string fit_to_json(const FitResult& fit);
std::string theory_to_json(const TheoryReport& report, const LengthGrid* lengths = nullptr);
std::string predictions_to_csv(const PredictionSeries& series);
std::string length_grid_to_csv(const LengthGrid& grid);

// ISO-8601 calendar helpers shared by the CSV readers and writers.
long days_from_civil(int year, int month, int day);
std::string civil_from_days(long days);
long parse_iso_date(const std::string& text);  // days since 1970-01-01

}  // namespace eah
