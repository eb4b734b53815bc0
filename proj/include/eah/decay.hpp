#pragma once

#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "eah/mat.hpp"

namespace eah {

// Closed expression grammar for environmental decay functions. Three forms
// cover everything the toolkit needs while keeping specs serializable and
// monotonicity checkable:
//   Constant      c
//   ClampedPower  c / max(a, t)^p
//   PowerShift    c / (t^p - q)
enum class PieceForm { Constant, ClampedPower, PowerShift };

struct DecayPiece {
    double from = 0.0;
    double to = std::numeric_limits<double>::infinity();  // half-open [from, to)
    PieceForm form = PieceForm::Constant;
    double c = 1.0;
    double a = 0.0;
    double p = 1.0;
    double q = 0.0;

    double eval(double t) const;
};

struct DecaySpec {
    std::vector<DecayPiece> pieces;

    static DecaySpec constant(double c);

    // The two-piece COVID decay used throughout the examples:
    // 1/max(7,t)^2 on [0,20), then 1/(t^2.4 - 926.7).
    static DecaySpec covid_default();

    double eval(double t) const;
};

// eval with the documented error behavior: t < 0 is a domain error, a gap in
// the piece cover is a config error.
double eval_decay(const DecaySpec& spec, double t);

// Structural checks plus the numeric nonnegativity/monotonicity grid check.
// Throws ConfigError; `where` names the offending spec in messages.
void validate_decay(const DecaySpec& spec, const std::string& where = "decay",
                    double grid_step = 0.01, double grid_horizon = 60.0);

struct ConstantMultiplier {
    double value = 1.0;
};

struct ScalarDecayMultiplier {
    DecaySpec decay;
};

// Per-entry decay specs, row-major M x M.
struct MatrixMultiplier {
    std::size_t dim = 0;
    std::vector<DecaySpec> entries;

    const DecaySpec& at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
};

using EnvMultiplier = std::variant<ConstantMultiplier, ScalarDecayMultiplier, MatrixMultiplier>;

// alpha_{ij}(t) for any variant.
double multiplier_value(const EnvMultiplier& m, std::size_t i, std::size_t j, double t);

// True when every entry is a nonincreasing function of t (constants count).
// The decay grammar guarantees this for validated specs.
bool multiplier_nonincreasing(const EnvMultiplier& m);

void validate_multiplier(const EnvMultiplier& m, std::size_t dim);

}  // namespace eah
