#include "eah/decay.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eah/errors.hpp"

namespace eah {

double DecayPiece::eval(double t) const {
    switch (form) {
        case PieceForm::Constant:
            return c;
        case PieceForm::ClampedPower:
            return c / std::pow(std::max(a, t), p);
        case PieceForm::PowerShift:
            return c / (std::pow(t, p) - q);
    }
    return 0.0;
}

DecaySpec DecaySpec::constant(double c) {
    DecayPiece piece;
    piece.form = PieceForm::Constant;
    piece.c = c;
    return DecaySpec{{piece}};
}

DecaySpec DecaySpec::covid_default() {
    DecayPiece head;
    head.from = 0.0;
    head.to = 20.0;
    head.form = PieceForm::ClampedPower;
    head.c = 1.0;
    head.a = 7.0;
    head.p = 2.0;

    DecayPiece tail;
    tail.from = 20.0;
    tail.form = PieceForm::PowerShift;
    tail.c = 1.0;
    tail.p = 2.4;
    tail.q = 926.7;

    return DecaySpec{{head, tail}};
}

double DecaySpec::eval(double t) const { return eval_decay(*this, t); }

double eval_decay(const DecaySpec& spec, double t) {
    if (!(t >= 0.0)) throw DomainError("eval_decay: t must be >= 0, got " + std::to_string(t));
    for (const auto& piece : spec.pieces) {
        if (t >= piece.from && t < piece.to) return piece.eval(t);
    }
    throw ConfigError("eval_decay: no piece covers t = " + std::to_string(t));
}

void validate_decay(const DecaySpec& spec, const std::string& where, double grid_step,
                    double grid_horizon) {
    auto fail = [&](const std::string& msg) { throw ConfigError(where + ": " + msg); };

    if (spec.pieces.empty()) fail("no pieces");
    if (spec.pieces.front().from != 0.0) fail("first piece must start at t = 0");
    for (std::size_t k = 0; k + 1 < spec.pieces.size(); ++k) {
        if (!(spec.pieces[k].to == spec.pieces[k + 1].from))
            fail("pieces must tile [0, inf) without gaps or overlap");
        if (!(spec.pieces[k].from < spec.pieces[k].to)) fail("empty piece interval");
    }
    if (std::isfinite(spec.pieces.back().to)) fail("last piece must extend to infinity");

    // Numeric nonnegativity / monotonicity check on a grid covering every
    // finite boundary plus a margin beyond the last one.
    double last_finite = 0.0;
    for (const auto& piece : spec.pieces)
        if (std::isfinite(piece.to)) last_finite = std::max(last_finite, piece.to);
    const double t_max = std::max(grid_horizon, last_finite + 40.0);

    double prev = std::numeric_limits<double>::infinity();
    for (double t = 0.0; t <= t_max; t += grid_step) {
        const double v = eval_decay(spec, t);
        if (!std::isfinite(v) || v < 0.0) {
            std::ostringstream os;
            os << "value " << v << " at t = " << t << " is not a finite nonnegative number";
            fail(os.str());
        }
        // Piece seams are allowed a small continuity mismatch (the built-in
        // decay's constants make its branches meet only to ~6e-6); anything
        // beyond that budget is a genuine increase.
        if (v > prev + 1e-4) {
            std::ostringstream os;
            os << "not nonincreasing near t = " << t;
            fail(os.str());
        }
        prev = v;
    }
}

double multiplier_value(const EnvMultiplier& m, std::size_t i, std::size_t j, double t) {
    if (const auto* c = std::get_if<ConstantMultiplier>(&m)) return c->value;
    if (const auto* s = std::get_if<ScalarDecayMultiplier>(&m)) return eval_decay(s->decay, t);
    const auto& mat = std::get<MatrixMultiplier>(m);
    return eval_decay(mat.at(i, j), t);
}

bool multiplier_nonincreasing(const EnvMultiplier& m) {
    // Constants and every expression in the decay grammar are nonincreasing
    // once validated, so this only guards unvalidated hand-built specs.
    auto spec_ok = [](const DecaySpec& d) {
        try {
            validate_decay(d);
            return true;
        } catch (const Error&) {
            return false;
        }
    };
    if (std::holds_alternative<ConstantMultiplier>(m)) return true;
    if (const auto* s = std::get_if<ScalarDecayMultiplier>(&m)) return spec_ok(s->decay);
    const auto& mat = std::get<MatrixMultiplier>(m);
    return std::all_of(mat.entries.begin(), mat.entries.end(), spec_ok);
}

void validate_multiplier(const EnvMultiplier& m, std::size_t dim) {
    if (const auto* c = std::get_if<ConstantMultiplier>(&m)) {
        if (!(c->value >= 0.0)) throw ConfigError("constant multiplier must be >= 0");
        return;
    }
    if (const auto* s = std::get_if<ScalarDecayMultiplier>(&m)) {
        validate_decay(s->decay, "scalar decay multiplier");
        return;
    }
    const auto& mat = std::get<MatrixMultiplier>(m);
    if (mat.dim != dim || mat.entries.size() != dim * dim)
        throw ConfigError("matrix multiplier has wrong dimensions");
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            validate_decay(mat.at(i, j), "multiplier entry (" + std::to_string(i) + "," +
                                             std::to_string(j) + ")");
}

}  // namespace eah
