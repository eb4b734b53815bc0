#include "eah/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "eah/errors.hpp"

namespace eah {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& msg) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(trimmed(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(trimmed(cur));
    return fields;
}

bool parse_long(const std::string& s, long& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stol(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

std::string format_fixed(double v, int digits = 9) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    return in;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

}  // namespace

// Days since 1970-01-01 for a proleptic Gregorian date (civil calendar
// algorithm with the March-based year shift).
long days_from_civil(int year, int month, int day) {
    year -= month <= 2;
    const long era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long days) {
    long z = days + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", y + (m <= 2), m, d);
    return buf;
}

long parse_iso_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw ParseError("not an ISO-8601 date: '" + text + "'");
    for (std::size_t k : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(text[k])))
            throw ParseError("not an ISO-8601 date: '" + text + "'");
    const int year = std::stoi(text.substr(0, 4));
    const int month = std::stoi(text.substr(5, 2));
    const int day = std::stoi(text.substr(8, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31)
        throw ParseError("not a valid calendar date: '" + text + "'");
    return days_from_civil(year, month, day);
}

CountsTable read_counts_csv(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        header = split_csv(line);
        break;
    }
    if (header.empty()) throw ParseError(path + ": empty file");
    if (header.size() < 2) parse_fail(path, line_no, "need a date column plus node columns");

    CountsTable table;
    table.node_names.assign(header.begin() + 1, header.end());
    table.counts.delta = 1.0;
    table.counts.origin = 0.0;
    const std::size_t m = table.node_names.size();

    long prev_day = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != m + 1)
            parse_fail(path, line_no,
                       "expected " + std::to_string(m + 1) + " fields, got " +
                           std::to_string(fields.size()));
        long day;
        try {
            day = parse_iso_date(fields[0]);
        } catch (const ParseError& err) {
            parse_fail(path, line_no, err.what());
        }
        if (first) {
            table.first_date = fields[0];
            first = false;
        } else if (day != prev_day + 1) {
            parse_fail(path, line_no, "dates must be contiguous ascending (gap before '" +
                                          fields[0] + "')");
        }
        prev_day = day;

        std::vector<long> row(m);
        for (std::size_t u = 0; u < m; ++u) {
            long v;
            if (!parse_long(fields[u + 1], v))
                parse_fail(path, line_no, "count '" + fields[u + 1] + "' is not an integer");
            if (v < 0) parse_fail(path, line_no, "negative count " + std::to_string(v));
            row[u] = v;
        }
        table.counts.counts.push_back(std::move(row));
    }
    if (table.counts.counts.empty()) throw ParseError(path + ": no data rows");
    return table;
}

EventStream read_events_csv(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 0;

    EventStream stream;
    int max_node = -1;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trimmed(line);
        if (body.empty()) continue;
        const std::vector<std::string> fields = split_csv(body);
        if (fields.size() != 2) parse_fail(path, line_no, "expected time,node");
        double t;
        long node;
        if (!parse_double(fields[0], t)) {
            if (!saw_header && stream.events.empty()) {
                saw_header = true;  // tolerate one leading header row
                continue;
            }
            parse_fail(path, line_no, "time '" + fields[0] + "' is not a number");
        }
        if (!parse_long(fields[1], node))
            parse_fail(path, line_no, "node '" + fields[1] + "' is not an integer");
        if (t < 0.0) parse_fail(path, line_no, "negative time");
        if (node < 0) parse_fail(path, line_no, "node out of range");
        stream.events.push_back({t, static_cast<int>(node)});
        max_node = std::max(max_node, static_cast<int>(node));
    }
    stream.num_nodes = max_node + 1;
    const std::size_t perturbed = sort_and_perturb_ties(stream);
    if (perturbed > 0)
        std::cerr << "warning: " << path << ": perturbed " << perturbed
                  << " duplicate event time(s) by +1e-9\n";
    if (!stream.events.empty()) stream.horizon = stream.events.back().time;
    return stream;
}

void write_events_csv(const std::string& path, const EventStream& stream) {
    std::string out = "time,node\n";
    for (const Event& e : stream.events)
        out += format_fixed(e.time) + "," + std::to_string(e.node) + "\n";
    write_text(path, out);
}

namespace {

void reject_unknown(const ordered_json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* k) { return key == k; }))
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

Mat parse_matrix(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError(where + ": expected a matrix (array of arrays)");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Mat m(rows, cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ConfigError(where + ": ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number())
                throw ConfigError(where + ": entries must be numbers");
            m(i, c) = j[i][c].get<double>();
        }
    }
    return m;
}

DecayPiece parse_piece(const ordered_json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    reject_unknown(j, where, {"from", "to", "form", "c", "a", "p", "q"});
    DecayPiece piece;
    if (!j.contains("from") || !j["from"].is_number())
        throw ConfigError(where + ".from: required number");
    piece.from = j["from"].get<double>();
    if (j.contains("to")) {
        if (!j["to"].is_number()) throw ConfigError(where + ".to: must be a number");
        piece.to = j["to"].get<double>();
    }
    if (!j.contains("form") || !j["form"].is_string())
        throw ConfigError(where + ".form: required string");
    const std::string form = j["form"].get<std::string>();
    if (form == "constant")
        piece.form = PieceForm::Constant;
    else if (form == "clamped_power")
        piece.form = PieceForm::ClampedPower;
    else if (form == "power_shift")
        piece.form = PieceForm::PowerShift;
    else
        throw ConfigError(where + ".form: unknown form '" + form + "'");
    for (const char* key : {"c", "a", "p", "q"}) {
        if (!j.contains(key)) continue;
        if (!j[key].is_number()) throw ConfigError(where + "." + key + ": must be a number");
        const double v = j[key].get<double>();
        if (key[0] == 'c') piece.c = v;
        if (key[0] == 'a') piece.a = v;
        if (key[0] == 'p') piece.p = v;
        if (key[0] == 'q') piece.q = v;
    }
    return piece;
}

DecaySpec parse_decay(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected an array of pieces");
    DecaySpec spec;
    for (std::size_t k = 0; k < j.size(); ++k)
        spec.pieces.push_back(parse_piece(j[k], where + "[" + std::to_string(k) + "]"));
    validate_decay(spec, where);
    return spec;
}

EnvMultiplier parse_multiplier(const ordered_json& j, const std::string& where,
                               std::size_t dim) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    if (!j.contains("type") || !j["type"].is_string())
        throw ConfigError(where + ".type: required string");
    const std::string type = j["type"].get<std::string>();
    if (type == "constant") {
        reject_unknown(j, where, {"type", "value"});
        ConstantMultiplier m;
        if (j.contains("value")) {
            if (!j["value"].is_number())
                throw ConfigError(where + ".value: must be a number");
            m.value = j["value"].get<double>();
        }
        return m;
    }
    if (type == "scalar_decay") {
        reject_unknown(j, where, {"type", "pieces"});
        if (!j.contains("pieces")) throw ConfigError(where + ".pieces: required");
        return ScalarDecayMultiplier{parse_decay(j["pieces"], where + ".pieces")};
    }
    if (type == "matrix") {
        reject_unknown(j, where, {"type", "entries"});
        if (!j.contains("entries") || !j["entries"].is_array() ||
            j["entries"].size() != dim)
            throw ConfigError(where + ".entries: expected " + std::to_string(dim) + " rows");
        MatrixMultiplier m;
        m.dim = dim;
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& row = j["entries"][i];
            if (!row.is_array() || row.size() != dim)
                throw ConfigError(where + ".entries: ragged rows");
            for (std::size_t c = 0; c < dim; ++c)
                m.entries.push_back(parse_decay(
                    row[c], where + ".entries[" + std::to_string(i) + "][" +
                                std::to_string(c) + "]"));
        }
        return m;
    }
    throw ConfigError(where + ".type: unknown multiplier type '" + type + "'");
}

}  // namespace

LoadedConfig read_model_config(const std::string& path) {
    std::ifstream in = open_for_read(path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& err) {
        throw ParseError(path + ": " + err.what());
    }
    if (!doc.is_object()) throw ConfigError(path + ": top level must be an object");
    reject_unknown(doc, path, {"model", "fit", "simulate"});
    if (!doc.contains("model")) throw ConfigError(path + ": missing 'model' section");

    const ordered_json& model_j = doc["model"];
    if (!model_j.is_object()) throw ConfigError("model: must be an object");
    reject_unknown(model_j, "model", {"mu", "a", "mask", "beta", "multiplier"});

    LoadedConfig out;
    if (!model_j.contains("mu") || !model_j["mu"].is_array())
        throw ConfigError("model.mu: required array");
    for (const auto& v : model_j["mu"]) {
        if (!v.is_number()) throw ConfigError("model.mu: entries must be numbers");
        out.model.mu.push_back(v.get<double>());
    }
    const std::size_t m = out.model.mu.size();
    if (m == 0) throw ConfigError("model.mu: needs at least one node");

    if (!model_j.contains("a")) throw ConfigError("model.a: required matrix");
    Mat a = parse_matrix(model_j["a"], "model.a");
    if (a.rows() != m || a.cols() != m) throw ConfigError("model.a: must be MxM");

    Mask mask(m, m, true);
    if (model_j.contains("mask")) {
        Mat mm = parse_matrix(model_j["mask"], "model.mask");
        if (mm.rows() != m || mm.cols() != m) throw ConfigError("model.mask: must be MxM");
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < m; ++c) mask.set(i, c, mm(i, c) != 0.0);
    }
    out.model.a = BranchingMatrix{std::move(a), mask};

    if (!model_j.contains("beta")) throw ConfigError("model.beta: required");
    if (model_j["beta"].is_number()) {
        out.model.kernel = KernelSpec::uniform(m, model_j["beta"].get<double>());
    } else {
        Mat beta = parse_matrix(model_j["beta"], "model.beta");
        if (beta.rows() != m || beta.cols() != m)
            throw ConfigError("model.beta: must be MxM or a scalar");
        out.model.kernel = KernelSpec{std::move(beta)};
    }

    if (model_j.contains("multiplier"))
        out.model.alpha = parse_multiplier(model_j["multiplier"], "model.multiplier", m);
    validate(out.model);

    out.fit.beta = out.model.kernel;
    out.fit.decay = out.model.alpha;
    out.fit.mu = out.model.mu;
    out.fit.mask = out.model.a.mask;
    if (doc.contains("fit")) {
        const ordered_json& fit_j = doc["fit"];
        if (!fit_j.is_object()) throw ConfigError("fit: must be an object");
        reject_unknown(fit_j, "fit",
                       {"tol", "max_iters", "delta", "horizon", "seed_count",
                        "exact_compensator"});
        if (fit_j.contains("tol")) {
            if (!fit_j["tol"].is_number() || !(fit_j["tol"].get<double>() > 0.0))
                throw ConfigError("fit.tol: must be a positive number");
            out.fit.tol = fit_j["tol"].get<double>();
        }
        if (fit_j.contains("max_iters")) {
            if (!fit_j["max_iters"].is_number_unsigned())
                throw ConfigError("fit.max_iters: must be a nonnegative integer");
            out.fit.max_iters = fit_j["max_iters"].get<std::size_t>();
        }
        if (fit_j.contains("delta")) {
            if (!fit_j["delta"].is_number() || !(fit_j["delta"].get<double>() > 0.0))
                throw ConfigError("fit.delta: must be a positive number");
            out.fit_delta = fit_j["delta"].get<double>();
        }
        if (fit_j.contains("horizon")) {
            if (!fit_j["horizon"].is_number())
                throw ConfigError("fit.horizon: must be a number");
            out.fit.horizon = fit_j["horizon"].get<double>();
        }
        if (fit_j.contains("seed_count")) {
            if (!fit_j["seed_count"].is_number_unsigned())
                throw ConfigError("fit.seed_count: must be a nonnegative integer");
            out.fit.seed_count = fit_j["seed_count"].get<std::size_t>();
        }
        if (fit_j.contains("exact_compensator")) {
            if (!fit_j["exact_compensator"].is_boolean())
                throw ConfigError("fit.exact_compensator: must be a boolean");
            out.fit.exact_compensator = fit_j["exact_compensator"].get<bool>();
        }
    }
    validate(out.fit);

    if (doc.contains("simulate")) {
        const ordered_json& sim_j = doc["simulate"];
        if (!sim_j.is_object()) throw ConfigError("simulate: must be an object");
        reject_unknown(sim_j, "simulate", {"horizon", "seeds", "rng_seed"});
        if (!sim_j.contains("horizon") || !sim_j["horizon"].is_number())
            throw ConfigError("simulate.horizon: required number");
        out.sim.model = out.model;
        out.sim.horizon = sim_j["horizon"].get<double>();
        out.sim.seeds.num_nodes = static_cast<int>(m);
        out.sim.seeds.horizon = out.sim.horizon;
        if (sim_j.contains("seeds")) {
            if (!sim_j["seeds"].is_array())
                throw ConfigError("simulate.seeds: must be an array of [time, node] pairs");
            for (const auto& s : sim_j["seeds"]) {
                if (!s.is_array() || s.size() != 2 || !s[0].is_number() ||
                    !s[1].is_number_integer())
                    throw ConfigError("simulate.seeds: entries must be [time, node]");
                out.sim.seeds.events.push_back(
                    {s[0].get<double>(), s[1].get<int>()});
            }
            sort_and_perturb_ties(out.sim.seeds);
        }
        if (sim_j.contains("rng_seed")) {
            if (!sim_j["rng_seed"].is_number_unsigned())
                throw ConfigError("simulate.rng_seed: must be a nonnegative integer");
            out.sim.rng_seed = sim_j["rng_seed"].get<std::uint64_t>();
        }
        validate(out.sim);
        out.has_sim = true;
    }
    return out;
}

namespace {

ordered_json mat_to_json(const Mat& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string fit_to_json(const FitResult& fit) {
    ordered_json doc;
    doc["a_hat"] = mat_to_json(fit.a_hat.a);
    doc["lower_bound_trace"] = fit.lower_bound_trace;
    doc["iterations"] = fit.iterations;
    doc["converged"] = fit.converged;
    return doc.dump(2) + "\n";
}

std::string theory_to_json(const TheoryReport& report, const LengthGrid* lengths) {
    ordered_json doc;
    doc["u_grid"] = report.u_grid;
    doc["m_values"] = report.m_values;
    doc["sup_m"] = report.sup_m;
    doc["stable"] = report.stable;
    if (report.stable)
        doc["intensity_bound"] = report.intensity_bound;
    else
        doc["intensity_bound"] = nullptr;
    doc["spectral_radius_sup"] = report.spectral_radius_sup;
    if (lengths != nullptr) {
        ordered_json grid;
        grid["t_grid"] = lengths->t_grid;
        grid["y_grid"] = lengths->y_grid;
        grid["d_values"] = mat_to_json(lengths->d_values);
        grid["iterations"] = lengths->iterations;
        grid["residual"] = lengths->residual;
        doc["cluster_length"] = std::move(grid);
    }
    return doc.dump(2) + "\n";
}

std::string predictions_to_csv(const PredictionSeries& series) {
    std::string out = "bin,node,predicted,observed\n";
    for (std::size_t r = 0; r < series.rows(); ++r)
        for (std::size_t u = 0; u < series.predicted.cols(); ++u) {
            out += std::to_string(series.start + r) + "," + std::to_string(u) + "," +
                   format_fixed(series.predicted(r, u));
            out += ",";
            if (series.has_observed) out += format_fixed(series.observed(r, u));
            out += "\n";
        }
    return out;
}

std::string length_grid_to_csv(const LengthGrid& grid) {
    std::string out = "t,y,d\n";
    for (std::size_t i = 0; i < grid.t_grid.size(); ++i)
        for (std::size_t j = 0; j < grid.y_grid.size(); ++j)
            out += format_fixed(grid.t_grid[i], 4) + "," + format_fixed(grid.y_grid[j], 4) +
                   "," + format_fixed(grid.d_values(i, j)) + "\n";
    return out;
}

void write_outputs(const OutputBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (bundle.fit) write_text((fs::path(dir) / "fit.json").string(), fit_to_json(*bundle.fit));
    if (bundle.predictions)
        write_text((fs::path(dir) / "predictions.csv").string(),
                   predictions_to_csv(*bundle.predictions));
    if (bundle.theory || bundle.lengths) {
        const TheoryReport empty;
        write_text((fs::path(dir) / "theory.json").string(),
                   theory_to_json(bundle.theory ? *bundle.theory : empty,
                                  bundle.lengths ? &*bundle.lengths : nullptr));
    }
    if (bundle.lengths)
        write_text((fs::path(dir) / "cluster_length.csv").string(),
                   length_grid_to_csv(*bundle.lengths));
    if (!bundle.svgs.empty()) {
        fs::create_directories(fs::path(dir) / "plots");
        for (const auto& [name, content] : bundle.svgs)
            write_text((fs::path(dir) / "plots" / name).string(), content);
    }
}

}  // namespace eah
