// io.hpp — JSON parameter/config files and CSV interchange. All floats are
// written with 17 significant digits so every file round-trips bit-exactly.

#pragma once

#include "analysis.hpp"
#include "constraints.hpp"
#include "model.hpp"
#include "propagator.hpp"
#include "ssh.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace lz::io {

using nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits: enough to reproduce any double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s) {
    double v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw IoError("invalid numeric field: '" + std::string(s) + "'");
    return v;
}

// ------------------------------ JSON: parameters ------------------------------

inline json to_json(const FiveStateParams& p) {
    return {{"b1", p.b1},   {"b2", p.b2},   {"g12", p.g12},
            {"g13", p.g13}, {"g14", p.g14}, {"beta", p.beta}};
}

inline FiveStateParams five_state_from_json(const json& j) {
    FiveStateParams p;
    p.b1 = j.at("b1").get<double>();
    p.b2 = j.at("b2").get<double>();
    p.g12 = j.at("g12").get<double>();
    p.g13 = j.at("g13").get<double>();
    p.g14 = j.at("g14").get<double>();
    p.beta = j.at("beta").get<double>();
    p.validate();
    return p;
}

inline json to_json(const SSHChainSpec& s) {
    return {{"n_half", s.n_half}, {"beta", s.beta}};
}

inline SSHChainSpec ssh_from_json(const json& j) {
    SSHChainSpec s;
    s.n_half = j.at("n_half").get<int>();
    s.beta = j.at("beta").get<double>();
    s.validate();
    return s;
}

inline json to_json(const SolverSettings& s) {
    json j{{"rel_tol", s.rel_tol},
           {"abs_tol", s.abs_tol},
           {"window_tol", s.window_tol},
           {"max_doublings", s.max_doublings}};
    if (s.t_window)
        j["t_window"] = *s.t_window;
    else
        j["t_window"] = "auto";
    return j;
}

inline SolverSettings solver_from_json(const json& j) {
    SolverSettings s;
    if (j.contains("rel_tol")) s.rel_tol = j["rel_tol"].get<double>();
    if (j.contains("abs_tol")) s.abs_tol = j["abs_tol"].get<double>();
    if (j.contains("window_tol")) s.window_tol = j["window_tol"].get<double>();
    if (j.contains("max_doublings")) s.max_doublings = j["max_doublings"].get<int>();
    if (j.contains("t_window") && j["t_window"].is_number())
        s.t_window = j["t_window"].get<double>();
    s.validate();
    return s;
}

inline json to_json(const SweepGrid& g) {
    return {{"beta_min", g.beta_min}, {"beta_max", g.beta_max}, {"n_points", g.n_points}};
}

inline SweepGrid grid_from_json(const json& j) {
    SweepGrid g;
    if (j.contains("beta_min")) g.beta_min = j["beta_min"].get<double>();
    if (j.contains("beta_max")) g.beta_max = j["beta_max"].get<double>();
    if (j.contains("n_points")) g.n_points = j["n_points"].get<int>();
    g.validate();
    return g;
}

// ------------------------------ JSON: reports ---------------------------------

inline json to_json(const ConstraintReport& r) {
    json j;
    j["bipartite"] = r.bipartite;
    for (int i = 0; i < 3; ++i) j["u_row" + std::to_string(i + 1)] = r.unitarity_magnitude[i];
    for (int i = 0; i < 6; ++i) j["u_phase" + std::to_string(i + 1)] = r.unitarity_phase[i];
    for (int i = 0; i < 4; ++i) j["hc" + std::to_string(i + 1)] = r.hierarchy[i];
    j["max"] = r.max_residual;
    return j;
}

inline json to_json(FitModelKind kind, const FitResult& r) {
    return {{"model", fitmodel::name(kind)},
            {"params", r.params},
            {"residual_max", r.residual_max},
            {"residual_rms", r.residual_rms},
            {"converged", r.converged}};
}

// -------------------------------- CSV: sweeps ---------------------------------

inline std::string sweep_csv_header() {
    std::string h = "beta,s33,abs_s32";
    for (int i = 1; i <= 5; ++i)
        for (int j = 1; j <= 5; ++j) h += ",p" + std::to_string(i) + std::to_string(j);
    h += ",constraint_residual,converged";
    return h;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << sweep_csv_header() << "\n";
    for (const SweepRow& r : rows) {
        os << format_double(r.beta) << ',' << format_double(r.s33) << ','
           << format_double(r.mag32);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) os << ',' << format_double(r.p_matrix(i, j));
        os << ',' << format_double(r.constraint_max_residual) << ','
           << (r.converged ? 1 : 0) << "\n";
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("sweep CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != sweep_csv_header())
        throw IoError("sweep CSV: header does not match the sweep schema");
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 30) throw IoError("sweep CSV: wrong number of columns");
        SweepRow r;
        r.beta = parse_double(f[0]);
        r.s33 = parse_double(f[1]);
        r.mag32 = parse_double(f[2]);
        r.p_matrix.resize(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) r.p_matrix(i, j) = parse_double(f[3 + 5 * i + j]);
        r.constraint_max_residual = parse_double(f[28]);
        r.converged = f[29] == "1" || f[29] == "true";
        rows.push_back(std::move(r));
    }
    return rows;
}

// ------------------------------- file helpers ---------------------------------

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace lz::io
