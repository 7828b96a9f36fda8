#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "lsn/density.hpp"
#include "lsn/errors.hpp"
#include "lsn/kinetics.hpp"
#include "lsn/solver.hpp"
#include "lsn/upwind.hpp"

namespace lsn {

/// One scenario: kinetics, initial data, total mass, horizon, solver and
/// oracle settings, and output options. Parsed from flat key = value text
/// with dotted section prefixes; unknown keys are rejected.
struct RunConfig {
    std::string preset; ///< builtin scenario this config started from, if any

    // model.*
    std::string model_family = "power_law"; ///< power_law | exp_detachment | tabulated
    double a0 = 1.0, alpha = 0.0;
    double b0 = 0.0, beta = 0.0;
    std::string table_path;    ///< rate table CSV for family tabulated
    double ratio_limit = 0.0;  ///< declared boundary limit for family tabulated
    double nucleation_amplitude = 0.0;
    double nucleation_order = 1.0;

    // scenario
    double rho = 1.0;
    double horizon = 5.0;

    // f_in.*
    std::string f_in_kind = "zero"; ///< zero | indicator | power_exp
    double f_in_c = 0.0;
    double f_in_x1 = 0.0, f_in_x2 = 0.0; ///< indicator edges
    double f_in_p = 0.0, f_in_q = 0.0;   ///< power_exp exponents
    double f_in_cut = 0.0;               ///< power_exp support cutoff

    SolverConfig solver;
    GridConfig oracle;

    // output.*
    std::string out_dir = ".";
    std::vector<double> snapshot_times;
    int snapshot_points = 512;

    // compare.*
    double compare_u_tolerance = 2.5e-2;
    double compare_density_tolerance = 6e-2;

    unsigned long seed = 0; ///< reserved for sampled diagnostics
};

/// Rate table loaded from CSV columns x,a,b (header row optional, sizes
/// strictly increasing).
struct RateTable {
    std::vector<double> x, a, b;
};

inline RateTable load_rate_table(std::istream& in) {
    RateTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        bool numeric = true;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue; // header row
            }
            throw config_error("rate table: non-numeric row '" + line + "'");
        }
        first = false;
        if (vals.size() != 3)
            throw config_error("rate table: expected 3 columns x,a,b in '" + line + "'");
        if (!t.x.empty() && !(vals[0] > t.x.back()))
            throw config_error("rate table: sizes must be strictly increasing");
        t.x.push_back(vals[0]);
        t.a.push_back(vals[1]);
        t.b.push_back(vals[2]);
    }
    if (t.x.size() < 2) throw config_error("rate table needs at least two rows");
    return t;
}

inline RateTable load_rate_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read rate table '" + path + "'");
    return load_rate_table(in);
}

/// The kinetics described by a config.
inline KineticModel build_model(const RunConfig& c) {
    std::function<double(double)> nucleation;
    if (c.nucleation_amplitude > 0.0)
        nucleation = power_nucleation(c.nucleation_amplitude, c.nucleation_order);

    if (c.model_family == "power_law")
        return make_power_law(c.a0, c.alpha, c.b0, c.beta, std::move(nucleation));
    if (c.model_family == "exp_detachment") {
        // a = a0, b = b0 exp(-x): the rate ratio decays from b0/a0 to 0, the
        // scenario family for finite-time loss of supersaturation.
        const double a0 = c.a0, b0 = c.b0;
        if (!(a0 > 0.0) || !(b0 > 0.0))
            throw config_error("exp_detachment needs a0 > 0 and b0 > 0");
        CustomRateOptions opt;
        opt.da = [](double) { return 0.0; };
        opt.db = [b0](double x) { return -b0 * std::exp(-x); };
        opt.ratio = [a0, b0](double x) { return b0 / a0 * std::exp(-x); };
        opt.a_dratio = [b0](double x) { return -b0 * std::exp(-x); };
        opt.stretch = [a0](double x) { return x / a0; };
        opt.stretch_inv = [a0](double y) { return a0 * y; };
        opt.sublinearity = a0 + b0;
        return make_custom([a0](double) { return a0; },
                           [b0](double x) { return b0 * std::exp(-x); },
                           std::move(nucleation), b0 / a0, std::move(opt));
    }
    if (c.model_family == "tabulated") {
        RateTable t = load_rate_table_file(c.table_path);
        return make_tabulated(std::move(t.x), std::move(t.a), std::move(t.b),
                              std::move(nucleation), c.ratio_limit);
    }
    throw config_error("unknown model.family '" + c.model_family + "'");
}

/// The initial cluster distribution described by a config.
inline InitialDensity build_initial_density(const RunConfig& c) {
    if (c.f_in_kind == "zero") return InitialDensity::zero();
    if (c.f_in_kind == "indicator")
        return InitialDensity::indicator(c.f_in_c, c.f_in_x1, c.f_in_x2);
    if (c.f_in_kind == "power_exp")
        return InitialDensity::power_exp(c.f_in_c, c.f_in_p, c.f_in_q, c.f_in_cut);
    throw config_error("unknown f_in.kind '" + c.f_in_kind + "'");
}

/// The five scenario presets shipped with the library.
inline RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    if (name == "vacuum") {
        // No inflow and no clusters: the monomer level must stay put.
        c.horizon = 5.0;
        c.oracle.x_max = 4.0;
        c.snapshot_times = {2.5, 5.0};
        return c;
    }
    if (name == "advection") {
        // Constant inflow 0.1 into a flat-rate medium: u(t) = exp(-0.05 t^2).
        c.nucleation_amplitude = 0.1;
        c.nucleation_order = 0.0;
        c.horizon = 5.0;
        c.oracle.x_max = 8.0;
        c.snapshot_times = {1.0, 2.5, 5.0};
        return c;
    }
    if (name == "sech2_benchmark") {
        // Inflow equal to u: u(t) = sech^2(t / sqrt 2).
        c.nucleation_amplitude = 1.0;
        c.nucleation_order = 1.0;
        c.horizon = 5.0;
        c.oracle.x_max = 4.0;
        c.snapshot_times = {0.5, 1.0, 2.0};
        return c;
    }
    if (name == "powerlaw_global") {
        // a = sqrt(x), b = 0.5 sqrt(x): the rate ratio sits at its limit 0.5
        // everywhere, so supersaturation can only decay asymptotically and
        // the run continues to any horizon.
        c.alpha = 0.5;
        c.b0 = 0.5;
        c.beta = 0.5;
        c.nucleation_amplitude = 0.05;
        c.nucleation_order = 1.0;
        c.horizon = 10.0;
        c.oracle.x_max = 10.0;
        c.snapshot_times = {2.0, 5.0, 10.0};
        return c;
    }
    if (name == "blowdown_exp") {
        // a = 1, b = exp(-x), inflow 0.5 u, unit mass initially spread on
        // (0, 1) with total mass 2: supersaturation is lost in finite time.
        c.model_family = "exp_detachment";
        c.b0 = 1.0;
        c.nucleation_amplitude = 0.5;
        c.nucleation_order = 1.0;
        c.rho = 2.0;
        c.horizon = 5.0;
        c.f_in_kind = "indicator";
        c.f_in_c = 1.0;
        c.f_in_x1 = 0.0;
        c.f_in_x2 = 1.0;
        c.oracle.x_max = 4.0;
        c.oracle.stop_excess = 5e-4;
        c.snapshot_times = {0.25, 0.5};
        return c;
    }
    throw config_error("unknown preset '" + name + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw config_error("trailing characters");
        return v;
    } catch (const config_error&) {
        throw config_error("config key '" + key + "': bad number '" + value + "'");
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': bad number '" + value + "'");
    }
}

inline std::vector<double> parse_number_list(const std::string& key,
                                             const std::string& value) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        cell = trim(cell);
        if (!cell.empty()) out.push_back(parse_number(key, cell));
    }
    return out;
}

/// Applies one key = value pair; throws config_error for unknown keys.
inline void apply_config_key(RunConfig& c, const std::string& key,
                             const std::string& value) {
    auto num = [&] { return parse_number(key, value); };
    if (key == "preset") {
        c = preset_config(value);
        return;
    }
    if (key == "model.family") { c.model_family = value; return; }
    if (key == "model.a0") { c.a0 = num(); return; }
    if (key == "model.alpha") { c.alpha = num(); return; }
    if (key == "model.b0") { c.b0 = num(); return; }
    if (key == "model.beta") { c.beta = num(); return; }
    if (key == "model.table") { c.table_path = value; return; }
    if (key == "model.ratio_limit") { c.ratio_limit = num(); return; }
    if (key == "model.nucleation.amplitude") { c.nucleation_amplitude = num(); return; }
    if (key == "model.nucleation.order") { c.nucleation_order = num(); return; }
    if (key == "rho") { c.rho = num(); return; }
    if (key == "horizon") { c.horizon = num(); return; }
    if (key == "f_in.kind") { c.f_in_kind = value; return; }
    if (key == "f_in.c") { c.f_in_c = num(); return; }
    if (key == "f_in.x1") { c.f_in_x1 = num(); return; }
    if (key == "f_in.x2") { c.f_in_x2 = num(); return; }
    if (key == "f_in.p") { c.f_in_p = num(); return; }
    if (key == "f_in.q") { c.f_in_q = num(); return; }
    if (key == "f_in.cut") { c.f_in_cut = num(); return; }
    if (key == "solver.window_length") { c.solver.window_length = num(); return; }
    if (key == "solver.time_grid_step") { c.solver.time_grid_step = num(); return; }
    if (key == "solver.fp_tolerance") { c.solver.fp_tolerance = num(); return; }
    if (key == "solver.max_iterations") {
        c.solver.max_iterations = static_cast<int>(num());
        return;
    }
    if (key == "solver.stop_threshold_factor") {
        c.solver.stop_threshold_factor = num();
        return;
    }
    if (key == "solver.resample_depth") {
        c.solver.resample_depth = static_cast<int>(num());
        return;
    }
    if (key == "solver.resample_points") {
        c.solver.resample_points = static_cast<int>(num());
        return;
    }
    if (key == "oracle.x_max") { c.oracle.x_max = num(); return; }
    if (key == "oracle.cells") { c.oracle.cells = static_cast<int>(num()); return; }
    if (key == "oracle.cfl_safety") { c.oracle.cfl_safety = num(); return; }
    if (key == "oracle.stop_excess") { c.oracle.stop_excess = num(); return; }
    if (key == "output.dir") { c.out_dir = value; return; }
    if (key == "output.snapshot_times") {
        c.snapshot_times = parse_number_list(key, value);
        return;
    }
    if (key == "output.snapshot_points") {
        c.snapshot_points = static_cast<int>(num());
        return;
    }
    if (key == "compare.u_tolerance") { c.compare_u_tolerance = num(); return; }
    if (key == "compare.density_tolerance") {
        c.compare_density_tolerance = num();
        return;
    }
    if (key == "seed") { c.seed = static_cast<unsigned long>(num()); return; }
    throw config_error("unknown config key '" + key + "'");
}

} // namespace detail

/// Parses flat key = value text ('#' starts a comment). A preset key replaces
/// the whole config with the named preset, so overrides must follow it.
inline RunConfig parse_run_config(std::istream& in) {
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected key = value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(lineno) +
                               ": empty key");
        detail::apply_config_key(c, key, value);
    }
    return c;
}

inline RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config '" + path + "'");
    return parse_run_config(in);
}

} // namespace lsn
