#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "lsn/config.hpp"
#include "lsn/io.hpp"
#include "lsn/solver.hpp"
#include "lsn/upwind.hpp"

namespace lsn {

/// Parsed command line. Empty strings / zeros mean "not given".
struct CliOptions {
    std::string subcommand; ///< solve | validate | compare
    std::string config_path;
    std::string preset;
    std::string out_dir;
    int cells = 0;
    double horizon = 0.0;
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write '" + path.string() + "'");
    out << text;
}

/// File stem for a snapshot time: 2.5 becomes "2p5".
inline std::string time_tag(double t) {
    std::string s = format_number(t);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

inline std::filesystem::path ensure_out_dir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir.empty() ? "." : cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory '" + dir.string() + "'");
    return dir;
}

} // namespace detail

/// Full run: hypothesis validation, the characteristics solve, and the
/// series / snapshot / summary outputs. Returns the process exit code.
inline int run_solve(const RunConfig& cfg, std::ostream& log = std::cout) {
    const KineticModel model = build_model(cfg);
    const InitialDensity f_in = build_initial_density(cfg);
    const HypothesisReport hyp =
        validate_hypotheses(model, cfg.rho, f_in.m0(), f_in.m1());
    if (!hyp.all_required_pass()) {
        log << hyp.summary();
        log << "hypothesis validation failed; not solving\n";
        return 2;
    }

    const SimulationResult r =
        solve_nucleation_problem(model, f_in, cfg.rho, cfg.horizon, cfg.solver);

    const std::filesystem::path dir = detail::ensure_out_dir(cfg);
    {
        std::ofstream out(dir / "series.csv");
        if (!out) throw config_error("cannot write series.csv");
        write_series_csv(out, r);
    }
    for (double t : cfg.snapshot_times) {
        if (t > r.t_end() * (1.0 + 1e-12)) continue;
        std::ofstream out(dir / ("snapshot_" + detail::time_tag(t) + ".csv"));
        if (!out) throw config_error("cannot write snapshot file");
        write_snapshot_csv(out, r, t, cfg.snapshot_points);
    }
    detail::write_text_file(dir / "summary.json", summary_json(r, hyp).dump(2) + "\n");

    log << (r.reached_stop() ? "maximal_time_detected" : "horizon_reached")
        << " t_end=" << detail::format_number(r.t_end()) << '\n';
    return 0;
}

/// Hypothesis validation only; prints the full report.
inline int run_validate(const RunConfig& cfg, std::ostream& log = std::cout) {
    const KineticModel model = build_model(cfg);
    const InitialDensity f_in = build_initial_density(cfg);
    const HypothesisReport hyp =
        validate_hypotheses(model, cfg.rho, f_in.m0(), f_in.m1());
    log << hyp.summary();
    return hyp.all_required_pass() ? 0 : 2;
}

/// Characteristics run against the finite-volume reference; writes
/// compare.csv and enforces the configured gap tolerances.
inline int run_compare(const RunConfig& cfg, std::ostream& log = std::cout) {
    const KineticModel model = build_model(cfg);
    const InitialDensity f_in = build_initial_density(cfg);
    const HypothesisReport hyp =
        validate_hypotheses(model, cfg.rho, f_in.m0(), f_in.m1());
    if (!hyp.all_required_pass()) {
        log << hyp.summary();
        log << "hypothesis validation failed; not solving\n";
        return 2;
    }

    const SimulationResult r =
        solve_nucleation_problem(model, f_in, cfg.rho, cfg.horizon, cfg.solver);

    std::vector<double> sample_times = cfg.snapshot_times;
    if (sample_times.empty())
        for (int k = 1; k <= 8; ++k)
            sample_times.push_back(cfg.horizon * k / 8.0);

    const UpwindResult fv =
        upwind_solve(model, f_in, cfg.rho, cfg.horizon, sample_times, cfg.oracle);
    const SolutionGap gap = compare_solutions(r, fv);

    const std::filesystem::path dir = detail::ensure_out_dir(cfg);
    {
        std::ofstream out(dir / "compare.csv");
        if (!out) throw config_error("cannot write compare.csv");
        write_compare_csv(out, gap);
    }

    log << "u_gap_max=" << detail::format_number(gap.monomer_sup)
        << " density_L1_max=" << detail::format_number(gap.density_l1_max) << '\n';
    if (gap.monomer_sup > cfg.compare_u_tolerance ||
        gap.density_l1_max > cfg.compare_density_tolerance) {
        log << "gap tolerance exceeded\n";
        return 5;
    }
    return 0;
}

/// Resolves the scenario (config file or preset), applies flag overrides,
/// dispatches the subcommand, and maps failures to exit codes: 2 for model
/// or hypothesis rejection, 3 for solver failures, 4 for config problems,
/// 5 for gap tolerance breaches.
inline int run_cli(const CliOptions& opt, std::ostream& log = std::cout,
                   std::ostream& err = std::cerr) {
    try {
        RunConfig cfg;
        if (!opt.config_path.empty() && !opt.preset.empty())
            throw config_error("give either --config or --preset, not both");
        if (!opt.config_path.empty())
            cfg = parse_run_config_file(opt.config_path);
        else if (!opt.preset.empty())
            cfg = preset_config(opt.preset);
        else
            throw config_error("need --config or --preset");

        if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
        if (opt.cells > 0) cfg.oracle.cells = opt.cells;
        if (opt.horizon > 0.0) cfg.horizon = opt.horizon;

        if (opt.subcommand == "solve") return run_solve(cfg, log);
        if (opt.subcommand == "validate") return run_validate(cfg, log);
        if (opt.subcommand == "compare") return run_compare(cfg, log);
        throw config_error("unknown subcommand '" + opt.subcommand + "'");
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const invalid_model_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const degenerate_input_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const hypothesis_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const error& e) {
        err << "solver failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace lsn
