#pragma once

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "toc/io.hpp"

namespace toc {

// CLI entry point, kept in the library so tests can drive it in-process.
// Exit codes: 0 ok, 2 invalid config, 3 solver non-convergence, 4 I/O error.
inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Time-optimal Dubins trajectories: Galerkin residual solver, "
                 "shooting baseline and MPC tracking"};
    app.require_subcommand(1);

    std::string config_path, out_override, nominal_path;
    bool verbose = false;
    int dense = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_override, "override the configured output directory");
        sub->add_flag("--verbose", verbose, "write a per-iteration trace to stderr");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the two-point boundary value problem");
    add_common(solve);
    solve->add_option("--dense", dense,
                      "also write trajectory_dense.csv with this many interpolated samples");

    CLI::App* compare = app.add_subcommand("compare", "run the solver and the shooting baseline");
    add_common(compare);

    CLI::App* track = app.add_subcommand("track", "track a nominal trajectory with MPC");
    add_common(track);
    track->add_option("--nominal", nominal_path,
                      "trajectory.csv from a previous solve (default: solve in-line)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        RunConfig config = load_config(config_path);
        if (!out_override.empty()) config.output_dir = out_override;
        if (solve->parsed()) return run_solve(config, verbose, dense);
        if (compare->parsed()) return run_compare(config, verbose);
        return run_track(config, nominal_path, verbose);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

} // namespace toc
