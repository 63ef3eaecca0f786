#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toc/config.hpp"
#include "toc/init.hpp"
#include "toc/mpc.hpp"
#include "toc/scp.hpp"
#include "toc/shooting.hpp"

namespace toc {

// ---- CSV ----------------------------------------------------------------

// 17 significant digits round-trips IEEE doubles exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    for (size_t i = 0; i < table.header.size(); ++i)
        out << (i ? "," : "") << table.header[i];
    out << "\n";
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_double(row[i]);
        out << "\n";
    }
    if (!out)
        throw IoError("failed while writing " + path);
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line))
        throw IoError(path + " is empty");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ','))
        table.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            char* end = nullptr;
            row.push_back(std::strtod(cell.c_str(), &end));
            if (end == cell.c_str())
                throw IoError(path + ": non-numeric cell \"" + cell + "\"");
        }
        if (row.size() != table.header.size())
            throw IoError(path + ": row width does not match header");
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---- output directory lock ----------------------------------------------

// Holds an exclusive flock on <dir>/.lock for the lifetime of a run so two
// processes cannot clobber each other's artifacts.
class DirLock {
public:
    explicit DirLock(const std::string& dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create output directory " + dir + ": " + ec.message());
        const std::string path = dir + "/.lock";
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0)
            throw IoError("cannot open lock file " + path);
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw IoError("output directory " + dir + " is locked by another run");
        }
    }
    ~DirLock() {
        if (fd_ >= 0) ::close(fd_);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_ = -1;
};

// ---- artifact writers -----------------------------------------------------

inline CsvTable trajectory_table(const Unknowns& u, const Mesh& mesh,
                                 const ProblemParams& params) {
    CsvTable t;
    t.header = {"tau", "t", "x", "y", "theta", "lambda_theta", "v_star", "omega_star"};
    for (int k = 0; k < mesh.num_nodes(); ++k) {
        const double tau = mesh.nodes[k];
        const DubinsControl c =
            optimal_controls(u.alpha(k, 2), u.lambda_x, u.lambda_y, u.beta_theta[k], params);
        t.rows.push_back({tau, tau * u.T, u.alpha(k, 0), u.alpha(k, 1), u.alpha(k, 2),
                          u.beta_theta[k], c.v, c.omega});
    }
    return t;
}

inline CsvTable dense_trajectory_table(const Unknowns& u, const Mesh& mesh,
                                       const ProblemParams& params, int samples) {
    CsvTable t;
    t.header = {"tau", "t", "x", "y", "theta", "lambda_theta", "v_star", "omega_star"};
    for (int k = 0; k < samples; ++k) {
        const double tau = samples == 1 ? 0.0 : static_cast<double>(k) / (samples - 1);
        const auto [X, lth] = approximate_solution(u, mesh, tau);
        const DubinsControl c = optimal_controls(X.theta, u.lambda_x, u.lambda_y, lth, params);
        t.rows.push_back({tau, tau * u.T, X.x, X.y, X.theta, lth, c.v, c.omega});
    }
    return t;
}

inline CsvTable scp_trace_table(const SolveResult& result) {
    CsvTable t;
    t.header = {"iteration", "b_norm1", "d_norm1", "step_inf", "T"};
    for (size_t i = 0; i < result.residual_history.size(); ++i) {
        const auto& r = result.residual_history[i];
        t.rows.push_back({static_cast<double>(i + 1), r.b_norm1, r.d_norm1, r.step_inf, r.T});
    }
    return t;
}

inline nlohmann::json unknowns_json(const Unknowns& u) {
    nlohmann::json j;
    j["lambda_x"] = u.lambda_x;
    j["lambda_y"] = u.lambda_y;
    j["T"] = u.T;
    nlohmann::json alpha = nlohmann::json::array();
    for (int k = 0; k < u.num_nodes(); ++k)
        alpha.push_back({u.alpha(k, 0), u.alpha(k, 1), u.alpha(k, 2)});
    j["alpha"] = alpha;
    j["beta_theta"] = std::vector<double>(u.beta_theta.data(), u.beta_theta.data() + u.beta_theta.size());
    return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

// ---- runners ---------------------------------------------------------------

// Exit codes shared by the CLI: 0 ok, 2 invalid config, 3 solver
// non-convergence, 4 I/O failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitIo = 4;

struct SolveArtifacts {
    SolveResult result;
    Mesh mesh;
    NominalTrajectory nominal;
};

namespace detail {

inline SolveArtifacts solve_problem(const RunConfig& config, bool verbose) {
    SolveArtifacts art;
    art.mesh = build_mesh(config.discretization.n_el);
    const QuadratureRule quad = build_quadrature(art.mesh, config.discretization.quad_points);
    const Unknowns init =
        build_initial_unknowns(config.problem.X0, config.problem.XT, config.problem, art.mesh);
    art.result = scp_iterate(init, art.mesh, quad, config.problem, config.scp,
                             verbose ? &std::cerr : nullptr);
    art.nominal = make_nominal(art.result.unknowns, art.mesh, config.problem);
    return art;
}

inline nlohmann::json solve_summary(const RunConfig& config, const SolveArtifacts& art) {
    const QuadratureRule quad = build_quadrature(art.mesh, config.discretization.quad_points);
    const Eigen::VectorXd b =
        assemble_residual(art.result.unknowns, art.mesh, quad, config.problem);
    const Eigen::VectorXd d = assemble_hamiltonian(art.result.unknowns, art.mesh, config.problem);
    nlohmann::json j;
    j["converged"] = art.result.converged;
    j["iterations"] = art.result.iterations;
    j["T_star"] = art.result.unknowns.T;
    j["residuals"] = {{"b_norm1", b.lpNorm<1>()},
                      {"b_norm_inf", b.lpNorm<Eigen::Infinity>()},
                      {"d_norm1", d.lpNorm<1>()},
                      {"d_norm_inf", d.lpNorm<Eigen::Infinity>()}};
    j["wall_time_s"] = art.result.wall_time;
    j["config"] = effective_config_json(config);
    return j;
}

} // namespace detail

// solve: run GWRM+SCP, write trajectory.csv, unknowns.json, scp_trace.csv and
// summary.json. Artifacts are written even when the solver does not converge.
inline int run_solve(const RunConfig& config, bool verbose = false, int dense_samples = 0,
                     SolveArtifacts* out = nullptr) {
    DirLock lock(config.output_dir);
    const std::string dir = config.output_dir;
    SolveArtifacts art = detail::solve_problem(config, verbose);

    write_csv(dir + "/trajectory.csv",
              trajectory_table(art.result.unknowns, art.mesh, config.problem));
    if (dense_samples > 0)
        write_csv(dir + "/trajectory_dense.csv",
                  dense_trajectory_table(art.result.unknowns, art.mesh, config.problem,
                                         dense_samples));
    write_csv(dir + "/scp_trace.csv", scp_trace_table(art.result));
    write_json(dir + "/unknowns.json", unknowns_json(art.result.unknowns));
    write_json(dir + "/summary.json", detail::solve_summary(config, art));

    const bool converged = art.result.converged;
    if (out) *out = std::move(art);
    return converged ? kExitOk : kExitNoConvergence;
}

// compare: run GWRM and single shooting from the same heuristic start. Either
// method failing is recorded in the summary, not fatal.
inline int run_compare(const RunConfig& config, bool verbose = false) {
    DirLock lock(config.output_dir);
    const std::string dir = config.output_dir;

    SolveArtifacts art = detail::solve_problem(config, verbose);

    const AdjointState adj = initial_adjoints(config.problem.X0, config.problem.XT,
                                              config.problem.mu_v, config.problem.mu_omega);
    ShootingGuess guess{adj.lambda_x, adj.lambda_y, adj.lambda_theta,
                        initial_time(config.problem.X0, config.problem.XT, config.problem.mu_v,
                                     config.problem.mu_T)};
    const auto t0 = std::chrono::steady_clock::now();
    const ShootingResult shot = shoot(config.problem.X0, config.problem.XT, guess, config.problem,
                                      config.shooting.tol, config.shooting.max_iters,
                                      config.shooting.steps);
    const double shoot_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // both trajectories on the mesh-node tau grid; the shooting trajectory is
    // interpolated from its RK4 samples
    CsvTable cmp;
    cmp.header = {"tau", "gwrm_x", "gwrm_y", "gwrm_theta", "shoot_x", "shoot_y", "shoot_theta"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double max_gap = 0.0;
    const auto& traj = shot.trajectory;
    const bool have_traj = static_cast<int>(traj.size()) == config.shooting.steps + 1;
    for (int k = 0; k < art.mesh.num_nodes(); ++k) {
        const double tau = art.mesh.nodes[k];
        double sx = nan, sy = nan, sth = nan;
        if (have_traj) {
            const double pos = tau * config.shooting.steps;
            const int i0 = std::min(static_cast<int>(pos), config.shooting.steps - 1);
            const double fr = pos - i0;
            sx = traj[i0].x + fr * (traj[i0 + 1].x - traj[i0].x);
            sy = traj[i0].y + fr * (traj[i0 + 1].y - traj[i0].y);
            sth = traj[i0].theta + fr * (traj[i0 + 1].theta - traj[i0].theta);
        }
        const auto& a = art.result.unknowns.alpha;
        if (have_traj)
            max_gap = std::max(max_gap, std::hypot(a(k, 0) - sx, a(k, 1) - sy));
        cmp.rows.push_back({tau, a(k, 0), a(k, 1), a(k, 2), sx, sy, sth});
    }
    write_csv(dir + "/compare.csv", cmp);

    nlohmann::json j;
    j["gwrm"] = {{"converged", art.result.converged},
                 {"T_star", art.result.unknowns.T},
                 {"iterations", art.result.iterations},
                 {"wall_time_s", art.result.wall_time}};
    j["shooting"] = {{"converged", shot.converged},
                     {"T_star", shot.guess.T},
                     {"iterations", shot.iterations},
                     {"mismatch_norm", shot.mismatch_norm},
                     {"wall_time_s", shoot_time}};
    j["max_position_gap"] = max_gap;
    j["config"] = effective_config_json(config);
    write_json(dir + "/compare_summary.json", j);
    return kExitOk;
}

inline NominalTrajectory load_nominal(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::vector<std::string> expect = {"tau", "t", "x", "y", "theta", "lambda_theta",
                                             "v_star", "omega_star"};
    if (t.header != expect)
        throw IoError(path + " does not have the trajectory.csv column schema");
    if (t.rows.size() < 2)
        throw IoError(path + " has fewer than two samples");
    NominalTrajectory nom;
    for (const auto& r : t.rows)
        nom.samples.push_back({r[1], {r[2], r[3], r[4]}, r[6], r[7]});
    nom.T_star = nom.samples.back().t;
    return nom;
}

// track: closed-loop MPC rollout over a nominal from a prior solve artifact
// (or an in-line solve when no artifact is given).
inline int run_track(const RunConfig& config, const std::string& nominal_path, bool verbose = false) {
    DirLock lock(config.output_dir);
    const std::string dir = config.output_dir;

    NominalTrajectory nominal;
    if (!nominal_path.empty()) {
        nominal = load_nominal(nominal_path);
    } else {
        SolveArtifacts art = detail::solve_problem(config, verbose);
        write_csv(dir + "/trajectory.csv",
                  trajectory_table(art.result.unknowns, art.mesh, config.problem));
        write_csv(dir + "/scp_trace.csv", scp_trace_table(art.result));
        write_json(dir + "/unknowns.json", unknowns_json(art.result.unknowns));
        write_json(dir + "/summary.json", detail::solve_summary(config, art));
        if (!art.result.converged)
            return kExitNoConvergence;
        nominal = std::move(art.nominal);
    }

    const bool noise = config.mpc.noise_scale > 0.0;
    const TrackingLog log = simulate_tracking(nominal, config.mpc, noise);

    CsvTable t;
    t.header = {"t", "x", "y", "theta", "v", "omega", "x_ref", "y_ref", "theta_ref",
                "v_ref", "omega_ref", "err_norm"};
    double sq_sum = 0.0;
    for (const auto& r : log.records) {
        t.rows.push_back({r.t, r.X.x, r.X.y, r.X.theta, r.u.v, r.u.omega, r.X_ref.x, r.X_ref.y,
                          r.X_ref.theta, r.u_ref.v, r.u_ref.omega, r.err_norm});
        sq_sum += r.err_norm * r.err_norm;
    }
    write_csv(dir + "/tracking.csv", t);

    nlohmann::json j;
    j["terminal_error"] = log.terminal_error;
    j["rms_error"] = log.records.empty() ? 0.0 : std::sqrt(sq_sum / log.records.size());
    j["seed"] = config.mpc.seed;
    j["steps"] = log.records.size();
    j["dt"] = resolve_dt(nominal, config.mpc);
    j["noise"] = noise;
    j["config"] = effective_config_json(config);
    write_json(dir + "/tracking_summary.json", j);
    return kExitOk;
}

} // namespace toc
