#pragma once

#include <Eigen/Dense>
#include <array>
#include <chrono>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "toc/assembly.hpp"
#include "toc/simplex.hpp"

namespace toc {

struct ScpConfig {
    double rho_s = 1.0;     // trust radius on state nodal updates
    double rho_q = 1.0;     // trust radius on adjoint updates
    double rho_T = 1.0;     // trust radius on the time update
    double epsilon = 1e-2;  // stop when ||delta||_inf <= epsilon
    int max_iters = 200;
    double fd_step = 1e-6;  // step for the finite-difference Jacobian oracle (tests only)
    // Listed with the other solver constants in the source material but never
    // defined there; kept so configs can carry it, unused by the iteration.
    double vartheta = 1e-4;
};

struct ScpIterationRecord {
    double b_norm1 = 0;    // ||b||_1 at the start of the iteration
    double d_norm1 = 0;    // ||d||_1 at the start of the iteration
    double step_inf = 0;   // ||delta||_inf of the step taken
    double T = 0;          // T after the update
};

struct SolveResult {
    Unknowns unknowns;
    bool converged = false;
    int iterations = 0;
    std::vector<ScpIterationRecord> residual_history;  // one record per iteration
    double wall_time = 0.0;                            // seconds
};

// Minimum value T is clamped to after each update; the extremal ODEs scale
// with T and collapse as T -> 0.
inline constexpr double kMinTime = 0.1;

// Solve the trust-region L1 subproblem
//   min ||b + A*delta||_1 + ||d + C*delta_ab||_1
//   s.t. delta[fixed] = 0, box bounds from the trust radii,
// where delta_ab is delta without its trailing T entry. Columns follow the
// packed Unknowns layout when A has 4N+3 columns; for reduced test instances
// that do not match that shape every column gets the rho_s radius.
inline Eigen::VectorXd solve_subproblem(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                        const Eigen::MatrixXd& C, const Eigen::VectorXd& d,
                                        const std::array<double, 3>& radii,
                                        const std::vector<int>& fixed_indices) {
    const int n = static_cast<int>(A.cols());
    const int mA = static_cast<int>(A.rows());
    const int mC = static_cast<int>(C.rows());
    if (b.size() != mA || d.size() != mC)
        throw std::invalid_argument("solve_subproblem: residual sizes do not match Jacobians");
    if (mC > 0 && C.cols() != n - 1)
        throw std::invalid_argument("solve_subproblem: C must have one column fewer than A (no T column)");

    Eigen::MatrixXd G(mA + mC, n);
    G.topRows(mA) = A;
    if (mC > 0) {
        G.bottomLeftCorner(mC, n - 1) = C;
        G.bottomRightCorner(mC, 1).setZero();
    }
    Eigen::VectorXd r(mA + mC);
    r.head(mA) = b;
    r.tail(mC) = d;

    Eigen::VectorXd lower(n), upper(n);
    const bool standard_layout = n >= 11 && (n - 3) % 4 == 0;
    if (standard_layout) {
        const int N = (n - 3) / 4;
        for (int j = 0; j < 3 * N; ++j) upper[j] = radii[0];
        for (int j = 3 * N; j < 4 * N + 2; ++j) upper[j] = radii[1];
        upper[n - 1] = radii[2];
    } else {
        upper.setConstant(radii[0]);
    }
    lower = -upper;
    for (int idx : fixed_indices) {
        if (idx < 0 || idx >= n)
            throw std::invalid_argument("solve_subproblem: fixed index out of range");
        lower[idx] = upper[idx] = 0.0;
    }

    auto res = lp::minimize_l1_box(G, r, lower, upper);
    if (!res.optimal)
        throw std::runtime_error("solve_subproblem: LP solver failed: " + res.message);
    return res.z;
}

// Trust-region SCP loop: assemble, solve the L1 subproblem, update, repeat
// until the step norm drops below epsilon or the iteration cap is reached.
// Boundary rows of alpha are pinned and never touched by the update.
inline SolveResult scp_iterate(const Unknowns& init, const Mesh& mesh, const QuadratureRule& quad,
                               const ProblemParams& params, const ScpConfig& config,
                               std::ostream* trace = nullptr) {
    const auto t_start = std::chrono::steady_clock::now();
    const int N = mesh.num_nodes();
    detail::check_dims(init, mesh);

    SolveResult out;
    out.unknowns = init;
    const auto fixed = layout::fixed_indices(N);
    const std::array<double, 3> radii = {config.rho_s, config.rho_q, config.rho_T};

    for (int it = 1; it <= config.max_iters; ++it) {
        const auto sys = assemble_system(out.unknowns, mesh, quad, params);
        const Eigen::VectorXd delta =
            solve_subproblem(sys.A, sys.b, sys.C, sys.d, radii, fixed);

        const Eigen::VectorXd z0 = out.unknowns.pack();
        Eigen::VectorXd z = z0 + delta;
        // keep the pinned boundary rows bitwise intact
        for (int idx : fixed) z[idx] = z0[idx];
        out.unknowns = Unknowns::unpack(z);
        if (out.unknowns.T < kMinTime) out.unknowns.T = kMinTime;

        ScpIterationRecord rec;
        rec.b_norm1 = sys.b.lpNorm<1>();
        rec.d_norm1 = sys.d.lpNorm<1>();
        rec.step_inf = delta.lpNorm<Eigen::Infinity>();
        rec.T = out.unknowns.T;
        out.residual_history.push_back(rec);
        out.iterations = it;
        if (trace)
            (*trace) << "iter=" << it << " b1=" << rec.b_norm1 << " d1=" << rec.d_norm1
                     << " step=" << rec.step_inf << " T=" << rec.T << "\n";

        if (rec.step_inf <= config.epsilon) {
            out.converged = true;
            break;
        }
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

} // namespace toc
