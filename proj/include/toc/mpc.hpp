#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "toc/assembly.hpp"
#include "toc/dubins.hpp"

namespace toc {

struct NominalSample {
    double t = 0;
    DubinsState X;
    double v = 0;
    double omega = 0;
};

// Time-sampled nominal trajectory and controls produced by the solver.
struct NominalTrajectory {
    std::vector<NominalSample> samples;  // t strictly increasing, 0 .. T_star
    double T_star = 0;

    // Piecewise-linear interpolation of all columns, clamped to [0, T_star].
    NominalSample at(double t) const {
        if (samples.empty())
            throw std::runtime_error("NominalTrajectory::at: empty trajectory");
        if (t <= samples.front().t) return samples.front();
        if (t >= samples.back().t) return samples.back();
        auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const NominalSample& s) { return v < s.t; });
        const auto& s1 = *hi;
        const auto& s0 = *(hi - 1);
        const double fr = (t - s0.t) / (s1.t - s0.t);
        NominalSample out;
        out.t = t;
        out.X.x = s0.X.x + fr * (s1.X.x - s0.X.x);
        out.X.y = s0.X.y + fr * (s1.X.y - s0.X.y);
        out.X.theta = s0.X.theta + fr * (s1.X.theta - s0.X.theta);
        out.v = s0.v + fr * (s1.v - s0.v);
        out.omega = s0.omega + fr * (s1.omega - s0.omega);
        return out;
    }
};

// Nodal samples of the converged solution with controls from the control law.
inline NominalTrajectory make_nominal(const Unknowns& u, const Mesh& mesh,
                                      const ProblemParams& params) {
    NominalTrajectory nom;
    nom.T_star = u.T;
    nom.samples.reserve(mesh.num_nodes());
    for (int k = 0; k < mesh.num_nodes(); ++k) {
        NominalSample s;
        s.t = mesh.nodes[k] * u.T;
        s.X = {u.alpha(k, 0), u.alpha(k, 1), u.alpha(k, 2)};
        const DubinsControl c =
            optimal_controls(u.alpha(k, 2), u.lambda_x, u.lambda_y, u.beta_theta[k], params);
        s.v = c.v;
        s.omega = c.omega;
        nom.samples.push_back(s);
    }
    return nom;
}

struct MpcConfig {
    double dt = 0.0;  // control period; 0 derives T_star/1000 (f = 1000/T_star)
    int horizon = 5;
    Eigen::Matrix3d P_H = Eigen::Matrix3d::Identity();  // terminal weight, PSD
    Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();    // stage state weight, PSD
    Eigen::Matrix2d R = 1e-2 * Eigen::Matrix2d::Identity();  // stage control weight, PD
    double noise_scale = 1e-3;  // Sigma = dt^2 * noise_scale * I
    std::uint64_t seed = 0;
};

inline double resolve_dt(const NominalTrajectory& nominal, const MpcConfig& config) {
    return config.dt > 0.0 ? config.dt : nominal.T_star / 1000.0;
}

inline int num_control_steps(const NominalTrajectory& nominal, const MpcConfig& config) {
    return static_cast<int>(std::lround(nominal.T_star / resolve_dt(nominal, config)));
}

struct AffineModel {
    Eigen::Matrix3d A;
    Eigen::Matrix<double, 3, 2> B;
    Eigen::Vector3d c;
};

// Forward-Euler discretization of the Jacobian linearization about (Xhat, uhat).
// The affine model reproduces the Euler step exactly at the linearization point.
inline AffineModel linearize_dynamics(const DubinsState& Xhat, const DubinsControl& uhat,
                                      double dt) {
    if (dt <= 0.0)
        throw std::invalid_argument("linearize_dynamics: dt must be positive");
    const double c = std::cos(Xhat.theta), s = std::sin(Xhat.theta);
    AffineModel m;
    m.A = Eigen::Matrix3d::Identity();
    m.A(0, 2) = -dt * uhat.v * s;
    m.A(1, 2) = dt * uhat.v * c;
    m.B << dt * c, 0.0, dt * s, 0.0, 0.0, dt;
    const auto f = dynamics(Xhat, uhat);
    const Eigen::Vector3d xh(Xhat.x, Xhat.y, Xhat.theta);
    const Eigen::Vector2d uh(uhat.v, uhat.omega);
    m.c = xh + dt * Eigen::Vector3d(f[0], f[1], f[2]) - m.A * xh - m.B * uh;
    return m;
}

// First control of the finite-horizon tracking problem at step k. The nominal
// is treated as a trajectory of the affine model, so the problem reduces to an
// unconstrained time-varying LQR on the deviation variables and is solved
// exactly by a backward Riccati recursion. Near the end of the trajectory the
// horizon shrinks to the remaining steps.
inline DubinsControl mpc_step(const DubinsState& X, int k, const NominalTrajectory& nominal,
                              const MpcConfig& config) {
    const double dt = resolve_dt(nominal, config);
    const int n_total = num_control_steps(nominal, config);
    if (k < 0 || k >= n_total)
        throw std::out_of_range("mpc_step: step index outside the nominal range");
    const int H = std::min(config.horizon, n_total - k);

    Eigen::Matrix3d P = config.P_H;
    Eigen::Matrix<double, 2, 3> K0;
    K0.setZero();
    for (int j = H - 1; j >= 0; --j) {
        const NominalSample ref = nominal.at((k + j) * dt);
        const AffineModel m = linearize_dynamics(ref.X, {ref.v, ref.omega}, dt);
        const Eigen::Matrix2d F = config.R + m.B.transpose() * P * m.B;
        const Eigen::Matrix<double, 2, 3> K = F.ldlt().solve(m.B.transpose() * P * m.A);
        P = config.Q + m.A.transpose() * P * m.A - m.A.transpose() * P * m.B * K;
        if (j == 0) K0 = K;
    }

    const NominalSample ref0 = nominal.at(k * dt);
    const Eigen::Vector3d xi(X.x - ref0.X.x, X.y - ref0.X.y, X.theta - ref0.X.theta);
    const Eigen::Vector2d u = Eigen::Vector2d(ref0.v, ref0.omega) - K0 * xi;
    return {u[0], u[1]};
}

struct TrackingRecord {
    double t = 0;
    DubinsState X;       // actual state at decision time
    DubinsControl u;     // control applied over [t, t+dt]
    DubinsState X_ref;   // nominal state at t
    DubinsControl u_ref; // nominal control at t
    double err_norm = 0; // ||X - X_ref||_2 over all three components
};

struct TrackingLog {
    std::vector<TrackingRecord> records;  // one per control step
    double terminal_error = 0;            // planar distance to the nominal endpoint
};

namespace detail {
// One RK4 step of the nonlinear plant under a zero-order-hold control.
inline DubinsState plant_step(const DubinsState& X, const DubinsControl& u, double dt) {
    auto f = [&u](const Eigen::Vector3d& s) {
        return Eigen::Vector3d(u.v * std::cos(s[2]), u.v * std::sin(s[2]), u.omega);
    };
    Eigen::Vector3d y(X.x, X.y, X.theta);
    const Eigen::Vector3d k1 = f(y);
    const Eigen::Vector3d k2 = f(y + 0.5 * dt * k1);
    const Eigen::Vector3d k3 = f(y + 0.5 * dt * k2);
    const Eigen::Vector3d k4 = f(y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return {y[0], y[1], y[2]};
}
} // namespace detail

// Closed-loop rollout from the nominal start: MPC control, nonlinear plant,
// optional per-step additive Gaussian noise with covariance dt^2*noise_scale*I.
inline TrackingLog simulate_tracking(const NominalTrajectory& nominal, const MpcConfig& config,
                                     bool dynamics_noise) {
    if (nominal.samples.empty())
        throw std::invalid_argument("simulate_tracking: empty nominal trajectory");
    const double dt = resolve_dt(nominal, config);
    const int n = num_control_steps(nominal, config);
    const double sigma = dt * std::sqrt(config.noise_scale);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TrackingLog log;
    log.records.reserve(n);
    DubinsState X = nominal.samples.front().X;
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        const DubinsControl u = mpc_step(X, k, nominal, config);
        const NominalSample ref = nominal.at(t);
        TrackingRecord rec;
        rec.t = t;
        rec.X = X;
        rec.u = u;
        rec.X_ref = ref.X;
        rec.u_ref = {ref.v, ref.omega};
        rec.err_norm = std::sqrt((X.x - ref.X.x) * (X.x - ref.X.x) +
                                 (X.y - ref.X.y) * (X.y - ref.X.y) +
                                 (X.theta - ref.X.theta) * (X.theta - ref.X.theta));
        log.records.push_back(rec);

        X = detail::plant_step(X, u, dt);
        if (dynamics_noise) {
            X.x += sigma * gauss(rng);
            X.y += sigma * gauss(rng);
            X.theta += sigma * gauss(rng);
        }
    }
    const DubinsState& goal = nominal.samples.back().X;
    log.terminal_error = std::hypot(X.x - goal.x, X.y - goal.y);
    return log;
}

} // namespace toc
