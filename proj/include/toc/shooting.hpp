#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "toc/dubins.hpp"
#include "toc/scp.hpp"

namespace toc {

struct ShootingGuess {
    double lambda_x = 0;
    double lambda_y = 0;
    double lambda_theta0 = 0;
    double T = 1.0;
};

struct PmpSample {
    double tau = 0;
    double x = 0, y = 0, theta = 0;
    double lambda_theta = 0;
};

struct ShootingResult {
    bool converged = false;
    ShootingGuess guess;
    std::vector<PmpSample> trajectory;
    double mismatch_norm = 0;
    int iterations = 0;
};

// Fixed-step RK4 integration of the extremal ODEs (x, y, theta, lambda_theta)
// over tau in [0,1] with constants (lambda_x, lambda_y, T) from the guess.
inline std::vector<PmpSample> integrate_pmp(const DubinsState& X0, const ShootingGuess& guess,
                                            const ProblemParams& params, int steps) {
    if (steps < 1)
        throw std::invalid_argument("integrate_pmp: steps must be >= 1");
    const double h = 1.0 / steps;
    Eigen::Vector4d y(X0.x, X0.y, X0.theta, guess.lambda_theta0);
    auto f = [&](const Eigen::Vector4d& s) {
        const auto r = pmp_rhs(s[2], s[3], guess.lambda_x, guess.lambda_y, guess.T, params);
        return Eigen::Vector4d(r[0], r[1], r[2], r[3]);
    };
    std::vector<PmpSample> traj;
    traj.reserve(steps + 1);
    traj.push_back({0.0, y[0], y[1], y[2], y[3]});
    for (int i = 0; i < steps; ++i) {
        const Eigen::Vector4d k1 = f(y);
        const Eigen::Vector4d k2 = f(y + 0.5 * h * k1);
        const Eigen::Vector4d k3 = f(y + 0.5 * h * k2);
        const Eigen::Vector4d k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite())
            throw std::runtime_error("integrate_pmp: state became non-finite at step " +
                                     std::to_string(i + 1));
        traj.push_back({(i + 1) * h, y[0], y[1], y[2], y[3]});
    }
    return traj;
}

// Single shooting: damped Newton on
//   F(guess) = [x(1)-xT, y(1)-yT, theta(1)-thetaT, H(0)],
// where the Hamiltonian condition at tau=0 closes the free-time problem.
// The Jacobian comes from central finite differences; steps are halved up to
// 8 times whenever ||F|| fails to decrease.
inline ShootingResult shoot(const DubinsState& X0, const DubinsState& XT,
                            const ShootingGuess& init, const ProblemParams& params,
                            double tol = 1e-6, int max_iters = 50, int steps = 400) {
    if (init.T <= 0)
        throw std::invalid_argument("shoot: initial T must be positive");

    auto eval = [&](const ShootingGuess& g) -> Eigen::Vector4d {
        const auto traj = integrate_pmp(X0, g, params, steps);
        const auto& end = traj.back();
        return {end.x - XT.x, end.y - XT.y, end.theta - XT.theta,
                hamiltonian_residual(X0.theta, g.lambda_x, g.lambda_y, g.lambda_theta0, params)};
    };
    auto safe_eval = [&](const ShootingGuess& g, Eigen::Vector4d& F) -> bool {
        if (g.T <= kMinTime) return false;
        try {
            F = eval(g);
        } catch (const std::runtime_error&) {
            return false;
        }
        return F.allFinite();
    };
    auto as_vec = [](const ShootingGuess& g) {
        return Eigen::Vector4d(g.lambda_x, g.lambda_y, g.lambda_theta0, g.T);
    };
    auto as_guess = [](const Eigen::Vector4d& v) {
        return ShootingGuess{v[0], v[1], v[2], v[3]};
    };

    ShootingResult res;
    res.guess = init;
    Eigen::Vector4d F;
    if (!safe_eval(init, F)) {
        res.mismatch_norm = std::numeric_limits<double>::infinity();
        return res;
    }
    double fn = F.lpNorm<Eigen::Infinity>();

    for (int it = 1; it <= max_iters && fn > tol; ++it) {
        res.iterations = it;
        // central finite-difference Jacobian
        Eigen::Matrix4d J;
        const Eigen::Vector4d g0 = as_vec(res.guess);
        bool fd_ok = true;
        for (int j = 0; j < 4 && fd_ok; ++j) {
            const double hj = 1e-6 * std::max(1.0, std::abs(g0[j]));
            Eigen::Vector4d gp = g0, gm = g0;
            gp[j] += hj;
            gm[j] -= hj;
            Eigen::Vector4d Fp, Fm;
            fd_ok = safe_eval(as_guess(gp), Fp) && safe_eval(as_guess(gm), Fm);
            if (fd_ok) J.col(j) = (Fp - Fm) / (2.0 * hj);
        }
        if (!fd_ok) break;

        // least-squares Newton step, robust to a (near-)singular Jacobian
        const Eigen::Vector4d dg = J.colPivHouseholderQr().solve(-F);
        if (!dg.allFinite()) break;

        double t = 1.0;
        bool accepted = false;
        for (int cut = 0; cut < 8; ++cut, t *= 0.5) {
            const ShootingGuess trial = as_guess(g0 + t * dg);
            Eigen::Vector4d Ft;
            if (!safe_eval(trial, Ft)) continue;
            const double ft = Ft.lpNorm<Eigen::Infinity>();
            if (ft < fn) {
                res.guess = trial;
                F = Ft;
                fn = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // divergence or T driven to the clamp
    }

    res.converged = fn <= tol;
    res.mismatch_norm = fn;
    res.trajectory = integrate_pmp(X0, res.guess, params, steps);
    return res;
}

} // namespace toc
