#pragma once

#include <cmath>
#include <iostream>

#include "toc/assembly.hpp"
#include "toc/dubins.hpp"
#include "toc/mesh.hpp"

namespace toc {

// Constant-velocity estimate of the optimal time from the planar displacement.
// Coincident endpoints give no length scale; fall back to 1.
inline double initial_time(const DubinsState& X0, const DubinsState& XT, double mu_v,
                           double mu_T) {
    const double dx = XT.x - X0.x, dy = XT.y - X0.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 == 0.0) {
        std::cerr << "initial_time: coincident planar endpoints, falling back to T0 = 1\n";
        return 1.0;
    }
    return std::sqrt(mu_v / mu_T * d2);
}

namespace detail {
inline double sign_or_positive(double x) { return x >= 0.0 ? 1.0 : -1.0; }
} // namespace detail

// Unit-magnitude costate guesses. Signs are picked so that the initial
// velocity from the control law points toward the goal half-plane and the
// initial turn rate matches the turn toward the goal bearing.
inline AdjointState initial_adjoints(const DubinsState& X0, const DubinsState& XT,
                                     double /*mu_v*/, double /*mu_omega*/) {
    const double dx = XT.x - X0.x, dy = XT.y - X0.y;
    const double c0 = std::cos(X0.theta), s0 = std::sin(X0.theta);
    // v(0) = (lx c0 + ly s0)/(2 mu_v): forward if the goal is ahead
    const double sv = detail::sign_or_positive(dx * c0 + dy * s0);
    AdjointState adj;
    adj.lambda_x = sv * detail::sign_or_positive(c0);
    adj.lambda_y = sv * detail::sign_or_positive(s0);
    const double bearing = std::atan2(dy, dx);
    const double turn = std::remainder(bearing - X0.theta, 2.0 * M_PI);
    adj.lambda_theta = detail::sign_or_positive(turn);
    return adj;
}

// Cubic Bezier through the endpoint positions with tangents along the
// boundary headings, sampled at the mesh nodes. Theta is taken from the curve
// tangent, unwrapped across nodes, with the boundary values set exactly.
inline Eigen::MatrixX3d bezier_seed(const DubinsState& X0, const DubinsState& XT,
                                    const Mesh& mesh, double handle_scale = 1.0 / 3.0) {
    if (handle_scale <= 0.0)
        throw std::invalid_argument("bezier_seed: handle_scale must be positive");
    const int N = mesh.num_nodes();
    Eigen::MatrixX3d alpha(N, 3);
    const Eigen::Vector2d p0(X0.x, X0.y), p3(XT.x, XT.y);
    const double L = (p3 - p0).norm();
    if (L == 0.0) {
        // no geometry to seed from: hold position, interpolate the heading
        for (int k = 0; k < N; ++k) {
            const double t = mesh.nodes[k];
            alpha(k, 0) = X0.x;
            alpha(k, 1) = X0.y;
            alpha(k, 2) = X0.theta + t * (XT.theta - X0.theta);
        }
        alpha(0, 2) = X0.theta;
        alpha(N - 1, 2) = XT.theta;
        return alpha;
    }
    const Eigen::Vector2d p1 = p0 + handle_scale * L * Eigen::Vector2d(std::cos(X0.theta), std::sin(X0.theta));
    const Eigen::Vector2d p2 = p3 - handle_scale * L * Eigen::Vector2d(std::cos(XT.theta), std::sin(XT.theta));
    double prev = X0.theta;
    for (int k = 0; k < N; ++k) {
        const double t = mesh.nodes[k], s = 1.0 - t;
        const Eigen::Vector2d B = s * s * s * p0 + 3.0 * s * s * t * p1 + 3.0 * s * t * t * p2 + t * t * t * p3;
        const Eigen::Vector2d dB = 3.0 * s * s * (p1 - p0) + 6.0 * s * t * (p2 - p1) + 3.0 * t * t * (p3 - p2);
        double th = std::atan2(dB.y(), dB.x());
        while (th - prev > M_PI) th -= 2.0 * M_PI;
        while (th - prev < -M_PI) th += 2.0 * M_PI;
        alpha(k, 0) = B.x();
        alpha(k, 1) = B.y();
        alpha(k, 2) = th;
        prev = th;
    }
    alpha(0, 0) = X0.x;
    alpha(0, 1) = X0.y;
    alpha(0, 2) = X0.theta;
    alpha(N - 1, 0) = XT.x;
    alpha(N - 1, 1) = XT.y;
    alpha(N - 1, 2) = XT.theta;
    return alpha;
}

// Assemble the full SCP starting point from the heuristics above.
inline Unknowns build_initial_unknowns(const DubinsState& X0, const DubinsState& XT,
                                       const ProblemParams& params, const Mesh& mesh) {
    Unknowns u;
    u.alpha = bezier_seed(X0, XT, mesh);
    const AdjointState adj = initial_adjoints(X0, XT, params.mu_v, params.mu_omega);
    u.lambda_x = adj.lambda_x;
    u.lambda_y = adj.lambda_y;
    u.beta_theta = Eigen::VectorXd::Constant(mesh.num_nodes(), adj.lambda_theta);
    u.T = initial_time(X0, XT, params.mu_v, params.mu_T);
    return u;
}

} // namespace toc
