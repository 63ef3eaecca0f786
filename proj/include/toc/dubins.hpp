#pragma once

#include <array>
#include <cmath>

namespace toc {

struct DubinsState {
    double x = 0;
    double y = 0;
    double theta = 0;  // heading, radians; never wrapped
};

struct DubinsControl {
    double v = 0;      // forward velocity
    double omega = 0;  // angular velocity
};

// Costates paired with (x, y, theta). lambda_x and lambda_y are constant
// along any extremal because x and y are cyclic; lambda_theta varies.
struct AdjointState {
    double lambda_x = 0;
    double lambda_y = 0;
    double lambda_theta = 0;
};

struct ProblemParams {
    double mu_T = 0.25;   // time-cost weight
    double mu_v = 1.0;    // velocity-effort weight
    double mu_omega = 1.0;
    int eta = 1;          // PMP abnormality scalar; only the normal case (1) is supported
    DubinsState X0;
    DubinsState XT;
};

// Unicycle kinematics: (v cos th, v sin th, omega).
inline std::array<double, 3> dynamics(const DubinsState& X, const DubinsControl& u) {
    return {u.v * std::cos(X.theta), u.v * std::sin(X.theta), u.omega};
}

// Right-hand sides of the PMP extremal ODEs on the reference interval,
// d/dtau of (x, y, theta, lambda_theta). The time map t = tau*T is implicit.
inline std::array<double, 4> pmp_rhs(double theta, double lambda_theta, double lambda_x,
                                     double lambda_y, double T, const ProblemParams& p) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double kv = T / (2.0 * p.mu_v);
    return {
        kv * (lambda_x * c * c + lambda_y * c * s),
        kv * (lambda_x * c * s + lambda_y * s * s),
        T / (2.0 * p.mu_omega) * lambda_theta,
        kv * ((lambda_x * lambda_x - lambda_y * lambda_y) * c * s +
              lambda_x * lambda_y * (s * s - c * c)),
    };
}

// Stationarity of the Hamiltonian in u gives the control law in closed form.
inline DubinsControl optimal_controls(double theta, double lambda_x, double lambda_y,
                                      double lambda_theta, const ProblemParams& p) {
    const double proj = lambda_x * std::cos(theta) + lambda_y * std::sin(theta);
    return {proj / (2.0 * p.mu_v), lambda_theta / (2.0 * p.mu_omega)};
}

// Maximized Hamiltonian minus mu_T; zero along a time-optimal extremal
// (free final time makes the Hamiltonian a constant of the trajectory).
inline double hamiltonian_residual(double theta, double lambda_x, double lambda_y,
                                   double lambda_theta, const ProblemParams& p) {
    const double proj = lambda_x * std::cos(theta) + lambda_y * std::sin(theta);
    return proj * proj / (4.0 * p.mu_v) +
           lambda_theta * lambda_theta / (4.0 * p.mu_omega) - p.mu_T;
}

} // namespace toc
