#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "toc/dubins.hpp"
#include "toc/mesh.hpp"

namespace toc {

// Full decision vector of the discretized extremal problem.
//
// Packed scalar layout (dimension 4N+3, N = number of nodes):
//   [0, 3N)        alpha, node-major: (x, y, theta) at node 0, node 1, ...
//   3N, 3N+1       lambda_x, lambda_y
//   [3N+2, 4N+2)   beta_theta (nodal lambda_theta values)
//   4N+2           T
struct Unknowns {
    Eigen::MatrixX3d alpha;      // N x 3 nodal states
    double lambda_x = 0;
    double lambda_y = 0;
    Eigen::VectorXd beta_theta;  // N nodal costate values
    double T = 1.0;

    int num_nodes() const { return static_cast<int>(alpha.rows()); }
    int dim() const { return 4 * num_nodes() + 3; }

    Eigen::VectorXd pack() const {
        const int N = num_nodes();
        Eigen::VectorXd z(dim());
        for (int k = 0; k < N; ++k)
            z.segment<3>(3 * k) = alpha.row(k);
        z[3 * N] = lambda_x;
        z[3 * N + 1] = lambda_y;
        z.segment(3 * N + 2, N) = beta_theta;
        z[4 * N + 2] = T;
        return z;
    }

    static Unknowns unpack(const Eigen::VectorXd& z) {
        if (z.size() < 7 || (z.size() - 3) % 4 != 0)
            throw std::invalid_argument("Unknowns::unpack: vector size is not 4N+3");
        const int N = static_cast<int>((z.size() - 3) / 4);
        Unknowns u;
        u.alpha.resize(N, 3);
        for (int k = 0; k < N; ++k)
            u.alpha.row(k) = z.segment<3>(3 * k);
        u.lambda_x = z[3 * N];
        u.lambda_y = z[3 * N + 1];
        u.beta_theta = z.segment(3 * N + 2, N);
        u.T = z[4 * N + 2];
        return u;
    }
};

// Column offsets into the packed Unknowns vector.
namespace layout {
inline int alpha_col(int node, int comp) { return 3 * node + comp; }
inline int lambda_x_col(int N) { return 3 * N; }
inline int lambda_y_col(int N) { return 3 * N + 1; }
inline int beta_col(int N, int node) { return 3 * N + 2 + node; }
inline int time_col(int N) { return 4 * N + 2; }

// Packed indices of the pinned boundary values (alpha rows 0 and N-1).
inline std::vector<int> fixed_indices(int N) {
    return {0, 1, 2, 3 * (N - 1), 3 * (N - 1) + 1, 3 * (N - 1) + 2};
}
} // namespace layout

// Residual system linearized at a given iterate:
//   b = Galerkin residuals (4N), d = nodal Hamiltonian residuals (N),
//   A = db/d(alpha, lambda, beta, T),  C = dd/d(alpha, lambda, beta).
// C deliberately has no T column; the Hamiltonian does not depend on T.
struct ResidualSystem {
    Eigen::VectorXd b;
    Eigen::VectorXd d;
    Eigen::MatrixXd A;
    Eigen::MatrixXd C;
};

namespace detail {
inline void check_dims(const Unknowns& u, const Mesh& mesh) {
    if (u.num_nodes() != mesh.num_nodes() || u.beta_theta.size() != mesh.num_nodes())
        throw std::invalid_argument("assembly: Unknowns dimensions do not match mesh");
}
} // namespace detail

// Piecewise-linear interpolant of the nodal values at tau.
inline std::pair<DubinsState, double> approximate_solution(const Unknowns& u, const Mesh& mesh,
                                                           double tau) {
    detail::check_dims(u, mesh);
    toc::detail::check_tau(tau);
    const int e = element_of(mesh, tau);
    const double h = mesh.element_length;
    const double phi1 = (tau - mesh.nodes[e]) / h;
    const double phi0 = 1.0 - phi1;
    DubinsState X;
    X.x = phi0 * u.alpha(e, 0) + phi1 * u.alpha(e + 1, 0);
    X.y = phi0 * u.alpha(e, 1) + phi1 * u.alpha(e + 1, 1);
    X.theta = phi0 * u.alpha(e, 2) + phi1 * u.alpha(e + 1, 2);
    const double lth = phi0 * u.beta_theta[e] + phi1 * u.beta_theta[e + 1];
    if (tau == mesh.nodes[e])  // keep nodal values exact
        return {{u.alpha(e, 0), u.alpha(e, 1), u.alpha(e, 2)}, u.beta_theta[e]};
    if (tau == mesh.nodes[e + 1])
        return {{u.alpha(e + 1, 0), u.alpha(e + 1, 1), u.alpha(e + 1, 2)}, u.beta_theta[e + 1]};
    return {X, lth};
}

// Galerkin residual vector b, length 4N. Row layout is node-major:
// rows 4i..4i+3 test the (x, y, theta, lambda_theta) equations against phi_i.
inline Eigen::VectorXd assemble_residual(const Unknowns& u, const Mesh& mesh,
                                         const QuadratureRule& quad,
                                         const ProblemParams& params) {
    detail::check_dims(u, mesh);
    const int N = mesh.num_nodes();
    const double h = mesh.element_length;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(4 * N);
    for (int e = 0; e < mesh.n_el; ++e) {
        // element-wise constant slopes of the interpolants
        const Eigen::Vector3d dal = (u.alpha.row(e + 1) - u.alpha.row(e)).transpose() / h;
        const double dbe = (u.beta_theta[e + 1] - u.beta_theta[e]) / h;
        for (int g = 0; g < quad.points_per_element; ++g) {
            const double tau = quad.point(e, g), w = quad.weight(e, g);
            const double phi1 = (tau - mesh.nodes[e]) / h;
            const double phi0 = (mesh.nodes[e + 1] - tau) / h;
            const double th = phi0 * u.alpha(e, 2) + phi1 * u.alpha(e + 1, 2);
            const double lth = phi0 * u.beta_theta[e] + phi1 * u.beta_theta[e + 1];
            const auto f = pmp_rhs(th, lth, u.lambda_x, u.lambda_y, u.T, params);
            const Eigen::Vector4d R(dal[0] - f[0], dal[1] - f[1], dal[2] - f[2], dbe - f[3]);
            b.segment<4>(4 * e) += (w * phi0) * R;
            b.segment<4>(4 * (e + 1)) += (w * phi1) * R;
        }
    }
    return b;
}

// Nodal Hamiltonian residuals d, length N.
inline Eigen::VectorXd assemble_hamiltonian(const Unknowns& u, const Mesh& mesh,
                                            const ProblemParams& params) {
    detail::check_dims(u, mesh);
    const int N = mesh.num_nodes();
    Eigen::VectorXd d(N);
    for (int i = 0; i < N; ++i)
        d[i] = hamiltonian_residual(u.alpha(i, 2), u.lambda_x, u.lambda_y, u.beta_theta[i], params);
    return d;
}

// Hand-derived Jacobians of the two residual maps; verified elsewhere against
// central finite differences. Column order matches Unknowns::pack.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> assemble_jacobians(
    const Unknowns& u, const Mesh& mesh, const QuadratureRule& quad,
    const ProblemParams& params) {
    detail::check_dims(u, mesh);
    const int N = mesh.num_nodes();
    const double h = mesh.element_length;
    const double lx = u.lambda_x, ly = u.lambda_y;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4 * N, 4 * N + 3);
    for (int e = 0; e < mesh.n_el; ++e) {
        for (int g = 0; g < quad.points_per_element; ++g) {
            const double tau = quad.point(e, g), w = quad.weight(e, g);
            const double phi1 = (tau - mesh.nodes[e]) / h;
            const double phi0 = (mesh.nodes[e + 1] - tau) / h;
            const double phi[2] = {phi0, phi1};
            const double th = phi0 * u.alpha(e, 2) + phi1 * u.alpha(e + 1, 2);
            const double lth = phi0 * u.beta_theta[e] + phi1 * u.beta_theta[e + 1];
            const double c = std::cos(th), s = std::sin(th);
            const double kv = u.T / (2.0 * params.mu_v);
            // rhs scaled by 1/T; the rhs is linear in T so this is df/dT
            const auto f1 = pmp_rhs(th, lth, lx, ly, 1.0, params);
            const Eigen::Vector4d df_dT(f1[0], f1[1], f1[2], f1[3]);
            const Eigen::Vector4d df_dth(
                kv * (-2.0 * lx * c * s + ly * (c * c - s * s)),
                kv * (lx * (c * c - s * s) + 2.0 * ly * c * s),
                0.0,
                kv * ((lx * lx - ly * ly) * (c * c - s * s) + 4.0 * lx * ly * c * s));
            const Eigen::Vector4d df_dlx(kv * c * c, kv * c * s, 0.0,
                                         kv * (2.0 * lx * c * s + ly * (s * s - c * c)));
            const Eigen::Vector4d df_dly(kv * c * s, kv * s * s, 0.0,
                                         kv * (-2.0 * ly * c * s + lx * (s * s - c * c)));
            const Eigen::Vector4d df_dlth(0.0, 0.0, u.T / (2.0 * params.mu_omega), 0.0);
            for (int a = 0; a < 2; ++a) {
                const int i = e + a;
                const double wphi = w * phi[a];
                // d(slope)/d(nodal values)
                for (int comp = 0; comp < 3; ++comp) {
                    A(4 * i + comp, layout::alpha_col(e, comp)) -= wphi / h;
                    A(4 * i + comp, layout::alpha_col(e + 1, comp)) += wphi / h;
                }
                A(4 * i + 3, layout::beta_col(N, e)) -= wphi / h;
                A(4 * i + 3, layout::beta_col(N, e + 1)) += wphi / h;
                // -d(rhs)/d(unknowns)
                for (int kk = 0; kk < 2; ++kk) {
                    const int k = e + kk;
                    A.block<4, 1>(4 * i, layout::alpha_col(k, 2)) -= wphi * phi[kk] * df_dth;
                    A.block<4, 1>(4 * i, layout::beta_col(N, k)) -= wphi * phi[kk] * df_dlth;
                }
                A.block<4, 1>(4 * i, layout::lambda_x_col(N)) -= wphi * df_dlx;
                A.block<4, 1>(4 * i, layout::lambda_y_col(N)) -= wphi * df_dly;
                A.block<4, 1>(4 * i, layout::time_col(N)) -= wphi * df_dT;
            }
        }
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, 4 * N + 2);
    for (int i = 0; i < N; ++i) {
        const double th = u.alpha(i, 2);
        const double c = std::cos(th), s = std::sin(th);
        const double proj = lx * c + ly * s;
        C(i, layout::alpha_col(i, 2)) = proj * (ly * c - lx * s) / (2.0 * params.mu_v);
        C(i, layout::lambda_x_col(N)) = proj * c / (2.0 * params.mu_v);
        C(i, layout::lambda_y_col(N)) = proj * s / (2.0 * params.mu_v);
        C(i, layout::beta_col(N, i)) = u.beta_theta[i] / (2.0 * params.mu_omega);
    }
    return {std::move(A), std::move(C)};
}

inline ResidualSystem assemble_system(const Unknowns& u, const Mesh& mesh,
                                      const QuadratureRule& quad, const ProblemParams& params) {
    ResidualSystem sys;
    sys.b = assemble_residual(u, mesh, quad, params);
    sys.d = assemble_hamiltonian(u, mesh, params);
    std::tie(sys.A, sys.C) = assemble_jacobians(u, mesh, quad, params);
    return sys;
}

} // namespace toc
