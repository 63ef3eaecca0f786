#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "toc/assembly.hpp"
#include "toc/init.hpp"
#include "toc/scp.hpp"

using namespace toc;

namespace {

ProblemParams appendix_params() {
    ProblemParams p;
    p.mu_T = 0.25;
    p.mu_v = 1.0;
    p.mu_omega = 1.0;
    return p;
}

// exact straight-line optimum: x = 5 tau, lambda_x = 2 sqrt(mu_v mu_T), T = 10
Unknowns straight_line_optimum(const Mesh& mesh) {
    Unknowns u;
    const int N = mesh.num_nodes();
    u.alpha.setZero(N, 3);
    for (int k = 0; k < N; ++k) u.alpha(k, 0) = 5.0 * mesh.nodes[k];
    u.lambda_x = 1.0;
    u.lambda_y = 0.0;
    u.beta_theta = Eigen::VectorXd::Zero(N);
    u.T = 10.0;
    return u;
}

Unknowns random_unknowns(int N, std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(-1.5, 1.5);
    Unknowns u;
    u.alpha.resize(N, 3);
    for (int k = 0; k < N; ++k)
        u.alpha.row(k) << unif(rng), unif(rng), unif(rng);
    u.lambda_x = unif(rng);
    u.lambda_y = unif(rng);
    u.beta_theta.resize(N);
    for (int k = 0; k < N; ++k) u.beta_theta[k] = unif(rng);
    u.T = 2.0 + std::abs(unif(rng)) * 10.0;
    return u;
}

// central finite differences of a vector-valued map of the packed unknowns
template <class F>
Eigen::MatrixXd fd_jacobian(F&& f, const Unknowns& u, int out_rows, double step) {
    const Eigen::VectorXd z0 = u.pack();
    Eigen::MatrixXd J(out_rows, z0.size());
    for (int j = 0; j < z0.size(); ++j) {
        Eigen::VectorXd zp = z0, zm = z0;
        zp[j] += step;
        zm[j] -= step;
        J.col(j) = (f(Unknowns::unpack(zp)) - f(Unknowns::unpack(zm))) / (2.0 * step);
    }
    return J;
}

void require_jacobians_match(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd,
                             double rel_tol, double abs_floor) {
    REQUIRE(analytic.rows() == fd.rows());
    REQUIRE(analytic.cols() == fd.cols());
    for (int i = 0; i < analytic.rows(); ++i)
        for (int j = 0; j < analytic.cols(); ++j) {
            const double scale = std::max(std::abs(analytic(i, j)), std::abs(fd(i, j)));
            const double err = std::abs(analytic(i, j) - fd(i, j));
            REQUIRE(err <= rel_tol * scale + abs_floor);
        }
}

} // namespace

TEST_CASE("approximate_solution interpolates the nodal table") {
    const Mesh mesh = build_mesh(4);
    std::mt19937 rng(2);
    const Unknowns u = random_unknowns(mesh.num_nodes(), rng);
    SECTION("nodal values are exact") {
        for (int k = 0; k < mesh.num_nodes(); ++k) {
            const auto [X, lth] = approximate_solution(u, mesh, mesh.nodes[k]);
            REQUIRE(X.x == u.alpha(k, 0));
            REQUIRE(X.y == u.alpha(k, 1));
            REQUIRE(X.theta == u.alpha(k, 2));
            REQUIRE(lth == u.beta_theta[k]);
        }
    }
    SECTION("midpoint of a single element") {
        const Mesh m1 = build_mesh(1);
        Unknowns v;
        v.alpha.resize(2, 3);
        v.alpha << 0, 0, 0, 1, 2, 3;
        v.beta_theta = Eigen::Vector2d(0.0, 4.0);
        v.T = 1.0;
        const auto [X, lth] = approximate_solution(v, m1, 0.5);
        REQUIRE(X.x == Catch::Approx(0.5));
        REQUIRE(X.y == Catch::Approx(1.0));
        REQUIRE(X.theta == Catch::Approx(1.5));
        REQUIRE(lth == Catch::Approx(2.0));
    }
    SECTION("constant nodal values give a constant interpolant") {
        Unknowns v = u;
        for (int k = 0; k < mesh.num_nodes(); ++k) v.alpha.row(k) << 0.3, -0.7, 1.1;
        v.beta_theta.setConstant(0.9);
        for (double tau : {0.0, 0.13, 0.5, 0.77, 1.0}) {
            const auto [X, lth] = approximate_solution(v, mesh, tau);
            REQUIRE(X.x == Catch::Approx(0.3).margin(1e-14));
            REQUIRE(X.y == Catch::Approx(-0.7).margin(1e-14));
            REQUIRE(X.theta == Catch::Approx(1.1).margin(1e-14));
            REQUIRE(lth == Catch::Approx(0.9).margin(1e-14));
        }
    }
}

TEST_CASE("residual vanishes for stationary zero-costate candidates") {
    const Mesh mesh = build_mesh(6);
    const QuadratureRule quad = build_quadrature(mesh, 4);
    const ProblemParams p = appendix_params();
    Unknowns u;
    u.alpha.resize(mesh.num_nodes(), 3);
    for (int k = 0; k < mesh.num_nodes(); ++k) u.alpha.row(k) << 1.0, -2.0, 0.4;
    u.lambda_x = u.lambda_y = 0.0;
    u.beta_theta = Eigen::VectorXd::Zero(mesh.num_nodes());
    u.T = 3.0;
    const Eigen::VectorXd b = assemble_residual(u, mesh, quad, p);
    REQUIRE(b.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("residual vanishes on the analytic straight-line optimum") {
    const Mesh mesh = build_mesh(19);
    const QuadratureRule quad = build_quadrature(mesh, 4);
    const ProblemParams p = appendix_params();
    const Unknowns u = straight_line_optimum(mesh);
    const Eigen::VectorXd b = assemble_residual(u, mesh, quad, p);
    REQUIRE(b.lpNorm<Eigen::Infinity>() < 1e-10);
    SECTION("and detects an infeasible perturbation") {
        Unknowns v = u;
        v.alpha(7, 0) += 0.1;
        const Eigen::VectorXd bp = assemble_residual(v, mesh, quad, p);
        REQUIRE(bp.lpNorm<Eigen::Infinity>() > 1e-3);
    }
}

TEST_CASE("Hamiltonian vector") {
    const Mesh mesh = build_mesh(19);
    const ProblemParams p = appendix_params();
    SECTION("zero on the straight-line optimum") {
        const Eigen::VectorXd d = assemble_hamiltonian(straight_line_optimum(mesh), mesh, p);
        REQUIRE(d.size() == 20);
        REQUIRE(d.lpNorm<Eigen::Infinity>() < 1e-12);
    }
    SECTION("minus mu_T with all costates zero") {
        Unknowns u = straight_line_optimum(mesh);
        u.lambda_x = 0.0;
        const Eigen::VectorXd d = assemble_hamiltonian(u, mesh, p);
        for (int i = 0; i < d.size(); ++i) REQUIRE(d[i] == Catch::Approx(-0.25));
    }
}

TEST_CASE("analytic Jacobians agree with central differences") {
    const ProblemParams p = appendix_params();
    const ScpConfig cfg;  // fd_step lives here
    std::mt19937 rng(123);
    const auto check = [&](int n_el, int trials) {
        const Mesh mesh = build_mesh(n_el);
        const QuadratureRule quad = build_quadrature(mesh, 4);
        for (int t = 0; t < trials; ++t) {
            const Unknowns u = random_unknowns(mesh.num_nodes(), rng);
            const auto [A, C] = assemble_jacobians(u, mesh, quad, p);
            const Eigen::MatrixXd A_fd = fd_jacobian(
                [&](const Unknowns& w) { return assemble_residual(w, mesh, quad, p); }, u,
                4 * mesh.num_nodes(), cfg.fd_step);
            require_jacobians_match(A, A_fd, 1e-5, 1e-8);
            const Eigen::MatrixXd C_fd = fd_jacobian(
                [&](const Unknowns& w) { return assemble_hamiltonian(w, mesh, p); }, u,
                mesh.num_nodes(), cfg.fd_step);
            // d does not depend on T: last finite-difference column must vanish
            REQUIRE(C_fd.rightCols<1>().lpNorm<Eigen::Infinity>() < 1e-9);
            require_jacobians_match(C, C_fd.leftCols(C.cols()), 1e-5, 1e-8);
        }
    };
    check(5, 10);
    check(19, 2);
}

TEST_CASE("theta-equation rows do not couple to the planar costates") {
    const Mesh mesh = build_mesh(7);
    const QuadratureRule quad = build_quadrature(mesh, 4);
    const ProblemParams p = appendix_params();
    std::mt19937 rng(9);
    const Unknowns u = random_unknowns(mesh.num_nodes(), rng);
    const auto [A, C] = assemble_jacobians(u, mesh, quad, p);
    const int N = mesh.num_nodes();
    for (int i = 0; i < N; ++i) {
        REQUIRE(A(4 * i + 2, layout::lambda_x_col(N)) == 0.0);
        REQUIRE(A(4 * i + 2, layout::lambda_y_col(N)) == 0.0);
    }
}

TEST_CASE("mesh refinement shrinks the residual of a smooth candidate") {
    const ProblemParams p = appendix_params();
    // smooth, not extremal: the residual measures the interpolation defect
    const auto fill = [](const Mesh& mesh) {
        Unknowns u;
        const int N = mesh.num_nodes();
        u.alpha.resize(N, 3);
        u.beta_theta.resize(N);
        for (int k = 0; k < N; ++k) {
            const double tau = mesh.nodes[k];
            u.alpha(k, 0) = std::sin(M_PI * tau);
            u.alpha(k, 1) = tau * tau;
            u.alpha(k, 2) = 0.5 * std::cos(2.0 * tau);
            u.beta_theta[k] = std::sin(2.0 * M_PI * tau);
        }
        u.lambda_x = 0.8;
        u.lambda_y = -0.6;
        u.T = 7.0;
        return u;
    };
    const Mesh coarse = build_mesh(19), fine = build_mesh(38);
    const Eigen::VectorXd b_coarse =
        assemble_residual(fill(coarse), coarse, build_quadrature(coarse, 4), p);
    const Eigen::VectorXd b_fine = assemble_residual(fill(fine), fine, build_quadrature(fine, 4), p);
    REQUIRE(b_fine.lpNorm<Eigen::Infinity>() < b_coarse.lpNorm<Eigen::Infinity>());
}

TEST_CASE("assembly is invariant to quadrature point relabeling") {
    const Mesh mesh = build_mesh(9);
    const ProblemParams p = appendix_params();
    std::mt19937 rng(17);
    const Unknowns u = random_unknowns(mesh.num_nodes(), rng);
    const QuadratureRule quad = build_quadrature(mesh, 4);
    QuadratureRule reversed = quad;
    for (int e = 0; e < mesh.n_el; ++e)
        for (int g = 0; g < quad.points_per_element; ++g) {
            reversed.tau[e * 4 + g] = quad.point(e, 3 - g);
            reversed.w[e * 4 + g] = quad.weight(e, 3 - g);
        }
    const Eigen::VectorXd b1 = assemble_residual(u, mesh, quad, p);
    const Eigen::VectorXd b2 = assemble_residual(u, mesh, reversed, p);
    REQUIRE((b1 - b2).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("assembly rejects mismatched dimensions") {
    const Mesh mesh = build_mesh(5);
    const QuadratureRule quad = build_quadrature(mesh, 4);
    std::mt19937 rng(1);
    const Unknowns u = random_unknowns(4, rng);  // wrong node count
    REQUIRE_THROWS_AS(assemble_residual(u, mesh, quad, appendix_params()), std::invalid_argument);
}

TEST_CASE("pack and unpack round-trip") {
    std::mt19937 rng(77);
    const Unknowns u = random_unknowns(11, rng);
    const Unknowns v = Unknowns::unpack(u.pack());
    REQUIRE((v.alpha - u.alpha).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((v.beta_theta - u.beta_theta).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE(v.lambda_x == u.lambda_x);
    REQUIRE(v.lambda_y == u.lambda_y);
    REQUIRE(v.T == u.T);
}
