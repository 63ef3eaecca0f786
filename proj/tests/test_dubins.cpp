#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "toc/dubins.hpp"

using namespace toc;

namespace {
ProblemParams appendix_params() {
    ProblemParams p;
    p.mu_T = 0.25;
    p.mu_v = 1.0;
    p.mu_omega = 1.0;
    return p;
}
} // namespace

TEST_CASE("dynamics of the unicycle") {
    const auto f1 = dynamics({0, 0, 0}, {1, 0.5});
    REQUIRE(f1[0] == 1.0);
    REQUIRE(f1[1] == 0.0);
    REQUIRE(f1[2] == 0.5);

    const auto f2 = dynamics({3, -2, M_PI / 2}, {2, 0});
    REQUIRE(f2[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(f2[1] == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(f2[2] == 0.0);

    const auto f3 = dynamics({0, 0, M_PI / 4}, {std::sqrt(2.0), 1});
    REQUIRE(f3[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(f3[1] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(f3[2] == 1.0);
}

TEST_CASE("extremal right-hand sides") {
    const ProblemParams p = appendix_params();
    SECTION("axis-aligned") {
        const auto f = pmp_rhs(0.0, 0.0, 1.0, 0.0, 10.0, p);
        REQUIRE(f[0] == Catch::Approx(5.0).margin(1e-12));
        REQUIRE(f[1] == 0.0);
        REQUIRE(f[2] == 0.0);
        REQUIRE(f[3] == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("quarter turn heading") {
        const auto f = pmp_rhs(M_PI / 2, 2.0, 0.0, 1.0, 1.0, p);
        REQUIRE(f[0] == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(f[1] == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(f[2] == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(f[3] == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("zero costate freezes the system") {
        std::mt19937 rng(1);
        std::uniform_real_distribution<double> unif(-3.0, 3.0);
        for (int i = 0; i < 10; ++i) {
            const auto f = pmp_rhs(unif(rng), 0.0, 0.0, 0.0, std::abs(unif(rng)) + 0.1, p);
            for (double v : f) REQUIRE(v == 0.0);
        }
    }
}

TEST_CASE("control law") {
    const ProblemParams p = appendix_params();
    const DubinsControl c1 = optimal_controls(0.0, 1.0, 0.0, 0.0, p);
    REQUIRE(c1.v == Catch::Approx(0.5));
    REQUIRE(c1.omega == 0.0);

    const DubinsControl c2 = optimal_controls(M_PI / 2, 5.0, 0.0, 0.0, p);
    REQUIRE(c2.v == Catch::Approx(0.0).margin(1e-12));

    const DubinsControl c3 = optimal_controls(0.7, 0.0, 0.0, 3.0, p);
    REQUIRE(c3.omega == Catch::Approx(1.5));
}

TEST_CASE("Hamiltonian residual") {
    const ProblemParams p = appendix_params();
    // lambda_x = 2 sqrt(mu_v mu_T) = 1 is the straight-line optimum
    REQUIRE(hamiltonian_residual(0.0, 1.0, 0.0, 0.0, p) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(hamiltonian_residual(0.3, 0.0, 0.0, 0.0, p) == Catch::Approx(-0.25));
    REQUIRE(hamiltonian_residual(0.0, 2.0, 0.0, 0.0, p) == Catch::Approx(0.75));
}

TEST_CASE("state rows of pmp_rhs equal T times dynamics under the control law") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        ProblemParams p;
        p.mu_T = 0.1 + std::abs(unif(rng));
        p.mu_v = 0.1 + std::abs(unif(rng));
        p.mu_omega = 0.1 + std::abs(unif(rng));
        const double th = 3.0 * unif(rng), lth = unif(rng), lx = unif(rng), ly = unif(rng);
        const double T = 0.1 + std::abs(3.0 * unif(rng));
        const auto f = pmp_rhs(th, lth, lx, ly, T, p);
        const DubinsControl u = optimal_controls(th, lx, ly, lth, p);
        const auto g = dynamics({0.0, 0.0, th}, u);
        REQUIRE(f[0] == Catch::Approx(T * g[0]).margin(1e-12));
        REQUIRE(f[1] == Catch::Approx(T * g[1]).margin(1e-12));
        REQUIRE(f[2] == Catch::Approx(T * g[2]).margin(1e-12));
    }
}

TEST_CASE("costate rate equals minus T times the Hamiltonian theta-gradient") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        ProblemParams p;
        p.mu_T = 0.1 + std::abs(unif(rng));
        p.mu_v = 0.1 + std::abs(unif(rng));
        p.mu_omega = 0.1 + std::abs(unif(rng));
        const double th = 3.0 * unif(rng), lth = unif(rng), lx = unif(rng), ly = unif(rng);
        const double T = 0.1 + std::abs(3.0 * unif(rng));
        const auto f = pmp_rhs(th, lth, lx, ly, T, p);
        const double h = 1e-6;
        const double dH = (hamiltonian_residual(th + h, lx, ly, lth, p) -
                           hamiltonian_residual(th - h, lx, ly, lth, p)) / (2.0 * h);
        const double expected = -T * dH;
        const double tol = 1e-6 * std::max(1.0, std::abs(expected));
        REQUIRE(f[3] == Catch::Approx(expected).margin(tol));
    }
}

TEST_CASE("Hamiltonian residual is rotation invariant") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const ProblemParams p = appendix_params();
    for (int i = 0; i < 100; ++i) {
        const double th = 3.0 * unif(rng), lth = unif(rng), lx = unif(rng), ly = unif(rng);
        const double phi = 3.0 * unif(rng);
        // rotate the frame: heading shifts by phi, planar costate rotates with it
        const double lxr = std::cos(phi) * lx - std::sin(phi) * ly;
        const double lyr = std::sin(phi) * lx + std::cos(phi) * ly;
        const double h0 = hamiltonian_residual(th, lx, ly, lth, p);
        const double h1 = hamiltonian_residual(th + phi, lxr, lyr, lth, p);
        REQUIRE(h1 == Catch::Approx(h0).margin(1e-10));
    }
}
