#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace toc {

// Uniform partition of the reference interval [0,1].
//
// Node indexing follows the usual 1-based convention in prose (tau_1 .. tau_N)
// but is 0-based in code: nodes[0] = 0, nodes[n_el] = 1.
struct Mesh {
    int n_el = 0;                // number of elements
    std::vector<double> nodes;   // N = n_el + 1 nodes, strictly increasing
    double element_length = 0;   // h = 1 / n_el

    int num_nodes() const { return n_el + 1; }
};

inline Mesh build_mesh(int n_el) {
    if (n_el < 1)
        throw std::invalid_argument("build_mesh: n_el must be >= 1");
    Mesh mesh;
    mesh.n_el = n_el;
    mesh.element_length = 1.0 / n_el;
    mesh.nodes.resize(n_el + 1);
    for (int i = 0; i <= n_el; ++i)
        mesh.nodes[i] = static_cast<double>(i) / n_el;
    mesh.nodes.front() = 0.0;
    mesh.nodes.back() = 1.0;
    return mesh;
}

// Index of the element containing tau; points on an interior node belong to
// either neighbor, the left one is returned.
inline int element_of(const Mesh& mesh, double tau) {
    int e = static_cast<int>(tau * mesh.n_el);
    if (e >= mesh.n_el) e = mesh.n_el - 1;
    if (e < 0) e = 0;
    while (e > 0 && tau < mesh.nodes[e]) --e;
    while (e + 1 < mesh.n_el && tau > mesh.nodes[e + 1]) ++e;
    return e;
}

namespace detail {

inline void check_node_index(const Mesh& mesh, int i) {
    if (i < 0 || i >= mesh.num_nodes())
        throw std::out_of_range("basis: node index " + std::to_string(i) + " out of range");
}

inline void check_tau(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::out_of_range("basis: tau outside [0,1]");
}

// Interior mesh node exactly hit by tau, or -1.
inline int interior_node_at(const Mesh& mesh, double tau) {
    const int j = static_cast<int>(std::lround(tau * mesh.n_el));
    if (j >= 1 && j <= mesh.n_el - 1 && tau == mesh.nodes[j]) return j;
    return -1;
}

} // namespace detail

// Piecewise-linear Lagrange hat function phi_i evaluated at tau.
inline double eval_basis(const Mesh& mesh, int i, double tau) {
    detail::check_node_index(mesh, i);
    detail::check_tau(tau);
    const auto& nd = mesh.nodes;
    const double h = mesh.element_length;
    if (tau == nd[i]) return 1.0;  // nodal interpolation, exact
    if (i > 0 && tau >= nd[i - 1] && tau < nd[i])
        return (tau - nd[i - 1]) / h;
    if (i < mesh.num_nodes() - 1 && tau > nd[i] && tau <= nd[i + 1])
        return (nd[i + 1] - tau) / h;
    return 0.0;
}

// Derivative of phi_i on the element containing tau. The slope is piecewise
// constant and jumps at nodes, so evaluation exactly at an interior node is
// ambiguous and rejected; use the element-disambiguated overload there.
inline double eval_basis_deriv(const Mesh& mesh, int i, double tau, int element) {
    detail::check_node_index(mesh, i);
    detail::check_tau(tau);
    if (element < 0 || element >= mesh.n_el)
        throw std::out_of_range("eval_basis_deriv: element index out of range");
    if (tau < mesh.nodes[element] || tau > mesh.nodes[element + 1])
        throw std::invalid_argument("eval_basis_deriv: tau not inside the given element");
    if (i == element) return -1.0 / mesh.element_length;
    if (i == element + 1) return 1.0 / mesh.element_length;
    return 0.0;
}

inline double eval_basis_deriv(const Mesh& mesh, int i, double tau) {
    detail::check_node_index(mesh, i);
    detail::check_tau(tau);
    if (detail::interior_node_at(mesh, tau) >= 0)
        throw std::invalid_argument(
            "eval_basis_deriv: tau lies exactly on an interior node; pass the element index");
    return eval_basis_deriv(mesh, i, tau, element_of(mesh, tau));
}

// Gauss-Legendre abscissae/weights per element, element-major storage.
struct QuadratureRule {
    int points_per_element = 0;
    std::vector<double> tau;  // size n_el * points_per_element
    std::vector<double> w;

    double point(int e, int g) const { return tau[e * points_per_element + g]; }
    double weight(int e, int g) const { return w[e * points_per_element + g]; }
};

namespace detail {

// Nodes/weights on [-1,1] by Newton iteration on the Legendre recurrence.
inline void gauss_legendre_reference(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

} // namespace detail

inline QuadratureRule build_quadrature(const Mesh& mesh, int points_per_element) {
    if (points_per_element < 2)
        throw std::invalid_argument("build_quadrature: need at least 2 points per element");
    std::vector<double> xr, wr;
    detail::gauss_legendre_reference(points_per_element, xr, wr);
    QuadratureRule rule;
    rule.points_per_element = points_per_element;
    rule.tau.reserve(mesh.n_el * points_per_element);
    rule.w.reserve(mesh.n_el * points_per_element);
    for (int e = 0; e < mesh.n_el; ++e) {
        const double a = mesh.nodes[e], b = mesh.nodes[e + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int g = 0; g < points_per_element; ++g) {
            rule.tau.push_back(mid + half * xr[g]);
            rule.w.push_back(half * wr[g]);
        }
    }
    return rule;
}

} // namespace toc
