#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace toc::lp {

struct L1BoxResult {
    Eigen::VectorXd z;       // minimizer
    double objective = 0.0;  // sum |r + G z| at the minimizer
    bool optimal = false;
    int iterations = 0;
    std::string message;
};

// Minimize ||r + G z||_1 subject to lower <= z <= upper (finite bounds).
//
// Slack-variable reformulation: with residual split r + G z = u - v, u,v >= 0,
// the problem becomes the LP
//     min sum(u) + sum(v)   s.t.   G z - u + v = -r,  box on z,
// solved by a bounded-variable primal simplex. Starting all z at their lower
// bounds gives an immediate basic feasible solution (one of u_k, v_k basic per
// row, basis matrix diagonal +-1), so no phase-one is needed. Dantzig pricing
// with a switch to Bland's rule guards against cycling; iteration counts are
// capped and reported as failure rather than looping forever.
class L1BoxSimplex {
public:
    L1BoxSimplex(const Eigen::MatrixXd& G, const Eigen::VectorXd& r,
                 const Eigen::VectorXd& lower, const Eigen::VectorXd& upper)
        : m_(static_cast<int>(G.rows())), n_(static_cast<int>(G.cols())) {
        if (r.size() != m_ || lower.size() != n_ || upper.size() != n_)
            throw std::invalid_argument("minimize_l1_box: inconsistent dimensions");
        for (int j = 0; j < n_; ++j) {
            if (!(lower[j] <= upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j]))
                throw std::invalid_argument("minimize_l1_box: bounds must be finite with lower <= upper");
        }
        const double inf = std::numeric_limits<double>::infinity();
        nt_ = n_ + 2 * m_;
        M_.resize(m_, nt_);
        M_.leftCols(n_) = G;
        M_.middleCols(n_, m_) = -Eigen::MatrixXd::Identity(m_, m_);
        M_.rightCols(m_) = Eigen::MatrixXd::Identity(m_, m_);
        rhs_ = -r;
        cost_ = Eigen::VectorXd::Zero(nt_);
        cost_.tail(2 * m_).setOnes();
        lb_ = Eigen::VectorXd::Zero(nt_);
        ub_ = Eigen::VectorXd::Constant(nt_, inf);
        lb_.head(n_) = lower;
        ub_.head(n_) = upper;
    }

    L1BoxResult solve() {
        const double rc_tol = 1e-9;   // reduced-cost tolerance
        const double piv_tol = 1e-10; // pivot magnitude tolerance
        const int max_iters = 200 * (m_ + nt_) + 2000;
        const int bland_after = 4 * (m_ + nt_) + 400;

        basic_.assign(m_, -1);
        in_basis_.assign(nt_, -1);
        at_upper_.assign(nt_, false);

        // initial residual with all structural variables at their lower bound
        Eigen::VectorXd q = rhs_;
        for (int j = 0; j < n_; ++j) q -= M_.col(j) * lb_[j];
        for (int k = 0; k < m_; ++k) {
            // pick the slack whose column keeps the basic value nonnegative:
            // v_k carries +1 in row k, u_k carries -1
            basic_[k] = (q[k] >= 0.0) ? n_ + m_ + k : n_ + k;
            in_basis_[basic_[k]] = k;
        }

        L1BoxResult res;
        Eigen::VectorXd xB(m_);
        int iter = 0;
        for (; iter < max_iters; ++iter) {
            // refactorize and recompute basic values each iteration (m is small)
            Eigen::MatrixXd B(m_, m_);
            for (int k = 0; k < m_; ++k) B.col(k) = M_.col(basic_[k]);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);

            Eigen::VectorXd rhs_nb = rhs_;
            for (int j = 0; j < nt_; ++j) {
                if (in_basis_[j] >= 0) continue;
                const double val = at_upper_[j] ? ub_[j] : lb_[j];
                if (val != 0.0) rhs_nb -= M_.col(j) * val;
            }
            xB = lu.solve(rhs_nb);

            // pricing
            Eigen::VectorXd cB(m_);
            for (int k = 0; k < m_; ++k) cB[k] = cost_[basic_[k]];
            const Eigen::VectorXd y = lu.transpose().solve(cB);

            const bool bland = iter >= bland_after;
            int enter = -1;
            double best = rc_tol;
            for (int j = 0; j < nt_; ++j) {
                if (in_basis_[j] >= 0) continue;
                if (ub_[j] - lb_[j] < 1e-14) continue;  // pinned variable
                const double rc = cost_[j] - M_.col(j).dot(y);
                const double viol = at_upper_[j] ? rc : -rc;
                if (viol > best || (bland && viol > rc_tol)) {
                    enter = j;
                    best = viol;
                    if (bland) break;
                }
            }
            if (enter < 0) {
                res.optimal = true;
                break;
            }

            const double sigma = at_upper_[enter] ? -1.0 : 1.0;
            const Eigen::VectorXd w = lu.solve(M_.col(enter));

            // ratio test: entering moves by t >= 0, basics move by -sigma*w*t
            double t = ub_[enter] - lb_[enter];  // bound flip distance
            int leave_pos = -1;
            bool leave_to_upper = false;
            for (int k = 0; k < m_; ++k) {
                const double g = sigma * w[k];
                const int bj = basic_[k];
                if (g > piv_tol) {
                    const double room = xB[k] - lb_[bj];
                    const double tk = room > 0.0 ? room / g : 0.0;
                    if (tk < t - 1e-12 || (tk < t + 1e-12 && leave_pos >= 0 && bj < basic_[leave_pos])) {
                        t = tk;
                        leave_pos = k;
                        leave_to_upper = false;
                    }
                } else if (g < -piv_tol && std::isfinite(ub_[bj])) {
                    const double room = ub_[bj] - xB[k];
                    const double tk = room > 0.0 ? room / (-g) : 0.0;
                    if (tk < t - 1e-12 || (tk < t + 1e-12 && leave_pos >= 0 && bj < basic_[leave_pos])) {
                        t = tk;
                        leave_pos = k;
                        leave_to_upper = true;
                    }
                }
            }
            if (!std::isfinite(t)) {
                res.message = "unbounded direction in L1 subproblem (numerical failure)";
                break;
            }

            if (leave_pos < 0) {
                at_upper_[enter] = !at_upper_[enter];  // bound flip
            } else {
                const int bj = basic_[leave_pos];
                in_basis_[bj] = -1;
                at_upper_[bj] = leave_to_upper;
                basic_[leave_pos] = enter;
                in_basis_[enter] = leave_pos;
            }
        }
        if (!res.optimal && res.message.empty())
            res.message = "simplex iteration cap exceeded";

        res.iterations = iter;
        res.z.resize(n_);
        for (int j = 0; j < n_; ++j) {
            if (in_basis_[j] >= 0)
                res.z[j] = xB[in_basis_[j]];
            else
                res.z[j] = at_upper_[j] ? ub_[j] : lb_[j];
        }
        // clamp roundoff excursions outside the box
        for (int j = 0; j < n_; ++j)
            res.z[j] = std::min(std::max(res.z[j], lb_[j]), ub_[j]);
        double obj = 0.0;
        for (int k = 0; k < m_; ++k) obj += std::abs(-rhs_[k] + M_.row(k).head(n_).dot(res.z));
        res.objective = obj;
        return res;
    }

private:
    int m_, n_, nt_;
    Eigen::MatrixXd M_;
    Eigen::VectorXd rhs_, cost_, lb_, ub_;
    std::vector<int> basic_, in_basis_;
    std::vector<bool> at_upper_;
};

inline L1BoxResult minimize_l1_box(const Eigen::MatrixXd& G, const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    return L1BoxSimplex(G, r, lower, upper).solve();
}

} // namespace toc::lp
