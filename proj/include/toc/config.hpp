#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toc/dubins.hpp"
#include "toc/mpc.hpp"
#include "toc/scp.hpp"

namespace toc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ShootingConfig {
    int steps = 400;
    double tol = 1e-6;
    int max_iters = 50;
};

struct DiscretizationConfig {
    int n_el = 19;
    int quad_points = 4;
};

// Full run configuration; every field has an Appendix-style default so a
// config file only needs the values it overrides. Unknown keys are rejected.
struct RunConfig {
    ProblemParams problem;  // defaults below
    DiscretizationConfig discretization;
    ScpConfig scp;
    ShootingConfig shooting;
    MpcConfig mpc;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    RunConfig() {
        problem.X0 = {0.0, 0.0, 0.0};
        problem.XT = {5.0, 5.0, M_PI / 2.0};
    }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::string& section,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known)
            throw ConfigError("unknown key \"" + (section.empty() ? it.key() : section + "." + it.key()) + "\"");
    }
}

inline double get_num(const json& obj, const std::string& section, const char* key, double def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError(section + "." + key + " must be a number");
    return v.get<double>();
}

inline int get_int(const json& obj, const std::string& section, const char* key, int def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError(section + "." + key + " must be an integer");
    return v.get<int>();
}

inline DubinsState get_state(const json& obj, const std::string& section, const char* key,
                             const DubinsState& def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
        throw ConfigError(section + "." + key + " must be a [x, y, theta] array");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

// Weight matrices accept a scalar (multiple of identity) or a full array.
template <int N>
Eigen::Matrix<double, N, N> get_weight(const json& obj, const std::string& section,
                                       const char* key, const Eigen::Matrix<double, N, N>& def) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (v.is_number())
        return v.get<double>() * Eigen::Matrix<double, N, N>::Identity();
    if (v.is_array() && v.size() == N) {
        Eigen::Matrix<double, N, N> m;
        for (int i = 0; i < N; ++i) {
            if (!v[i].is_array() || v[i].size() != N)
                throw ConfigError(section + "." + key + " rows must have " + std::to_string(N) + " entries");
            for (int j = 0; j < N; ++j) {
                if (!v[i][j].is_number())
                    throw ConfigError(section + "." + key + " entries must be numbers");
                m(i, j) = v[i][j].get<double>();
            }
        }
        return m;
    }
    throw ConfigError(section + "." + key + " must be a scalar or a " + std::to_string(N) + "x" +
                      std::to_string(N) + " array");
}

template <int N>
bool is_psd(const Eigen::Matrix<double, N, N>& m, double* min_eig = nullptr) {
    if (!m.isApprox(m.transpose(), 1e-12) && (m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm()))
        return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m);
    if (min_eig) *min_eig = es.eigenvalues().minCoeff();
    return es.eigenvalues().minCoeff() >= -1e-12;
}

} // namespace detail

inline void validate_config(const RunConfig& c) {
    std::vector<std::string> errs;
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    auto finite = [](const DubinsState& s) {
        return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta);
    };
    require(finite(c.problem.X0), "problem.X0 must be finite");
    require(finite(c.problem.XT), "problem.XT must be finite");
    require(std::isfinite(c.problem.mu_T) && c.problem.mu_T > 0, "problem.mu_T must be > 0");
    require(std::isfinite(c.problem.mu_v) && c.problem.mu_v > 0, "problem.mu_v must be > 0");
    require(std::isfinite(c.problem.mu_omega) && c.problem.mu_omega > 0, "problem.mu_omega must be > 0");
    require(c.problem.eta == 1, "problem.eta: only the normal case eta = 1 is supported");
    require(c.discretization.n_el >= 1, "discretization.n_el must be >= 1");
    require(c.discretization.quad_points >= 2, "discretization.quad_points must be >= 2");
    require(c.scp.rho_s > 0, "scp.rho_s must be > 0");
    require(c.scp.rho_q > 0, "scp.rho_q must be > 0");
    require(c.scp.rho_T > 0, "scp.rho_T must be > 0");
    require(c.scp.epsilon > 0, "scp.epsilon must be > 0");
    require(c.scp.max_iters >= 1, "scp.max_iters must be >= 1");
    require(c.scp.fd_step > 0, "scp.fd_step must be > 0");
    require(c.shooting.steps >= 1, "shooting.steps must be >= 1");
    require(c.shooting.tol > 0, "shooting.tol must be > 0");
    require(c.shooting.max_iters >= 1, "shooting.max_iters must be >= 1");
    require(std::isfinite(c.mpc.dt) && c.mpc.dt >= 0, "mpc.dt must be >= 0 (0 derives T*/1000)");
    require(c.mpc.horizon >= 1, "mpc.horizon must be >= 1");
    require(detail::is_psd<3>(c.mpc.P_H), "mpc.p_h must be symmetric positive semidefinite");
    require(detail::is_psd<3>(c.mpc.Q), "mpc.q must be symmetric positive semidefinite");
    {
        double min_eig = 0.0;
        const bool sym_psd = detail::is_psd<2>(c.mpc.R, &min_eig);
        require(sym_psd && min_eig > 0, "mpc.r must be symmetric positive definite");
    }
    require(c.mpc.noise_scale >= 0, "mpc.noise_scale must be >= 0");
    require(!c.output_dir.empty(), "output_dir must be non-empty");
    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
}

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::check_keys;
    RunConfig c;
    check_keys(j, "", {"problem", "discretization", "scp", "shooting", "mpc", "output_dir", "seed"});

    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        check_keys(p, "problem", {"X0", "XT", "mu_T", "mu_v", "mu_omega", "eta"});
        c.problem.X0 = detail::get_state(p, "problem", "X0", c.problem.X0);
        c.problem.XT = detail::get_state(p, "problem", "XT", c.problem.XT);
        c.problem.mu_T = detail::get_num(p, "problem", "mu_T", c.problem.mu_T);
        c.problem.mu_v = detail::get_num(p, "problem", "mu_v", c.problem.mu_v);
        c.problem.mu_omega = detail::get_num(p, "problem", "mu_omega", c.problem.mu_omega);
        c.problem.eta = detail::get_int(p, "problem", "eta", c.problem.eta);
    }
    if (j.contains("discretization")) {
        const auto& d = j.at("discretization");
        check_keys(d, "discretization", {"n_el", "quad_points"});
        c.discretization.n_el = detail::get_int(d, "discretization", "n_el", c.discretization.n_el);
        c.discretization.quad_points =
            detail::get_int(d, "discretization", "quad_points", c.discretization.quad_points);
    }
    if (j.contains("scp")) {
        const auto& s = j.at("scp");
        check_keys(s, "scp", {"rho_s", "rho_q", "rho_T", "epsilon", "max_iters", "fd_step", "vartheta"});
        c.scp.rho_s = detail::get_num(s, "scp", "rho_s", c.scp.rho_s);
        c.scp.rho_q = detail::get_num(s, "scp", "rho_q", c.scp.rho_q);
        c.scp.rho_T = detail::get_num(s, "scp", "rho_T", c.scp.rho_T);
        c.scp.epsilon = detail::get_num(s, "scp", "epsilon", c.scp.epsilon);
        c.scp.max_iters = detail::get_int(s, "scp", "max_iters", c.scp.max_iters);
        c.scp.fd_step = detail::get_num(s, "scp", "fd_step", c.scp.fd_step);
        c.scp.vartheta = detail::get_num(s, "scp", "vartheta", c.scp.vartheta);
    }
    if (j.contains("shooting")) {
        const auto& s = j.at("shooting");
        check_keys(s, "shooting", {"steps", "tol", "max_iters"});
        c.shooting.steps = detail::get_int(s, "shooting", "steps", c.shooting.steps);
        c.shooting.tol = detail::get_num(s, "shooting", "tol", c.shooting.tol);
        c.shooting.max_iters = detail::get_int(s, "shooting", "max_iters", c.shooting.max_iters);
    }
    if (j.contains("mpc")) {
        const auto& m = j.at("mpc");
        check_keys(m, "mpc", {"dt", "horizon", "p_h", "q", "r", "noise_scale"});
        c.mpc.dt = detail::get_num(m, "mpc", "dt", c.mpc.dt);
        c.mpc.horizon = detail::get_int(m, "mpc", "horizon", c.mpc.horizon);
        c.mpc.P_H = detail::get_weight<3>(m, "mpc", "p_h", c.mpc.P_H);
        c.mpc.Q = detail::get_weight<3>(m, "mpc", "q", c.mpc.Q);
        c.mpc.R = detail::get_weight<2>(m, "mpc", "r", c.mpc.R);
        c.mpc.noise_scale = detail::get_num(m, "mpc", "noise_scale", c.mpc.noise_scale);
    }
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string())
            throw ConfigError("output_dir must be a string");
        c.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0)
            throw ConfigError("seed must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.mpc.seed = c.seed;  // one seed per run
    validate_config(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object())
        throw ConfigError("config root must be a JSON object");
    return parse_config(j);
}

// The materialized configuration that actually ran, for provenance.
inline nlohmann::json effective_config_json(const RunConfig& c) {
    auto mat3 = [](const Eigen::Matrix3d& m) {
        return nlohmann::json{{m(0, 0), m(0, 1), m(0, 2)},
                              {m(1, 0), m(1, 1), m(1, 2)},
                              {m(2, 0), m(2, 1), m(2, 2)}};
    };
    nlohmann::json j;
    j["problem"] = {{"X0", {c.problem.X0.x, c.problem.X0.y, c.problem.X0.theta}},
                    {"XT", {c.problem.XT.x, c.problem.XT.y, c.problem.XT.theta}},
                    {"mu_T", c.problem.mu_T},
                    {"mu_v", c.problem.mu_v},
                    {"mu_omega", c.problem.mu_omega},
                    {"eta", c.problem.eta}};
    j["discretization"] = {{"n_el", c.discretization.n_el},
                           {"quad_points", c.discretization.quad_points}};
    j["scp"] = {{"rho_s", c.scp.rho_s},       {"rho_q", c.scp.rho_q},
                {"rho_T", c.scp.rho_T},       {"epsilon", c.scp.epsilon},
                {"max_iters", c.scp.max_iters}, {"fd_step", c.scp.fd_step},
                {"vartheta", c.scp.vartheta}};
    j["shooting"] = {{"steps", c.shooting.steps},
                     {"tol", c.shooting.tol},
                     {"max_iters", c.shooting.max_iters}};
    j["mpc"] = {{"dt", c.mpc.dt},
                {"horizon", c.mpc.horizon},
                {"p_h", mat3(c.mpc.P_H)},
                {"q", mat3(c.mpc.Q)},
                {"r", nlohmann::json{{c.mpc.R(0, 0), c.mpc.R(0, 1)}, {c.mpc.R(1, 0), c.mpc.R(1, 1)}}},
                {"noise_scale", c.mpc.noise_scale}};
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j;
}

} // namespace toc
