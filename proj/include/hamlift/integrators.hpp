#pragma once

#include "hamlift/common.hpp"
#include "hamlift/systems.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace hamlift::integrators {

using RhsFn = std::function<Vec(const Vec&)>;
using JacFn = std::function<void(const Vec&, Mat&)>;

enum class JacobianMode { FiniteDifference, AnalyticIfAvailable };

struct IntegratorConfig {
    double dt = 0.01;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    JacobianMode jacobian_mode = JacobianMode::AnalyticIfAvailable;

    // dt may be negative for single reverse steps; integrate() requires dt > 0.
    void validate() const {
        if (dt == 0.0) throw ConfigError("IntegratorConfig: dt must be nonzero");
        if (newton_tol <= 0.0) throw ConfigError("IntegratorConfig: newton_tol must be positive");
        if (newton_max_iter < 1) throw ConfigError("IntegratorConfig: newton_max_iter must be >= 1");
    }
};

/// Right-hand side with an optional analytic Jacobian. linear marks constant
/// Jacobians so the Newton matrix can be factored once per step size.
struct OdeSystem {
    RhsFn f;
    JacFn jac;  // may be empty; finite differences are used then
    bool linear = false;
};

OdeSystem ode_from_system(const models::SystemSpec& system);

/// One implicit-midpoint step: returns y with y = x + dt f((x+y)/2), solved by
/// Newton iteration to ||residual||_inf <= newton_tol.
Vec implicit_midpoint_step(const OdeSystem& sys, const Vec& x, const IntegratorConfig& cfg);
Vec implicit_midpoint_step(const RhsFn& f, const Vec& x, const IntegratorConfig& cfg);

/// Classical fourth-order Runge-Kutta step (non-symplectic reference).
Vec rk4_step(const RhsFn& f, const Vec& x, double dt);

/// Sampled solution with exact time derivatives derivs[k] = f(states[k]).
/// states/derivs hold one column per sample.
struct Trajectory {
    Vec times;
    Mat states;
    Mat derivs;

    Eigen::Index samples() const { return times.size(); }
    bool has_derivs() const { return derivs.cols() == times.size() && derivs.cols() > 0; }
    void validate() const;
};

/// Per-dimension affine standardization x -> (x - mu) / sigma.
struct NormalizationRecord {
    Vec mu;
    Vec sigma;

    Vec normalize_state(const Vec& x) const { return (x - mu).cwiseQuotient(sigma); }
    Vec denormalize_state(const Vec& x) const { return x.cwiseProduct(sigma) + mu; }
    Vec normalize_deriv(const Vec& xdot) const { return xdot.cwiseQuotient(sigma); }
};

struct Dataset {
    models::SystemSpec system;
    std::vector<Trajectory> trajectories;
    std::optional<NormalizationRecord> normalization;
    double dt = 0.0;
    std::uint64_t seed = 0;

    Eigen::Index total_samples() const {
        Eigen::Index n = 0;
        for (const auto& t : trajectories) n += t.samples();
        return n;
    }
};

/// Integrates with implicit midpoint over [0, n_steps * cfg.dt], sampling every step.
Trajectory integrate_steps(const OdeSystem& sys, const Vec& x0, int n_steps,
                           const IntegratorConfig& cfg);

/// Integrates up to final time T with cfg.dt (n_steps = round(T / dt), at least 1).
Trajectory integrate(const OdeSystem& sys, const Vec& x0, double T, const IntegratorConfig& cfg);
Trajectory integrate(const RhsFn& f, const Vec& x0, double T, const IntegratorConfig& cfg);

/// One trajectory per initial condition; derivatives from the analytic rhs.
/// Normalization is computed and stored but not applied to the samples.
Dataset generate_dataset(const models::SystemSpec& system, const std::vector<Vec>& ics, double T,
                         const IntegratorConfig& cfg);

NormalizationRecord compute_normalization(const Dataset& dataset);

}  // namespace hamlift::integrators
