#include "hamlift/integrators.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace hamlift::integrators {

OdeSystem ode_from_system(const models::SystemSpec& system) {
    OdeSystem sys;
    sys.f = [system](const Vec& x) { return models::rhs(system, x); };
    sys.jac = [system](const Vec& x, Mat& j) { models::rhs_jacobian(system, x, j); };
    sys.linear = system.linear_rhs();
    return sys;
}

namespace {

void fd_jacobian(const RhsFn& f, const Vec& m, const Vec& fm, Mat& jac) {
    const Eigen::Index dim = m.size();
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    jac.resize(dim, dim);
    Vec mp = m;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double h = sqrt_eps * (1.0 + std::abs(m[i]));
        mp[i] = m[i] + h;
        jac.col(i) = (f(mp) - fm) / h;
        mp[i] = m[i];
    }
}

// Newton solver for the midpoint residual; caches the LU factorization for
// linear systems (constant Newton matrix for a fixed dt).
class MidpointStepper {
public:
    MidpointStepper(const OdeSystem& sys, const IntegratorConfig& cfg) : sys_(sys), cfg_(cfg) {
        cfg_.validate();
    }

    Vec step(const Vec& x) {
        const double dt = cfg_.dt;
        Vec y = x + dt * sys_.f(x);
        bool polished = false;
        for (int iter = 0;; ++iter) {
            const Vec m = 0.5 * (x + y);
            const Vec fm = sys_.f(m);
            const Vec r = y - x - dt * fm;
            const double rn = r.lpNorm<Eigen::Infinity>();
            if (!std::isfinite(rn))
                throw NumericError("implicit midpoint: residual is not finite (dt too large or state left the stable region)");
            if (rn <= cfg_.newton_tol) {
                if (polished) return y;
                polished = true;  // one extra correction pushes the residual to roundoff
            }
            if (iter >= cfg_.newton_max_iter) {
                if (rn <= cfg_.newton_tol) return y;
                throw NumericError("implicit midpoint: Newton did not converge within " +
                                   std::to_string(cfg_.newton_max_iter) +
                                   " iterations (residual " + std::to_string(rn) + ")");
            }
            y += solve(m, fm, r);
        }
    }

private:
    // Solves (I - dt/2 f'(m)) dy = -r.
    Vec solve(const Vec& m, const Vec& fm, const Vec& r) {
        if (sys_.linear && lu_) return lu_->solve(-r);
        const Eigen::Index dim = m.size();
        Mat jf;
        if (sys_.jac && cfg_.jacobian_mode == JacobianMode::AnalyticIfAvailable)
            sys_.jac(m, jf);
        else
            fd_jacobian(sys_.f, m, fm, jf);
        Mat a = Mat::Identity(dim, dim) - (0.5 * cfg_.dt) * jf;
        if (sys_.linear) {
            lu_ = std::make_unique<Eigen::PartialPivLU<Mat>>(a);
            return lu_->solve(-r);
        }
        return a.partialPivLu().solve(-r);
    }

    OdeSystem sys_;
    IntegratorConfig cfg_;
    std::unique_ptr<Eigen::PartialPivLU<Mat>> lu_;
};

}  // namespace

Vec implicit_midpoint_step(const OdeSystem& sys, const Vec& x, const IntegratorConfig& cfg) {
    MidpointStepper stepper(sys, cfg);
    return stepper.step(x);
}

Vec implicit_midpoint_step(const RhsFn& f, const Vec& x, const IntegratorConfig& cfg) {
    OdeSystem sys;
    sys.f = f;
    return implicit_midpoint_step(sys, x, cfg);
}

Vec rk4_step(const RhsFn& f, const Vec& x, double dt) {
    if (dt <= 0.0) throw ConfigError("rk4_step: dt must be positive");
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * dt * k1);
    const Vec k3 = f(x + 0.5 * dt * k2);
    const Vec k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void Trajectory::validate() const {
    if (states.cols() != times.size())
        throw ConfigError("Trajectory: states/times length mismatch");
    if (derivs.cols() > 0 && (derivs.cols() != states.cols() || derivs.rows() != states.rows()))
        throw ConfigError("Trajectory: derivs shape mismatch");
    for (Eigen::Index k = 1; k < times.size(); ++k)
        if (times[k] <= times[k - 1]) throw ConfigError("Trajectory: times must be strictly increasing");
}

Trajectory integrate_steps(const OdeSystem& sys, const Vec& x0, int n_steps,
                           const IntegratorConfig& cfg) {
    if (n_steps < 1) throw ConfigError("integrate_steps: need at least one step");
    MidpointStepper stepper(sys, cfg);
    Trajectory traj;
    traj.times.resize(n_steps + 1);
    traj.states.resize(x0.size(), n_steps + 1);
    traj.derivs.resize(x0.size(), n_steps + 1);
    Vec x = x0;
    for (int k = 0; k <= n_steps; ++k) {
        traj.times[k] = k * cfg.dt;
        traj.states.col(k) = x;
        traj.derivs.col(k) = sys.f(x);
        if (k < n_steps) {
            try {
                x = stepper.step(x);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at t = " + std::to_string(k * cfg.dt));
            }
        }
    }
    return traj;
}

Trajectory integrate(const OdeSystem& sys, const Vec& x0, double T, const IntegratorConfig& cfg) {
    if (T <= 0.0) throw ConfigError("integrate: final time must be positive");
    if (cfg.dt <= 0.0) throw ConfigError("integrate: dt must be positive");
    cfg.validate();
    const int n_steps = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
    return integrate_steps(sys, x0, n_steps, cfg);
}

Trajectory integrate(const RhsFn& f, const Vec& x0, double T, const IntegratorConfig& cfg) {
    OdeSystem sys;
    sys.f = f;
    return integrate(sys, x0, T, cfg);
}

Dataset generate_dataset(const models::SystemSpec& system, const std::vector<Vec>& ics, double T,
                         const IntegratorConfig& cfg) {
    if (ics.empty()) throw ConfigError("generate_dataset: need at least one initial condition");
    const OdeSystem sys = ode_from_system(system);
    Dataset ds;
    ds.system = system;
    ds.dt = cfg.dt;
    ds.trajectories.reserve(ics.size());
    for (const Vec& x0 : ics) ds.trajectories.push_back(integrate(sys, x0, T, cfg));
    ds.normalization = compute_normalization(ds);
    return ds;
}

NormalizationRecord compute_normalization(const Dataset& dataset) {
    if (dataset.trajectories.empty()) throw ConfigError("compute_normalization: empty dataset");
    const Eigen::Index dim = dataset.trajectories.front().states.rows();
    Vec sum = Vec::Zero(dim);
    Vec sum2 = Vec::Zero(dim);
    Eigen::Index n = 0;
    for (const auto& traj : dataset.trajectories) {
        sum += traj.states.rowwise().sum();
        sum2 += traj.states.array().square().matrix().rowwise().sum();
        n += traj.samples();
    }
    NormalizationRecord rec;
    rec.mu = sum / static_cast<double>(n);
    rec.sigma = (sum2 / static_cast<double>(n) - rec.mu.cwiseProduct(rec.mu))
                    .cwiseMax(0.0)
                    .cwiseSqrt()
                    .cwiseMax(1e-8);  // guard against constant dimensions
    return rec;
}

}  // namespace hamlift::integrators
