#include "hamlift/systems.hpp"

#include <cmath>
#include <limits>

namespace hamlift::models {

std::string kind_name(SystemKind kind) {
    switch (kind) {
        case SystemKind::Pendulum: return "pendulum";
        case SystemKind::LotkaVolterra: return "lotka_volterra";
        case SystemKind::AnharmonicOscillator: return "oscillator";
        case SystemKind::LinearWave: return "wave";
        case SystemKind::Nls: return "nls";
    }
    throw ConfigError("unknown system kind");
}

SystemKind kind_from_name(const std::string& name) {
    if (name == "pendulum") return SystemKind::Pendulum;
    if (name == "lotka_volterra") return SystemKind::LotkaVolterra;
    if (name == "oscillator") return SystemKind::AnharmonicOscillator;
    if (name == "wave") return SystemKind::LinearWave;
    if (name == "nls") return SystemKind::Nls;
    throw ConfigError("unknown system kind: " + name);
}

int SystemSpec::dimension() const {
    return is_pde() ? 2 * grid_n : 2;
}

double SystemSpec::dx() const {
    if (!is_pde()) throw ConfigError("dx: not a PDE system");
    return (domain_hi - domain_lo) / grid_n;
}

bool SystemSpec::is_pde() const {
    return kind == SystemKind::LinearWave || kind == SystemKind::Nls;
}

SystemSpec SystemSpec::pendulum() { return SystemSpec{SystemKind::Pendulum}; }
SystemSpec SystemSpec::lotka_volterra() { return SystemSpec{SystemKind::LotkaVolterra}; }
SystemSpec SystemSpec::oscillator() { return SystemSpec{SystemKind::AnharmonicOscillator}; }

SystemSpec SystemSpec::wave(int grid_n, double c) {
    if (grid_n < 3) throw ConfigError("wave: grid size must be >= 3");
    SystemSpec s;
    s.kind = SystemKind::LinearWave;
    s.grid_n = grid_n;
    s.wave_c = c;
    s.domain_lo = -5.0;
    s.domain_hi = 5.0;
    return s;
}

SystemSpec SystemSpec::nls(int grid_n, double alpha, double beta) {
    if (grid_n < 3) throw ConfigError("nls: grid size must be >= 3");
    SystemSpec s;
    s.kind = SystemKind::Nls;
    s.grid_n = grid_n;
    s.nls_alpha = alpha;
    s.nls_beta = beta;
    s.domain_lo = -10.0;
    s.domain_hi = 10.0;
    return s;
}

namespace {

void check_dim(const SystemSpec& system, const Vec& x, const char* where) {
    if (x.size() != system.dimension())
        throw ConfigError(std::string(where) + ": state has dimension " + std::to_string(x.size()) +
                          ", system expects " + std::to_string(system.dimension()));
}

// Periodic three-point Laplacian applied to one field, out += coeff * Dxx f.
void add_laplacian(const Eigen::Ref<const Vec>& f, double coeff, Eigen::Ref<Vec> out) {
    const Eigen::Index n = f.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index il = (i == 0) ? n - 1 : i - 1;
        const Eigen::Index ir = (i == n - 1) ? 0 : i + 1;
        out[i] += coeff * (f[il] - 2.0 * f[i] + f[ir]);
    }
}

}  // namespace

Vec rhs(const SystemSpec& system, const Vec& x) {
    check_dim(system, x, "rhs");
    switch (system.kind) {
        case SystemKind::Pendulum: {
            Vec f(2);
            f[0] = x[1];
            f[1] = -std::sin(x[0]);
            return f;
        }
        case SystemKind::LotkaVolterra: {
            Vec f(2);
            f[0] = 1.0 - std::exp(x[1]);
            f[1] = std::exp(x[0]) - 2.0;
            return f;
        }
        case SystemKind::AnharmonicOscillator: {
            Vec f(2);
            f[0] = x[1];
            f[1] = -(x[0] + x[0] * x[0] * x[0]);
            return f;
        }
        case SystemKind::LinearWave: {
            const int n = system.grid_n;
            const double inv_dx2 = 1.0 / (system.dx() * system.dx());
            Vec f = Vec::Zero(2 * n);
            f.head(n) = x.tail(n);
            add_laplacian(x.head(n), system.wave_c * inv_dx2, f.tail(n));
            return f;
        }
        case SystemKind::Nls: {
            const int n = system.grid_n;
            const double a = system.nls_alpha;
            const double b = system.nls_beta;
            const double inv_dx2 = 1.0 / (system.dx() * system.dx());
            const auto q = x.head(n);
            const auto p = x.tail(n);
            Vec f = Vec::Zero(2 * n);
            add_laplacian(p, -a * inv_dx2, f.head(n));
            add_laplacian(q, a * inv_dx2, f.tail(n));
            for (int i = 0; i < n; ++i) {
                const double m2 = q[i] * q[i] + p[i] * p[i];
                f[i] -= b * m2 * p[i];
                f[n + i] += b * m2 * q[i];
            }
            return f;
        }
    }
    throw ConfigError("rhs: unknown system kind");
}

double hamiltonian(const SystemSpec& system, const Vec& x) {
    check_dim(system, x, "hamiltonian");
    switch (system.kind) {
        case SystemKind::Pendulum:
            // Energy consistent with the implemented equations of motion;
            // same level sets as the textbook pendulum.
            return 0.5 * x[1] * x[1] + 1.0 - std::cos(x[0]);
        case SystemKind::LotkaVolterra:
            return x[1] - std::exp(x[1]) + 2.0 * x[0] - std::exp(x[0]);
        case SystemKind::AnharmonicOscillator: {
            const double q = x[0], p = x[1];
            return 0.5 * p * p + 0.5 * q * q + 0.25 * q * q * q * q;
        }
        case SystemKind::LinearWave: {
            const int n = system.grid_n;
            const double inv_dx2 = 1.0 / (system.dx() * system.dx());
            const auto q = x.head(n);
            const auto p = x.tail(n);
            double h = 0.5 * p.squaredNorm();
            for (int i = 0; i < n; ++i) {
                const int ir = (i == n - 1) ? 0 : i + 1;
                const double d = q[ir] - q[i];
                h += 0.5 * system.wave_c * inv_dx2 * d * d;
            }
            return h;
        }
        case SystemKind::Nls: {
            const int n = system.grid_n;
            const double a = system.nls_alpha;
            const double b = system.nls_beta;
            const double inv_dx2 = 1.0 / (system.dx() * system.dx());
            const auto q = x.head(n);
            const auto p = x.tail(n);
            double h = 0.0;
            for (int i = 0; i < n; ++i) {
                const int ir = (i == n - 1) ? 0 : i + 1;
                const double dq = q[ir] - q[i];
                const double dp = p[ir] - p[i];
                const double m2 = q[i] * q[i] + p[i] * p[i];
                h += 0.5 * a * inv_dx2 * (dq * dq + dp * dp) - 0.25 * b * m2 * m2;
            }
            return h;
        }
    }
    throw ConfigError("hamiltonian: unknown system kind");
}

void rhs_jacobian(const SystemSpec& system, const Vec& x, Mat& jac) {
    check_dim(system, x, "rhs_jacobian");
    const int dim = system.dimension();
    jac.setZero(dim, dim);
    switch (system.kind) {
        case SystemKind::Pendulum:
            jac(0, 1) = 1.0;
            jac(1, 0) = -std::cos(x[0]);
            return;
        case SystemKind::LotkaVolterra:
            jac(0, 1) = -std::exp(x[1]);
            jac(1, 0) = std::exp(x[0]);
            return;
        case SystemKind::AnharmonicOscillator:
            jac(0, 1) = 1.0;
            jac(1, 0) = -(1.0 + 3.0 * x[0] * x[0]);
            return;
        case SystemKind::LinearWave:
            jac = wave_operator(system.grid_n, system.dx(), system.wave_c);
            return;
        case SystemKind::Nls: {
            const int n = system.grid_n;
            const double a = system.nls_alpha;
            const double b = system.nls_beta;
            const double inv_dx2 = 1.0 / (system.dx() * system.dx());
            const auto q = x.head(n);
            const auto p = x.tail(n);
            for (int i = 0; i < n; ++i) {
                const int il = (i == 0) ? n - 1 : i - 1;
                const int ir = (i == n - 1) ? 0 : i + 1;
                // qdot_i = -a (Dxx p)_i - b (q_i^2 + p_i^2) p_i
                jac(i, n + il) += -a * inv_dx2;
                jac(i, n + i) += 2.0 * a * inv_dx2;
                jac(i, n + ir) += -a * inv_dx2;
                jac(i, i) += -2.0 * b * q[i] * p[i];
                jac(i, n + i) += -b * (q[i] * q[i] + 3.0 * p[i] * p[i]);
                // pdot_i = a (Dxx q)_i + b (q_i^2 + p_i^2) q_i
                jac(n + i, il) += a * inv_dx2;
                jac(n + i, i) += -2.0 * a * inv_dx2;
                jac(n + i, ir) += a * inv_dx2;
                jac(n + i, i) += b * (3.0 * q[i] * q[i] + p[i] * p[i]);
                jac(n + i, n + i) += 2.0 * b * q[i] * p[i];
            }
            return;
        }
    }
    throw ConfigError("rhs_jacobian: unknown system kind");
}

Mat wave_operator(int grid_n, double dx, double c) {
    if (grid_n < 3) throw ConfigError("wave_operator: grid size must be >= 3");
    if (dx <= 0.0) throw ConfigError("wave_operator: dx must be positive");
    const int n = grid_n;
    const double inv_dx2 = 1.0 / (dx * dx);
    Mat k = Mat::Zero(2 * n, 2 * n);
    k.topRightCorner(n, n).setIdentity();
    for (int i = 0; i < n; ++i) {
        const int il = (i == 0) ? n - 1 : i - 1;
        const int ir = (i == n - 1) ? 0 : i + 1;
        k(n + i, i) += -2.0 * c * inv_dx2;
        k(n + i, il) += c * inv_dx2;
        k(n + i, ir) += c * inv_dx2;
    }
    return k;
}

std::vector<Vec> sample_initial_conditions(const SystemSpec& system, int count, const Box& bounds,
                                           const EnergyWindow& window, std::uint64_t rng_seed,
                                           int max_rejects) {
    if (count <= 0) throw ConfigError("sample_initial_conditions: count must be positive");
    const int dim = system.dimension();
    if (bounds.lo.size() != dim || bounds.hi.size() != dim)
        throw ConfigError("sample_initial_conditions: bounds dimension mismatch");
    Rng rng(rng_seed);
    std::vector<Vec> out;
    out.reserve(count);
    int rejects = 0;
    Vec x(dim);
    while (static_cast<int>(out.size()) < count) {
        for (int i = 0; i < dim; ++i) x[i] = rng.uniform(bounds.lo[i], bounds.hi[i]);
        const double h = hamiltonian(system, x);
        if (h >= window.lo && h <= window.hi) {
            out.push_back(x);
            rejects = 0;
        } else if (++rejects > max_rejects) {
            throw NumericError("sample_initial_conditions: energy window [" +
                               std::to_string(window.lo) + ", " + std::to_string(window.hi) +
                               "] looks infeasible inside the bounds (" +
                               std::to_string(max_rejects) + " consecutive rejections)");
        }
    }
    return out;
}

Vec sech_initial_condition(const SystemSpec& system) {
    if (!system.is_pde()) throw ConfigError("sech_initial_condition: not a PDE system");
    const int n = system.grid_n;
    Vec x = Vec::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        const double xi = system.domain_lo + i * system.dx();
        x[i] = 1.0 / std::cosh(xi);
    }
    return x;
}

}  // namespace hamlift::models
