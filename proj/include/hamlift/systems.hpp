#pragma once

#include "hamlift/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hamlift::models {

enum class SystemKind { Pendulum, LotkaVolterra, AnharmonicOscillator, LinearWave, Nls };

std::string kind_name(SystemKind kind);
SystemKind kind_from_name(const std::string& name);

/// Ground-truth canonical Hamiltonian benchmark system. For the PDE systems,
/// grid_n is the number of spatial points per field, so the state dimension is
/// 2 * grid_n; boundary conditions are periodic and dx = (domain length) / grid_n.
struct SystemSpec {
    SystemKind kind = SystemKind::Pendulum;
    int grid_n = 0;           // spatial points (PDE only)
    double wave_c = 1.0;      // wave transport velocity
    double nls_alpha = 0.5;   // NLS dispersion coefficient
    double nls_beta = 1.0;    // NLS nonlinearity coefficient
    double domain_lo = 0.0;
    double domain_hi = 0.0;

    int dimension() const;
    double dx() const;
    bool is_pde() const;
    bool linear_rhs() const { return kind == SystemKind::LinearWave; }

    static SystemSpec pendulum();
    static SystemSpec lotka_volterra();
    static SystemSpec oscillator();
    static SystemSpec wave(int grid_n, double c = 1.0);
    static SystemSpec nls(int grid_n, double alpha = 0.5, double beta = 1.0);
};

/// Time derivative of the state, xdot = J grad H(x).
Vec rhs(const SystemSpec& system, const Vec& x);

/// Conserved energy. For the PDE systems this is the discrete Hamiltonian that
/// generates the semi-discrete equations through xdot = J grad H; the physical
/// energy of the continuum density is dx times this value.
double hamiltonian(const SystemSpec& system, const Vec& x);

/// Jacobian of rhs at x (analytic); used by the implicit integrator.
void rhs_jacobian(const SystemSpec& system, const Vec& x, Mat& jac);

/// K = [[0, I], [c Dxx, 0]] with the periodic three-point Laplacian, scaled 1/dx^2.
Mat wave_operator(int grid_n, double dx, double c);

/// Axis-aligned sampling box, one (lo, hi) pair per state dimension.
struct Box {
    Vec lo;
    Vec hi;

    static Box square(int dim, double lo, double hi) {
        Box b;
        b.lo = Vec::Constant(dim, lo);
        b.hi = Vec::Constant(dim, hi);
        return b;
    }
};

struct EnergyWindow {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// Uniform rejection sampling of the box, keeping states with H inside the
/// window. Throws NumericError once max_rejects draws in a row were rejected.
std::vector<Vec> sample_initial_conditions(const SystemSpec& system, int count, const Box& bounds,
                                           const EnergyWindow& window, std::uint64_t rng_seed,
                                           int max_rejects = 100000);

/// sech profile initial condition for the PDE systems: q = sech(x), p = 0.
Vec sech_initial_condition(const SystemSpec& system);

}  // namespace hamlift::models
