#pragma once

#include "hamlift/common.hpp"
#include "hamlift/integrators.hpp"

namespace hamlift::quadham {

/// Latent quadratic system that is Hamiltonian by construction. Only the free
/// degrees of freedom are stored: alpha (unconstrained), the upper triangle of
/// the symmetric matrix S, and the unique entries (sorted index triples) of the
/// symmetric 3-tensor T. The induced Hamiltonian is
///   H(z) = alpha^T z + 1/2 z^T S z + 1/3 sum_{ijk} T_ijk z_i z_j z_k
/// and the dynamics are zdot = J grad H(z) = A + B z + C (z (x) z).
struct QuadHamParams {
    int dim = 0;
    Vec alpha;
    Vec s_upper;
    Vec t_unique;

    QuadHamParams() = default;
    explicit QuadHamParams(int dim);

    static int s_size(int dim) { return dim * (dim + 1) / 2; }
    static int t_size(int dim) { return dim * (dim + 1) * (dim + 2) / 6; }
    int n_params() const { return dim + s_size(dim) + t_size(dim); }

    double& s(int i, int j);
    double s(int i, int j) const;
    double& t(int i, int j, int k);
    double t(int i, int j, int k) const;
};

/// Linear index of the (i, j) entry of symmetric storage, any index order.
int s_index(int dim, int i, int j);
/// Linear index of the (i, j, k) entry of symmetric 3-tensor storage.
int t_index(int dim, int i, int j, int k);

// Raw-storage kernels shared with the differentiation tape. z and out have
// length dim; gradient pointers may alias caller accumulation buffers.
void rhs_storage(int dim, const double* alpha, const double* s_upper, const double* t_unique,
                 const double* z, double* out);
void rhs_storage_backward(int dim, const double* s_upper, const double* t_unique, const double* z,
                          const double* g_out, double* g_z, double* g_alpha, double* g_s_upper,
                          double* g_t_unique);
double hamiltonian_storage(int dim, const double* alpha, const double* s_upper,
                           const double* t_unique, const double* z);

Vec quad_rhs(const QuadHamParams& p, const Vec& z);
double latent_hamiltonian(const QuadHamParams& p, const Vec& z);
void rhs_jacobian(const QuadHamParams& p, const Vec& z, Mat& jac);
integrators::OdeSystem ode_from_quadham(const QuadHamParams& p);

/// Dense operators of zdot = A + B z + C (z (x) z). C uses the frontal-slice
/// unfolding paired with (z (x) z)[i*dim + j] = z_i z_j.
struct Operators {
    Vec a;
    Mat b;
    Mat c;
};

Operators build_operators(const QuadHamParams& p);

struct HamiltonianCheck {
    bool ok = false;
    double residual_b = 0.0;  // || J^T B - (J^T B)^T ||_F
    double residual_c = 0.0;  // symmetrization defect of J^T C as a 3-tensor
};

/// Checks whether an arbitrary (A, B, C) triple defines a quadratic
/// Hamiltonian system: J^T B symmetric and J^T C expressible through a
/// symmetric tensor. A is unconstrained.
HamiltonianCheck fit_check_is_hamiltonian(const Vec& a, const Mat& b, const Mat& c, double tol);

/// fit_check applied to the system's own operators; residuals are roundoff by
/// construction.
HamiltonianCheck structure_check(const QuadHamParams& p, double tol = 1e-14);

}  // namespace hamlift::quadham
