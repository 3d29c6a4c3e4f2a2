#include "hamlift/quadham.hpp"

#include <algorithm>
#include <unordered_map>

namespace hamlift::quadham {

namespace {

struct IndexTables {
    std::vector<int> s;  // (i, j) -> storage index, size dim^2
    std::vector<int> t;  // (i, j, k) -> storage index, size dim^3
};

int s_index_impl(int dim, int i, int j) {
    if (i > j) std::swap(i, j);
    return i * dim - i * (i - 1) / 2 + (j - i);
}

int t_index_impl(int dim, int i, int j, int k) {
    int a = i, b = j, c = k;
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    int idx = 0;
    for (int m = 0; m < a; ++m) idx += (dim - m) * (dim - m + 1) / 2;
    for (int m = a; m < b; ++m) idx += dim - m;
    return idx + (c - b);
}

const IndexTables& tables(int dim) {
    thread_local std::unordered_map<int, IndexTables> cache;
    auto it = cache.find(dim);
    if (it != cache.end()) return it->second;
    IndexTables tab;
    tab.s.resize(dim * dim);
    tab.t.resize(dim * dim * dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            tab.s[i * dim + j] = s_index_impl(dim, i, j);
            for (int k = 0; k < dim; ++k)
                tab.t[(i * dim + j) * dim + k] = t_index_impl(dim, i, j, k);
        }
    return cache.emplace(dim, std::move(tab)).first->second;
}

}  // namespace

QuadHamParams::QuadHamParams(int dim_) : dim(dim_) {
    check_even(dim, "QuadHamParams");
    alpha = Vec::Zero(dim);
    s_upper = Vec::Zero(s_size(dim));
    t_unique = Vec::Zero(t_size(dim));
}

int s_index(int dim, int i, int j) { return s_index_impl(dim, i, j); }
int t_index(int dim, int i, int j, int k) { return t_index_impl(dim, i, j, k); }

double& QuadHamParams::s(int i, int j) { return s_upper[s_index_impl(dim, i, j)]; }
double QuadHamParams::s(int i, int j) const { return s_upper[s_index_impl(dim, i, j)]; }
double& QuadHamParams::t(int i, int j, int k) { return t_unique[t_index_impl(dim, i, j, k)]; }
double QuadHamParams::t(int i, int j, int k) const { return t_unique[t_index_impl(dim, i, j, k)]; }

void rhs_storage(int dim, const double* alpha, const double* s_upper, const double* t_unique,
                 const double* z, double* out) {
    const auto& tab = tables(dim);
    const int n = dim / 2;
    // u = grad H = alpha + S z + T(z, z)
    for (int m = 0; m < dim; ++m) {
        double u = alpha[m];
        for (int j = 0; j < dim; ++j) u += s_upper[tab.s[m * dim + j]] * z[j];
        for (int i = 0; i < dim; ++i) {
            const int* row = &tab.t[(m * dim + i) * dim];
            double acc = 0.0;
            for (int j = 0; j < dim; ++j) acc += t_unique[row[j]] * z[j];
            u += acc * z[i];
        }
        // out = J u, filled as the row of J hits u
        if (m < n)
            out[m + n] = -u;
        else
            out[m - n] = u;
    }
}

void rhs_storage_backward(int dim, const double* s_upper, const double* t_unique, const double* z,
                          const double* g_out, double* g_z, double* g_alpha, double* g_s_upper,
                          double* g_t_unique) {
    const auto& tab = tables(dim);
    const int n = dim / 2;
    // v = J^T g_out
    std::vector<double> v(dim);
    for (int m = 0; m < n; ++m) {
        v[m] = -g_out[m + n];
        v[m + n] = g_out[m];
    }
    for (int m = 0; m < dim; ++m) {
        const double vm = v[m];
        g_alpha[m] += vm;
        for (int j = 0; j < dim; ++j) {
            g_s_upper[tab.s[m * dim + j]] += vm * z[j];
            g_z[j] += s_upper[tab.s[m * dim + j]] * vm;
        }
        for (int i = 0; i < dim; ++i) {
            const int* row = &tab.t[(m * dim + i) * dim];
            const double vz = vm * z[i];
            for (int j = 0; j < dim; ++j) {
                g_t_unique[row[j]] += vz * z[j];
                g_z[j] += 2.0 * t_unique[row[j]] * vz;
            }
        }
    }
}

double hamiltonian_storage(int dim, const double* alpha, const double* s_upper,
                           const double* t_unique, const double* z) {
    double h = 0.0;
    for (int i = 0; i < dim; ++i) h += alpha[i] * z[i];
    for (int i = 0; i < dim; ++i) {
        h += 0.5 * s_upper[s_index_impl(dim, i, i)] * z[i] * z[i];
        for (int j = i + 1; j < dim; ++j) h += s_upper[s_index_impl(dim, i, j)] * z[i] * z[j];
    }
    // unique triples with orbit multiplicity / 3: exact weights 1/3, 1, 2
    int idx = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
            for (int k = j; k < dim; ++k, ++idx) {
                const double w = (i == k) ? (1.0 / 3.0) : ((i == j || j == k) ? 1.0 : 2.0);
                h += w * t_unique[idx] * z[i] * z[j] * z[k];
            }
    return h;
}

Vec quad_rhs(const QuadHamParams& p, const Vec& z) {
    if (z.size() != p.dim) throw ConfigError("quad_rhs: dimension mismatch");
    Vec out(p.dim);
    rhs_storage(p.dim, p.alpha.data(), p.s_upper.data(), p.t_unique.data(), z.data(), out.data());
    return out;
}

double latent_hamiltonian(const QuadHamParams& p, const Vec& z) {
    if (z.size() != p.dim) throw ConfigError("latent_hamiltonian: dimension mismatch");
    return hamiltonian_storage(p.dim, p.alpha.data(), p.s_upper.data(), p.t_unique.data(), z.data());
}

void rhs_jacobian(const QuadHamParams& p, const Vec& z, Mat& jac) {
    if (z.size() != p.dim) throw ConfigError("rhs_jacobian: dimension mismatch");
    const int dim = p.dim;
    Mat m(dim, dim);  // m = S + 2 T(z, .)
    for (int r = 0; r < dim; ++r)
        for (int k = 0; k < dim; ++k) {
            double acc = p.s(r, k);
            for (int i = 0; i < dim; ++i) acc += 2.0 * p.t(r, i, k) * z[i];
            m(r, k) = acc;
        }
    jac = sympl_apply_mat(m);
}

integrators::OdeSystem ode_from_quadham(const QuadHamParams& p) {
    integrators::OdeSystem sys;
    sys.f = [p](const Vec& z) { return quad_rhs(p, z); };
    sys.jac = [p](const Vec& z, Mat& j) { rhs_jacobian(p, z, j); };
    sys.linear = p.t_unique.isZero(0.0);
    return sys;
}

Operators build_operators(const QuadHamParams& p) {
    const int dim = p.dim;
    Mat s_full(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s_full(i, j) = p.s(i, j);
    Mat t_unf(dim, dim * dim);
    for (int m = 0; m < dim; ++m)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) t_unf(m, i * dim + j) = p.t(m, i, j);
    Operators ops;
    ops.a = sympl_apply(p.alpha);
    ops.b = sympl_apply_mat(s_full);
    ops.c = sympl_apply_mat(t_unf);
    return ops;
}

HamiltonianCheck fit_check_is_hamiltonian(const Vec& a, const Mat& b, const Mat& c, double tol) {
    const int dim = static_cast<int>(b.rows());
    check_even(dim, "fit_check_is_hamiltonian");
    if (a.size() != dim || b.cols() != dim || c.rows() != dim || c.cols() != dim * dim)
        throw ConfigError("fit_check_is_hamiltonian: inconsistent operator shapes");
    HamiltonianCheck res;
    const Mat jtb = -sympl_apply_mat(b);  // J^T B
    res.residual_b = (jtb - jtb.transpose()).norm();

    // The quadratic term only sees the (i, j)-symmetric part of J^T C; the
    // system is Hamiltonian iff that part is symmetric in all three indices.
    const Mat jtc = -sympl_apply_mat(c);
    std::vector<double> g(dim * dim * dim);
    auto at = [&](int m, int i, int j) -> double& { return g[(m * dim + i) * dim + j]; };
    for (int m = 0; m < dim; ++m)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                at(m, i, j) = 0.5 * (jtc(m, i * dim + j) + jtc(m, j * dim + i));
    double defect2 = 0.0;
    for (int m = 0; m < dim; ++m)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                const double sym = (at(m, i, j) + at(m, j, i) + at(i, m, j) + at(i, j, m) +
                                    at(j, m, i) + at(j, i, m)) /
                                   6.0;
                const double d = at(m, i, j) - sym;
                defect2 += d * d;
            }
    res.residual_c = std::sqrt(defect2);
    res.ok = res.residual_b <= tol && res.residual_c <= tol;
    return res;
}

HamiltonianCheck structure_check(const QuadHamParams& p, double tol) {
    const Operators ops = build_operators(p);
    return fit_check_is_hamiltonian(ops.a, ops.b, ops.c, tol);
}

}  // namespace hamlift::quadham
