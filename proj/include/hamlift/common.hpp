#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hamlift {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised for invalid configuration or malformed user input (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for numeric failures: Newton non-convergence, non-finite losses (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for file I/O and format errors (CLI exit code 4).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Canonical symplectic structure J = [[0, I], [-I, 0]] on even dimensions.
// x = (q, p): first half positions, second half momenta.
// ---------------------------------------------------------------------------

inline void check_even(Eigen::Index dim, const char* where) {
    if (dim < 2 || dim % 2 != 0)
        throw ConfigError(std::string(where) + ": dimension must be even and >= 2, got " +
                          std::to_string(dim));
}

/// y = J x, i.e. y = (p, -q).
inline Vec sympl_apply(const Vec& x) {
    const Eigen::Index n = x.size() / 2;
    Vec y(x.size());
    y.head(n) = x.tail(n);
    y.tail(n) = -x.head(n);
    return y;
}

/// y = J^T x = -J x.
inline Vec sympl_apply_t(const Vec& x) {
    const Eigen::Index n = x.size() / 2;
    Vec y(x.size());
    y.head(n) = -x.tail(n);
    y.tail(n) = x.head(n);
    return y;
}

/// Dense J (mostly for tests; hot paths use sympl_apply).
inline Mat sympl_matrix(Eigen::Index dim) {
    check_even(dim, "sympl_matrix");
    const Eigen::Index n = dim / 2;
    Mat j = Mat::Zero(dim, dim);
    j.topRightCorner(n, n).setIdentity();
    j.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return j;
}

/// M = J A (row-permuted sign flip, no matmul).
inline Mat sympl_apply_mat(const Mat& a) {
    const Eigen::Index n = a.rows() / 2;
    Mat m(a.rows(), a.cols());
    m.topRows(n) = a.bottomRows(n);
    m.bottomRows(n) = -a.topRows(n);
    return m;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 has a standard-mandated sequence; the
// distributions below are hand-rolled so streams are stable across platforms
// and standard-library versions.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed)), inc_(splitmix(seed ^ 0x9e3779b97f4a7c15ull) | 1ull) {}

    std::uint64_t next_u64() {
        // xorshift128+ style step on a splitmix-seeded pair
        std::uint64_t x = state_;
        std::uint64_t y = inc_;
        state_ = y;
        x ^= x << 23;
        inc_ = x ^ y ^ (x >> 17) ^ (y >> 26);
        return inc_ + y;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace hamlift
