#pragma once

#include "hamlift/common.hpp"

#include <utility>
#include <vector>

namespace hamlift::nn {

/// Flat storage for all trainable parameters of a model. Gradients accumulate
/// into the parallel grad buffer across samples of a batch; the optimizer owns
/// zeroing and consuming them.
class ParamStore {
public:
    int allocate(int n) {
        const int off = static_cast<int>(values.size());
        values.conservativeResize(off + n);
        values.tail(n).setZero();
        grads.conservativeResize(off + n);
        grads.tail(n).setZero();
        return off;
    }

    int size() const { return static_cast<int>(values.size()); }
    void zero_grads() { grads.setZero(); }

    Vec values;
    Vec grads;
};

enum class Op : std::uint8_t {
    LeafTape,      // input data; value written at emission
    LeafParamVec,  // value lives in the ParamStore
    LeafParamMat,
    MatVec,   // y = W x          (a = matrix node, b = vector node)
    MatTVec,  // y = W^T x
    Add,
    Sub,
    Axpy,   // y = a + c * b
    Scale,  // y = c * a
    Shift,  // y = a + c
    Hadamard,
    Selu,
    SeluPrime,  // y = selu'(a); its backward uses selu''
    SymplJ,     // y = J a
    Dot,        // scalar
    SumSq,      // scalar, ||a||^2
    SumAbs,     // scalar, sum |a_i|
    Conv1d,     // a = kernel node, b = signal node, aux = conv descriptor
    ConvT1d,
    BiasChan,  // y = a + broadcast(b) per channel (b = bias node)
    QuadRhs,   // a = z node, aux = quad descriptor
};

struct Node {
    Op op;
    int a = -1;
    int b = -1;
    int off = 0;  // value offset: tape arena, or ParamStore for param leaves
    int len = 0;
    int aux = 0;  // matrix rows / descriptor id
    double c = 0.0;
};

/// Channel-major 1D convolution geometry. For Conv1d: l_out = (l_in + 2p - k)/s + 1.
/// For ConvT1d: l_out = (l_in - 1) s - 2p + k + out_pad. Kernel layouts:
/// Conv1d (out_ch, in_ch, k), ConvT1d (in_ch, out_ch, k), flattened row-major.
struct ConvDesc {
    int in_ch = 0;
    int out_ch = 0;
    int k = 0;
    int s = 1;
    int p = 0;
    int out_pad = 0;
    int l_in = 0;
    int l_out = 0;
};

/// Latent quadratic-Hamiltonian dynamics evaluated as a tape op; parameter
/// storage offsets point into the ParamStore.
struct QuadDesc {
    int dim = 0;
    int alpha_off = 0;
    int s_off = 0;
    int t_off = 0;
};

/// Define-by-run computation record. Values are computed eagerly at emission;
/// backward() runs one reverse sweep and accumulates parameter gradients into
/// the ParamStore. The arena keeps its capacity across reset() so per-sample
/// graphs of identical shape allocate nothing after warm-up.
class Tape {
public:
    explicit Tape(ParamStore* params) : params_(params) {}

    void reset() {
        nodes_.clear();
        conv_descs_.clear();
        quad_descs_.clear();
        head_ = 0;
    }

    int size() const { return static_cast<int>(nodes_.size()); }

    // -- leaves ------------------------------------------------------------
    int leaf(const Eigen::Ref<const Vec>& v);
    int leaf_zero(int len);
    void set_leaf(int node, const Eigen::Ref<const Vec>& v);
    int param_vec(int off, int len);
    int param_mat(int off, int rows, int cols);

    // -- operations ---------------------------------------------------------
    int matvec(int w, int x);
    int mattvec(int w, int x);
    int add(int a, int b);
    int sub(int a, int b);
    int axpy(int a, int b, double c);
    int scale(int a, double c);
    int shift(int a, double c);
    int hadamard(int a, int b);
    int selu(int a);
    int selu_prime(int a);
    int sympl_j(int a);
    int dot(int a, int b);
    int sum_sq(int a);
    int sum_abs(int a);
    int add_conv_desc(const ConvDesc& d);
    int conv1d(int kernel, int x, int desc);
    int convt1d(int kernel, int x, int desc);
    int bias_chan(int x, int bias);
    int add_quad_desc(const QuadDesc& d);
    int quad_rhs(int z, int desc);

    // -- access ------------------------------------------------------------
    Eigen::Map<const Vec> value(int node) const {
        const Node& n = nodes_[node];
        return Eigen::Map<const Vec>(value_ptr(n), n.len);
    }
    double value_scalar(int node) const {
        if (nodes_[node].len != 1) throw ConfigError("Tape: node is not scalar");
        return *value_ptr(nodes_[node]);
    }
    Eigen::Map<const Vec> grad(int node) const {
        const Node& n = nodes_[node];
        return Eigen::Map<const Vec>(grad_ptr(n), n.len);
    }

    /// Reverse sweep from the given scalar seeds (node id, dL/dnode).
    void backward(const std::vector<std::pair<int, double>>& seeds);

private:
    int push(Op op, int a, int b, int len, int aux = 0, double c = 0.0);
    double* arena_val(int off) { return arena_values_.data() + off; }
    const double* value_ptr(const Node& n) const;
    double* value_ptr(const Node& n);
    double* grad_ptr(const Node& n) const;
    void compute(Node& n);
    void backprop(const Node& n);

    ParamStore* params_;
    std::vector<Node> nodes_;
    std::vector<double> arena_values_;
    std::vector<double> arena_grads_;
    int head_ = 0;
    std::vector<ConvDesc> conv_descs_;
    std::vector<QuadDesc> quad_descs_;
};

// SELU with the standard self-normalizing constants.
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

inline double selu_fn(double x) {
    return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
}
inline double selu_grad_fn(double x) {
    return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}
inline double selu_grad2_fn(double x) {
    return x > 0.0 ? 0.0 : kSeluLambda * kSeluAlpha * std::exp(x);
}

}  // namespace hamlift::nn
