#include "hamlift/tape.hpp"

#include "hamlift/quadham.hpp"

#include <cmath>
#include <cstring>

namespace hamlift::nn {

namespace {

using CVecMap = Eigen::Map<const Vec>;
using VecMap = Eigen::Map<Vec>;
using CMatMap = Eigen::Map<const Mat>;
using MatMap = Eigen::Map<Mat>;

// y[co, j] += sum_{ci, t} K[co, ci, t] x[ci, j*s + t - p]
void conv1d_fwd(const ConvDesc& d, const double* kern, const double* x, double* y) {
    std::memset(y, 0, sizeof(double) * d.out_ch * d.l_out);
    for (int co = 0; co < d.out_ch; ++co)
        for (int ci = 0; ci < d.in_ch; ++ci) {
            const double* kr = kern + (co * d.in_ch + ci) * d.k;
            const double* xr = x + ci * d.l_in;
            double* yr = y + co * d.l_out;
            for (int j = 0; j < d.l_out; ++j) {
                const int base = j * d.s - d.p;
                double acc = 0.0;
                for (int t = 0; t < d.k; ++t) {
                    const int i = base + t;
                    if (i >= 0 && i < d.l_in) acc += kr[t] * xr[i];
                }
                yr[j] += acc;
            }
        }
}

void conv1d_bwd(const ConvDesc& d, const double* kern, const double* x, const double* gy,
                double* gk, double* gx) {
    for (int co = 0; co < d.out_ch; ++co)
        for (int ci = 0; ci < d.in_ch; ++ci) {
            const double* kr = kern + (co * d.in_ch + ci) * d.k;
            double* gkr = gk + (co * d.in_ch + ci) * d.k;
            const double* xr = x + ci * d.l_in;
            double* gxr = gx + ci * d.l_in;
            const double* gyr = gy + co * d.l_out;
            for (int j = 0; j < d.l_out; ++j) {
                const int base = j * d.s - d.p;
                const double g = gyr[j];
                for (int t = 0; t < d.k; ++t) {
                    const int i = base + t;
                    if (i >= 0 && i < d.l_in) {
                        gkr[t] += g * xr[i];
                        gxr[i] += g * kr[t];
                    }
                }
            }
        }
}

// y[co, m] += sum_{ci, j, t : m = j*s + t - p} K[ci, co, t] x[ci, j]
void convt1d_fwd(const ConvDesc& d, const double* kern, const double* x, double* y) {
    std::memset(y, 0, sizeof(double) * d.out_ch * d.l_out);
    for (int ci = 0; ci < d.in_ch; ++ci)
        for (int co = 0; co < d.out_ch; ++co) {
            const double* kr = kern + (ci * d.out_ch + co) * d.k;
            const double* xr = x + ci * d.l_in;
            double* yr = y + co * d.l_out;
            for (int j = 0; j < d.l_in; ++j) {
                const int base = j * d.s - d.p;
                const double xv = xr[j];
                for (int t = 0; t < d.k; ++t) {
                    const int m = base + t;
                    if (m >= 0 && m < d.l_out) yr[m] += kr[t] * xv;
                }
            }
        }
}

void convt1d_bwd(const ConvDesc& d, const double* kern, const double* x, const double* gy,
                 double* gk, double* gx) {
    for (int ci = 0; ci < d.in_ch; ++ci)
        for (int co = 0; co < d.out_ch; ++co) {
            const double* kr = kern + (ci * d.out_ch + co) * d.k;
            double* gkr = gk + (ci * d.out_ch + co) * d.k;
            const double* xr = x + ci * d.l_in;
            double* gxr = gx + ci * d.l_in;
            const double* gyr = gy + co * d.l_out;
            for (int j = 0; j < d.l_in; ++j) {
                const int base = j * d.s - d.p;
                double acc = 0.0;
                for (int t = 0; t < d.k; ++t) {
                    const int m = base + t;
                    if (m >= 0 && m < d.l_out) {
                        gkr[t] += gyr[m] * xr[j];
                        acc += gyr[m] * kr[t];
                    }
                }
                gxr[j] += acc;
            }
        }
}

}  // namespace

const double* Tape::value_ptr(const Node& n) const {
    if (n.op == Op::LeafParamVec || n.op == Op::LeafParamMat)
        return params_->values.data() + n.off;
    return arena_values_.data() + n.off;
}

double* Tape::value_ptr(const Node& n) {
    if (n.op == Op::LeafParamVec || n.op == Op::LeafParamMat)
        return params_->values.data() + n.off;
    return arena_values_.data() + n.off;
}

double* Tape::grad_ptr(const Node& n) const {
    if (n.op == Op::LeafParamVec || n.op == Op::LeafParamMat)
        return const_cast<double*>(params_->grads.data()) + n.off;
    return const_cast<double*>(arena_grads_.data()) + n.off;
}

int Tape::push(Op op, int a, int b, int len, int aux, double c) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.len = len;
    n.aux = aux;
    n.c = c;
    if (op == Op::LeafParamVec || op == Op::LeafParamMat) {
        n.off = aux;  // caller passes ParamStore offset through aux
        n.aux = 0;
    } else {
        n.off = head_;
        head_ += len;
        if (static_cast<int>(arena_values_.size()) < head_) {
            arena_values_.resize(std::max<std::size_t>(head_, arena_values_.size() * 2 + 64));
            arena_grads_.resize(arena_values_.size());
        }
    }
    nodes_.push_back(n);
    if (op != Op::LeafTape && op != Op::LeafParamVec && op != Op::LeafParamMat)
        compute(nodes_.back());
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(const Eigen::Ref<const Vec>& v) {
    const int id = push(Op::LeafTape, -1, -1, static_cast<int>(v.size()));
    VecMap(arena_val(nodes_[id].off), v.size()) = v;
    return id;
}

int Tape::leaf_zero(int len) {
    const int id = push(Op::LeafTape, -1, -1, len);
    VecMap(arena_val(nodes_[id].off), len).setZero();
    return id;
}

void Tape::set_leaf(int node, const Eigen::Ref<const Vec>& v) {
    Node& n = nodes_[node];
    if (n.op != Op::LeafTape || n.len != v.size()) throw ConfigError("Tape: bad set_leaf");
    VecMap(arena_val(n.off), n.len) = v;
}

int Tape::param_vec(int off, int len) { return push(Op::LeafParamVec, -1, -1, len, off); }

int Tape::param_mat(int off, int rows, int cols) {
    const int id = push(Op::LeafParamMat, -1, -1, rows * cols, off);
    nodes_[id].aux = rows;
    return id;
}

int Tape::matvec(int w, int x) {
    const Node& wn = nodes_[w];
    const int rows = wn.aux;
    const int cols = wn.len / rows;
    if (nodes_[x].len != cols) throw ConfigError("Tape: matvec shape mismatch");
    return push(Op::MatVec, w, x, rows);
}

int Tape::mattvec(int w, int x) {
    const Node& wn = nodes_[w];
    const int rows = wn.aux;
    const int cols = wn.len / rows;
    if (nodes_[x].len != rows) throw ConfigError("Tape: mattvec shape mismatch");
    return push(Op::MatTVec, w, x, cols);
}

int Tape::add(int a, int b) {
    if (nodes_[a].len != nodes_[b].len) throw ConfigError("Tape: add shape mismatch");
    return push(Op::Add, a, b, nodes_[a].len);
}

int Tape::sub(int a, int b) {
    if (nodes_[a].len != nodes_[b].len) throw ConfigError("Tape: sub shape mismatch");
    return push(Op::Sub, a, b, nodes_[a].len);
}

int Tape::axpy(int a, int b, double c) {
    if (nodes_[a].len != nodes_[b].len) throw ConfigError("Tape: axpy shape mismatch");
    return push(Op::Axpy, a, b, nodes_[a].len, 0, c);
}

int Tape::scale(int a, double c) { return push(Op::Scale, a, -1, nodes_[a].len, 0, c); }
int Tape::shift(int a, double c) { return push(Op::Shift, a, -1, nodes_[a].len, 0, c); }

int Tape::hadamard(int a, int b) {
    if (nodes_[a].len != nodes_[b].len) throw ConfigError("Tape: hadamard shape mismatch");
    return push(Op::Hadamard, a, b, nodes_[a].len);
}

int Tape::selu(int a) { return push(Op::Selu, a, -1, nodes_[a].len); }
int Tape::selu_prime(int a) { return push(Op::SeluPrime, a, -1, nodes_[a].len); }

int Tape::sympl_j(int a) {
    check_even(nodes_[a].len, "Tape::sympl_j");
    return push(Op::SymplJ, a, -1, nodes_[a].len);
}

int Tape::dot(int a, int b) {
    if (nodes_[a].len != nodes_[b].len) throw ConfigError("Tape: dot shape mismatch");
    return push(Op::Dot, a, b, 1);
}

int Tape::sum_sq(int a) { return push(Op::SumSq, a, -1, 1); }
int Tape::sum_abs(int a) { return push(Op::SumAbs, a, -1, 1); }

int Tape::add_conv_desc(const ConvDesc& d) {
    conv_descs_.push_back(d);
    return static_cast<int>(conv_descs_.size()) - 1;
}

int Tape::conv1d(int kernel, int x, int desc) {
    const ConvDesc& d = conv_descs_[desc];
    if (nodes_[x].len != d.in_ch * d.l_in || nodes_[kernel].len != d.out_ch * d.in_ch * d.k)
        throw ConfigError("Tape: conv1d shape mismatch");
    return push(Op::Conv1d, kernel, x, d.out_ch * d.l_out, desc);
}

int Tape::convt1d(int kernel, int x, int desc) {
    const ConvDesc& d = conv_descs_[desc];
    if (nodes_[x].len != d.in_ch * d.l_in || nodes_[kernel].len != d.in_ch * d.out_ch * d.k)
        throw ConfigError("Tape: convt1d shape mismatch");
    return push(Op::ConvT1d, kernel, x, d.out_ch * d.l_out, desc);
}

int Tape::bias_chan(int x, int bias) {
    const int ch = nodes_[bias].len;
    if (nodes_[x].len % ch != 0) throw ConfigError("Tape: bias_chan shape mismatch");
    return push(Op::BiasChan, x, bias, nodes_[x].len, ch);
}

int Tape::add_quad_desc(const QuadDesc& d) {
    quad_descs_.push_back(d);
    return static_cast<int>(quad_descs_.size()) - 1;
}

int Tape::quad_rhs(int z, int desc) {
    const QuadDesc& d = quad_descs_[desc];
    if (nodes_[z].len != d.dim) throw ConfigError("Tape: quad_rhs dimension mismatch");
    return push(Op::QuadRhs, z, -1, d.dim, desc);
}

void Tape::compute(Node& n) {
    double* out = value_ptr(n);
    switch (n.op) {
        case Op::MatVec: {
            const Node& wn = nodes_[n.a];
            const Node& xn = nodes_[n.b];
            CMatMap w(value_ptr(wn), wn.aux, wn.len / wn.aux);
            CVecMap x(value_ptr(xn), xn.len);
            VecMap(out, n.len).noalias() = w * x;
            return;
        }
        case Op::MatTVec: {
            const Node& wn = nodes_[n.a];
            const Node& xn = nodes_[n.b];
            CMatMap w(value_ptr(wn), wn.aux, wn.len / wn.aux);
            CVecMap x(value_ptr(xn), xn.len);
            VecMap(out, n.len).noalias() = w.transpose() * x;
            return;
        }
        case Op::Add:
            VecMap(out, n.len) = value(n.a) + value(n.b);
            return;
        case Op::Sub:
            VecMap(out, n.len) = value(n.a) - value(n.b);
            return;
        case Op::Axpy:
            VecMap(out, n.len) = value(n.a) + n.c * value(n.b);
            return;
        case Op::Scale:
            VecMap(out, n.len) = n.c * value(n.a);
            return;
        case Op::Shift:
            VecMap(out, n.len) = value(n.a).array() + n.c;
            return;
        case Op::Hadamard:
            VecMap(out, n.len) = value(n.a).cwiseProduct(value(n.b));
            return;
        case Op::Selu: {
            auto x = value(n.a);
            for (int i = 0; i < n.len; ++i) out[i] = selu_fn(x[i]);
            return;
        }
        case Op::SeluPrime: {
            auto x = value(n.a);
            for (int i = 0; i < n.len; ++i) out[i] = selu_grad_fn(x[i]);
            return;
        }
        case Op::SymplJ: {
            auto x = value(n.a);
            const int h = n.len / 2;
            for (int i = 0; i < h; ++i) {
                out[i] = x[h + i];
                out[h + i] = -x[i];
            }
            return;
        }
        case Op::Dot:
            out[0] = value(n.a).dot(value(n.b));
            return;
        case Op::SumSq:
            out[0] = value(n.a).squaredNorm();
            return;
        case Op::SumAbs:
            out[0] = value(n.a).cwiseAbs().sum();
            return;
        case Op::Conv1d:
            conv1d_fwd(conv_descs_[n.aux], value_ptr(nodes_[n.a]), value_ptr(nodes_[n.b]), out);
            return;
        case Op::ConvT1d:
            convt1d_fwd(conv_descs_[n.aux], value_ptr(nodes_[n.a]), value_ptr(nodes_[n.b]), out);
            return;
        case Op::BiasChan: {
            const int ch = n.aux;
            const int l = n.len / ch;
            auto x = value(n.a);
            auto bias = value(n.b);
            for (int c = 0; c < ch; ++c)
                for (int i = 0; i < l; ++i) out[c * l + i] = x[c * l + i] + bias[c];
            return;
        }
        case Op::QuadRhs: {
            const QuadDesc& d = quad_descs_[n.aux];
            const double* p = params_->values.data();
            quadham::rhs_storage(d.dim, p + d.alpha_off, p + d.s_off, p + d.t_off,
                                 value_ptr(nodes_[n.a]), out);
            return;
        }
        default:
            throw ConfigError("Tape: compute on leaf node");
    }
}

void Tape::backprop(const Node& n) {
    const double* g = grad_ptr(n);
    switch (n.op) {
        case Op::LeafTape:
        case Op::LeafParamVec:
        case Op::LeafParamMat:
            return;
        case Op::MatVec: {
            const Node& wn = nodes_[n.a];
            const Node& xn = nodes_[n.b];
            const int rows = wn.aux, cols = wn.len / wn.aux;
            CMatMap w(value_ptr(wn), rows, cols);
            CVecMap x(value_ptr(xn), cols);
            CVecMap gy(g, rows);
            MatMap(grad_ptr(wn), rows, cols).noalias() += gy * x.transpose();
            VecMap(grad_ptr(xn), cols).noalias() += w.transpose() * gy;
            return;
        }
        case Op::MatTVec: {
            const Node& wn = nodes_[n.a];
            const Node& xn = nodes_[n.b];
            const int rows = wn.aux, cols = wn.len / wn.aux;
            CMatMap w(value_ptr(wn), rows, cols);
            CVecMap x(value_ptr(xn), rows);
            CVecMap gy(g, cols);
            MatMap(grad_ptr(wn), rows, cols).noalias() += x * gy.transpose();
            VecMap(grad_ptr(xn), rows).noalias() += w * gy;
            return;
        }
        case Op::Add: {
            CVecMap gy(g, n.len);
            VecMap(grad_ptr(nodes_[n.a]), n.len) += gy;
            VecMap(grad_ptr(nodes_[n.b]), n.len) += gy;
            return;
        }
        case Op::Sub: {
            CVecMap gy(g, n.len);
            VecMap(grad_ptr(nodes_[n.a]), n.len) += gy;
            VecMap(grad_ptr(nodes_[n.b]), n.len) -= gy;
            return;
        }
        case Op::Axpy: {
            CVecMap gy(g, n.len);
            VecMap(grad_ptr(nodes_[n.a]), n.len) += gy;
            VecMap(grad_ptr(nodes_[n.b]), n.len) += n.c * gy;
            return;
        }
        case Op::Scale:
            VecMap(grad_ptr(nodes_[n.a]), n.len) += n.c * CVecMap(g, n.len);
            return;
        case Op::Shift:
            VecMap(grad_ptr(nodes_[n.a]), n.len) += CVecMap(g, n.len);
            return;
        case Op::Hadamard: {
            CVecMap gy(g, n.len);
            VecMap(grad_ptr(nodes_[n.a]), n.len) += gy.cwiseProduct(value(n.b));
            VecMap(grad_ptr(nodes_[n.b]), n.len) += gy.cwiseProduct(value(n.a));
            return;
        }
        case Op::Selu: {
            auto x = value(n.a);
            double* ga = grad_ptr(nodes_[n.a]);
            for (int i = 0; i < n.len; ++i) ga[i] += g[i] * selu_grad_fn(x[i]);
            return;
        }
        case Op::SeluPrime: {
            auto x = value(n.a);
            double* ga = grad_ptr(nodes_[n.a]);
            for (int i = 0; i < n.len; ++i) ga[i] += g[i] * selu_grad2_fn(x[i]);
            return;
        }
        case Op::SymplJ: {
            double* ga = grad_ptr(nodes_[n.a]);
            const int h = n.len / 2;
            for (int i = 0; i < h; ++i) {
                ga[i] -= g[h + i];
                ga[h + i] += g[i];
            }
            return;
        }
        case Op::Dot: {
            VecMap(grad_ptr(nodes_[n.a]), nodes_[n.a].len) += g[0] * value(n.b);
            VecMap(grad_ptr(nodes_[n.b]), nodes_[n.b].len) += g[0] * value(n.a);
            return;
        }
        case Op::SumSq:
            VecMap(grad_ptr(nodes_[n.a]), nodes_[n.a].len) += 2.0 * g[0] * value(n.a);
            return;
        case Op::SumAbs: {
            auto x = value(n.a);
            double* ga = grad_ptr(nodes_[n.a]);
            for (int i = 0; i < nodes_[n.a].len; ++i)
                ga[i] += g[0] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
            return;
        }
        case Op::Conv1d:
            conv1d_bwd(conv_descs_[n.aux], value_ptr(nodes_[n.a]), value_ptr(nodes_[n.b]), g,
                       grad_ptr(nodes_[n.a]), grad_ptr(nodes_[n.b]));
            return;
        case Op::ConvT1d:
            convt1d_bwd(conv_descs_[n.aux], value_ptr(nodes_[n.a]), value_ptr(nodes_[n.b]), g,
                        grad_ptr(nodes_[n.a]), grad_ptr(nodes_[n.b]));
            return;
        case Op::BiasChan: {
            const int ch = n.aux;
            const int l = n.len / ch;
            VecMap(grad_ptr(nodes_[n.a]), n.len) += CVecMap(g, n.len);
            double* gb = grad_ptr(nodes_[n.b]);
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = 0; i < l; ++i) acc += g[c * l + i];
                gb[c] += acc;
            }
            return;
        }
        case Op::QuadRhs: {
            const QuadDesc& d = quad_descs_[n.aux];
            const double* p = params_->values.data();
            double* gp = params_->grads.data();
            quadham::rhs_storage_backward(d.dim, p + d.s_off, p + d.t_off,
                                          value_ptr(nodes_[n.a]), g, grad_ptr(nodes_[n.a]),
                                          gp + d.alpha_off, gp + d.s_off, gp + d.t_off);
            return;
        }
    }
}

void Tape::backward(const std::vector<std::pair<int, double>>& seeds) {
    std::memset(arena_grads_.data(), 0, sizeof(double) * head_);
    for (const auto& [node, g] : seeds) {
        if (nodes_[node].len != 1) throw ConfigError("Tape: backward seed must be scalar");
        grad_ptr(nodes_[node])[0] += g;
    }
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) backprop(nodes_[i]);
}

}  // namespace hamlift::nn
