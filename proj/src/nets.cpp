#include "hamlift/nets.hpp"

#include <cmath>

namespace hamlift::nn {

void MlpConfig::validate() const {
    if (in_dim < 1 || out_dim < 1) throw ConfigError("MlpConfig: dimensions must be positive");
    if (hidden.empty()) throw ConfigError("MlpConfig: need at least one hidden layer");
    for (int h : hidden)
        if (h != hidden.front())
            throw ConfigError("MlpConfig: hidden layers must share one width (skip connections)");
    if (hidden.front() < 1) throw ConfigError("MlpConfig: hidden width must be positive");
}

void ConvAeConfig::validate() const {
    if (field_dim < 4 || field_dim % 2 != 0)
        throw ConfigError("ConvAeConfig: field dimension must be even and >= 4");
    if (latent_dim < 2 || latent_dim % 2 != 0)
        throw ConfigError("ConvAeConfig: latent dimension must be even and >= 2");
    if (channels.empty()) throw ConfigError("ConvAeConfig: need at least one conv layer");
    if (kernel < 1 || stride < 1 || pad < 0 || out_pad < 0)
        throw ConfigError("ConvAeConfig: invalid (kernel, stride, pad) combination");
    conv_shapes(*this);  // throws on incompatible geometry
}

ConvShapes conv_shapes(const ConvAeConfig& cfg) {
    ConvShapes shapes;
    int l = cfg.field_dim / 2;
    shapes.lengths.push_back(l);
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
        const int l_out = (l + 2 * cfg.pad - cfg.kernel) / cfg.stride + 1;
        if (l + 2 * cfg.pad < cfg.kernel || l_out < 1)
            throw ConfigError("ConvAeConfig: signal length " + std::to_string(l) +
                              " is incompatible with kernel " + std::to_string(cfg.kernel));
        const int l_back = (l_out - 1) * cfg.stride - 2 * cfg.pad + cfg.kernel + cfg.out_pad;
        if (l_back != l)
            throw ConfigError("ConvAeConfig: (k=" + std::to_string(cfg.kernel) +
                              ", s=" + std::to_string(cfg.stride) + ", p=" + std::to_string(cfg.pad) +
                              ", out_pad=" + std::to_string(cfg.out_pad) + ") does not round-trip length " +
                              std::to_string(l) + " (decoder would produce " + std::to_string(l_back) + ")");
        l = l_out;
        shapes.lengths.push_back(l);
    }
    shapes.flat = cfg.channels.back() * l;
    return shapes;
}

Net Net::mlp(const MlpConfig& cfg) {
    cfg.validate();
    Net net;
    net.kind_ = NetKind::Mlp;
    net.mlp_ = cfg;
    return net;
}

Net Net::conv_encoder(const ConvAeConfig& cfg) {
    cfg.validate();
    Net net;
    net.kind_ = NetKind::ConvEncoder;
    net.conv_ = cfg;
    return net;
}

Net Net::conv_decoder(const ConvAeConfig& cfg) {
    cfg.validate();
    Net net;
    net.kind_ = NetKind::ConvDecoder;
    net.conv_ = cfg;
    return net;
}

Net Net::identity(int dim) {
    Net net;
    net.kind_ = NetKind::Identity;
    net.identity_dim_ = dim;
    return net;
}

Net Net::linear(int in_dim, int out_dim) {
    if (in_dim < 1 || out_dim < 1) throw ConfigError("linear net: dimensions must be positive");
    Net net;
    net.kind_ = NetKind::Linear;
    net.mlp_.in_dim = in_dim;
    net.mlp_.out_dim = out_dim;
    return net;
}

int Net::in_dim() const {
    switch (kind_) {
        case NetKind::Mlp:
        case NetKind::Linear: return mlp_.in_dim;
        case NetKind::ConvEncoder: return conv_.field_dim;
        case NetKind::ConvDecoder: return conv_.latent_dim;
        case NetKind::Identity: return identity_dim_;
    }
    return 0;
}

int Net::out_dim() const {
    switch (kind_) {
        case NetKind::Mlp:
        case NetKind::Linear: return mlp_.out_dim;
        case NetKind::ConvEncoder: return conv_.latent_dim;
        case NetKind::ConvDecoder: return conv_.field_dim;
        case NetKind::Identity: return identity_dim_;
    }
    return 0;
}

int Net::n_params() const {
    switch (kind_) {
        case NetKind::Mlp: {
            const int h = mlp_.hidden.front();
            int n = h * mlp_.in_dim + h;
            for (std::size_t l = 1; l < mlp_.hidden.size(); ++l) n += h * h + h;
            n += mlp_.out_dim * h + mlp_.out_dim;
            return n;
        }
        case NetKind::ConvEncoder: {
            const ConvShapes shapes = conv_shapes(conv_);
            int n = 0;
            int in_ch = 2;
            for (int out_ch : conv_.channels) {
                n += out_ch * in_ch * conv_.kernel + out_ch;
                in_ch = out_ch;
            }
            return n + conv_.latent_dim * shapes.flat + conv_.latent_dim;
        }
        case NetKind::ConvDecoder: {
            const ConvShapes shapes = conv_shapes(conv_);
            int n = shapes.flat * conv_.latent_dim + shapes.flat;
            int in_ch = conv_.channels.back();
            for (int i = static_cast<int>(conv_.channels.size()) - 2; i >= -1; --i) {
                const int out_ch = i >= 0 ? conv_.channels[i] : 2;
                n += in_ch * out_ch * conv_.kernel + out_ch;
                in_ch = out_ch;
            }
            return n;
        }
        case NetKind::Identity: return 0;
        case NetKind::Linear: return mlp_.out_dim * mlp_.in_dim + mlp_.out_dim;
    }
    return 0;
}

namespace {

void init_uniform(double* w, int count, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < count; ++i) w[i] = rng.uniform(-bound, bound);
}

}  // namespace

void Net::init_params(double* params, Rng& rng) const {
    double* p = params;
    switch (kind_) {
        case NetKind::Mlp: {
            const int h = mlp_.hidden.front();
            int fan = mlp_.in_dim;
            for (std::size_t l = 0; l < mlp_.hidden.size(); ++l) {
                init_uniform(p, h * fan, fan, rng);
                p += h * fan;
                std::fill(p, p + h, 0.0);
                p += h;
                fan = h;
            }
            init_uniform(p, mlp_.out_dim * h, h, rng);
            p += mlp_.out_dim * h;
            std::fill(p, p + mlp_.out_dim, 0.0);
            return;
        }
        case NetKind::ConvEncoder: {
            const ConvShapes shapes = conv_shapes(conv_);
            int in_ch = 2;
            for (int out_ch : conv_.channels) {
                init_uniform(p, out_ch * in_ch * conv_.kernel, in_ch * conv_.kernel, rng);
                p += out_ch * in_ch * conv_.kernel;
                std::fill(p, p + out_ch, 0.0);
                p += out_ch;
                in_ch = out_ch;
            }
            init_uniform(p, conv_.latent_dim * shapes.flat, shapes.flat, rng);
            p += conv_.latent_dim * shapes.flat;
            std::fill(p, p + conv_.latent_dim, 0.0);
            return;
        }
        case NetKind::ConvDecoder: {
            const ConvShapes shapes = conv_shapes(conv_);
            init_uniform(p, shapes.flat * conv_.latent_dim, conv_.latent_dim, rng);
            p += shapes.flat * conv_.latent_dim;
            std::fill(p, p + shapes.flat, 0.0);
            p += shapes.flat;
            int in_ch = conv_.channels.back();
            for (int i = static_cast<int>(conv_.channels.size()) - 2; i >= -1; --i) {
                const int out_ch = i >= 0 ? conv_.channels[i] : 2;
                init_uniform(p, in_ch * out_ch * conv_.kernel, in_ch * conv_.kernel, rng);
                p += in_ch * out_ch * conv_.kernel;
                std::fill(p, p + out_ch, 0.0);
                p += out_ch;
                in_ch = out_ch;
            }
            return;
        }
        case NetKind::Identity: return;
        case NetKind::Linear: {
            init_uniform(p, mlp_.out_dim * mlp_.in_dim, mlp_.in_dim, rng);
            std::fill(p + mlp_.out_dim * mlp_.in_dim, p + n_params(), 0.0);
            return;
        }
    }
}

// The plain (non-taped) forward shares the taped code path through a scratch
// tape so batched and recorded evaluations agree bitwise.
Vec Net::forward(const double* params, const Vec& x) const {
    if (x.size() != in_dim()) throw ConfigError("Net::forward: input dimension mismatch");
    if (kind_ == NetKind::Identity) return x;
    ParamStore store;
    store.values = Eigen::Map<const Vec>(params, n_params());
    store.grads = Vec::Zero(store.values.size());
    Tape tape(&store);
    Trace trace = emit_forward(tape, tape.leaf(x), 0);
    return tape.value(trace.output);
}

Mat Net::forward_batch(const double* params, const Mat& xs) const {
    Mat out(out_dim(), xs.cols());
    for (Eigen::Index c = 0; c < xs.cols(); ++c) out.col(c) = forward(params, xs.col(c));
    return out;
}

Trace Net::emit_forward(Tape& tape, int x_node, int param_off) const {
    Trace trace;
    trace.input = x_node;
    int off = param_off;
    switch (kind_) {
        case NetKind::Identity:
            trace.output = x_node;
            return trace;
        case NetKind::Linear: {
            const int w = tape.param_mat(off, mlp_.out_dim, mlp_.in_dim);
            const int b = tape.param_vec(off + mlp_.out_dim * mlp_.in_dim, mlp_.out_dim);
            trace.param_nodes = {w, b};
            trace.output = tape.add(tape.matvec(w, x_node), b);
            return trace;
        }
        case NetKind::Mlp: {
            const int h = mlp_.hidden.front();
            int prev = x_node;
            int fan = mlp_.in_dim;
            for (std::size_t l = 0; l < mlp_.hidden.size(); ++l) {
                const int w = tape.param_mat(off, h, fan);
                off += h * fan;
                const int b = tape.param_vec(off, h);
                off += h;
                trace.param_nodes.push_back(w);
                trace.param_nodes.push_back(b);
                const int a = tape.add(tape.matvec(w, prev), b);
                trace.pre_acts.push_back(a);
                const int s = tape.selu(a);
                prev = (l == 0) ? s : tape.add(s, prev);
                fan = h;
            }
            const int w_out = tape.param_mat(off, mlp_.out_dim, h);
            off += mlp_.out_dim * h;
            const int b_out = tape.param_vec(off, mlp_.out_dim);
            trace.param_nodes.push_back(w_out);
            trace.param_nodes.push_back(b_out);
            trace.output = tape.add(tape.matvec(w_out, prev), b_out);
            break;
        }
        case NetKind::ConvEncoder: {
            const ConvShapes shapes = conv_shapes(conv_);
            int prev = x_node;
            int in_ch = 2;
            for (std::size_t i = 0; i < conv_.channels.size(); ++i) {
                const int out_ch = conv_.channels[i];
                ConvDesc d;
                d.in_ch = in_ch;
                d.out_ch = out_ch;
                d.k = conv_.kernel;
                d.s = conv_.stride;
                d.p = conv_.pad;
                d.l_in = shapes.lengths[i];
                d.l_out = shapes.lengths[i + 1];
                const int desc = tape.add_conv_desc(d);
                trace.conv_descs.push_back(desc);
                const int kern = tape.param_vec(off, out_ch * in_ch * conv_.kernel);
                off += out_ch * in_ch * conv_.kernel;
                const int bias = tape.param_vec(off, out_ch);
                off += out_ch;
                trace.param_nodes.push_back(kern);
                trace.param_nodes.push_back(bias);
                const int a = tape.bias_chan(tape.conv1d(kern, prev, desc), bias);
                trace.pre_acts.push_back(a);
                prev = tape.selu(a);
                in_ch = out_ch;
            }
            const int w = tape.param_mat(off, conv_.latent_dim, shapes.flat);
            off += conv_.latent_dim * shapes.flat;
            const int b = tape.param_vec(off, conv_.latent_dim);
            trace.param_nodes.push_back(w);
            trace.param_nodes.push_back(b);
            trace.output = tape.add(tape.matvec(w, prev), b);
            break;
        }
        case NetKind::ConvDecoder: {
            const ConvShapes shapes = conv_shapes(conv_);
            const int w = tape.param_mat(off, shapes.flat, conv_.latent_dim);
            off += shapes.flat * conv_.latent_dim;
            const int b = tape.param_vec(off, shapes.flat);
            off += shapes.flat;
            trace.param_nodes.push_back(w);
            trace.param_nodes.push_back(b);
            const int a0 = tape.add(tape.matvec(w, x_node), b);
            trace.pre_acts.push_back(a0);
            int prev = tape.selu(a0);
            int in_ch = conv_.channels.back();
            const int n_layers = static_cast<int>(conv_.channels.size());
            for (int i = n_layers - 2; i >= -1; --i) {
                const int out_ch = i >= 0 ? conv_.channels[i] : 2;
                const int layer = n_layers - 2 - i;  // 0-based decoder conv index
                ConvDesc d;
                d.in_ch = in_ch;
                d.out_ch = out_ch;
                d.k = conv_.kernel;
                d.s = conv_.stride;
                d.p = conv_.pad;
                d.out_pad = conv_.out_pad;
                d.l_in = shapes.lengths[n_layers - layer];
                d.l_out = shapes.lengths[n_layers - layer - 1];
                const int desc = tape.add_conv_desc(d);
                trace.conv_descs.push_back(desc);
                const int kern = tape.param_vec(off, in_ch * out_ch * conv_.kernel);
                off += in_ch * out_ch * conv_.kernel;
                const int bias = tape.param_vec(off, out_ch);
                off += out_ch;
                trace.param_nodes.push_back(kern);
                trace.param_nodes.push_back(bias);
                const int a = tape.bias_chan(tape.convt1d(kern, prev, desc), bias);
                if (i >= 0) {
                    trace.pre_acts.push_back(a);
                    prev = tape.selu(a);
                } else {
                    trace.output = a;  // linear final layer
                }
                in_ch = out_ch;
            }
            break;
        }
    }
    return trace;
}

void Net::ensure_selu_primes(Tape& tape, Trace& trace) const {
    if (trace.selu_primes.size() == trace.pre_acts.size()) return;
    trace.selu_primes.clear();
    for (int a : trace.pre_acts) trace.selu_primes.push_back(tape.selu_prime(a));
}

int Net::emit_jvp(Tape& tape, Trace& trace, int tangent_node) const {
    ensure_selu_primes(tape, trace);
    switch (kind_) {
        case NetKind::Identity:
            return tangent_node;
        case NetKind::Linear:
            return tape.matvec(trace.param_nodes[0], tangent_node);
        case NetKind::Mlp: {
            int t = tangent_node;
            const int n_hidden = static_cast<int>(mlp_.hidden.size());
            for (int l = 0; l < n_hidden; ++l) {
                const int w = trace.param_nodes[2 * l];
                const int tm = tape.hadamard(trace.selu_primes[l], tape.matvec(w, t));
                t = (l == 0) ? tm : tape.add(tm, t);
            }
            return tape.matvec(trace.param_nodes[2 * n_hidden], t);
        }
        case NetKind::ConvEncoder: {
            int t = tangent_node;
            const int n_layers = static_cast<int>(conv_.channels.size());
            for (int i = 0; i < n_layers; ++i) {
                const int kern = trace.param_nodes[2 * i];
                t = tape.hadamard(trace.selu_primes[i], tape.conv1d(kern, t, trace.conv_descs[i]));
            }
            return tape.matvec(trace.param_nodes[2 * n_layers], t);
        }
        case NetKind::ConvDecoder: {
            const int n_layers = static_cast<int>(conv_.channels.size());
            int t = tape.hadamard(trace.selu_primes[0], tape.matvec(trace.param_nodes[0], tangent_node));
            for (int layer = 0; layer < n_layers; ++layer) {
                const int kern = trace.param_nodes[2 + 2 * layer];
                t = tape.convt1d(kern, t, trace.conv_descs[layer]);
                if (layer + 1 < n_layers) t = tape.hadamard(trace.selu_primes[layer + 1], t);
            }
            return t;
        }
    }
    throw ConfigError("emit_jvp: unknown net kind");
}

int Net::emit_vjp(Tape& tape, Trace& trace, int cotangent_node) const {
    ensure_selu_primes(tape, trace);
    switch (kind_) {
        case NetKind::Identity:
            return cotangent_node;
        case NetKind::Linear:
            return tape.mattvec(trace.param_nodes[0], cotangent_node);
        case NetKind::Mlp: {
            const int n_hidden = static_cast<int>(mlp_.hidden.size());
            int g = tape.mattvec(trace.param_nodes[2 * n_hidden], cotangent_node);
            for (int l = n_hidden - 1; l >= 0; --l) {
                const int gw = tape.mattvec(trace.param_nodes[2 * l],
                                            tape.hadamard(trace.selu_primes[l], g));
                g = (l == 0) ? gw : tape.add(gw, g);
            }
            return g;
        }
        default:
            throw ConfigError("emit_vjp: only MLP and identity maps support reverse sweeps");
    }
}

Mat Net::input_jacobian(const double* params, const Vec& x) const {
    if (x.size() != in_dim()) throw ConfigError("input_jacobian: input dimension mismatch");
    if (kind_ == NetKind::Identity) return Mat::Identity(identity_dim_, identity_dim_);
    ParamStore store;
    store.values = Eigen::Map<const Vec>(params, n_params());
    store.grads = Vec::Zero(store.values.size());
    Tape tape(&store);
    Trace trace = emit_forward(tape, tape.leaf(x), 0);
    Mat jac(out_dim(), in_dim());
    const bool rows_cheaper =
        (kind_ == NetKind::Mlp || kind_ == NetKind::Linear) && out_dim() < in_dim();
    if (rows_cheaper) {
        for (int r = 0; r < out_dim(); ++r) {
            Vec e = Vec::Zero(out_dim());
            e[r] = 1.0;
            jac.row(r) = tape.value(emit_vjp(tape, trace, tape.leaf(e))).transpose();
        }
    } else {
        for (int c = 0; c < in_dim(); ++c) {
            Vec e = Vec::Zero(in_dim());
            e[c] = 1.0;
            jac.col(c) = tape.value(emit_jvp(tape, trace, tape.leaf(e)));
        }
    }
    return jac;
}

Vec grad_params(Tape& tape, ParamStore& store, int scalar_node) {
    store.zero_grads();
    tape.backward({{scalar_node, 1.0}});
    return store.grads;
}

}  // namespace hamlift::nn
