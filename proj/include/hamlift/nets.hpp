#pragma once

#include "hamlift/common.hpp"
#include "hamlift/tape.hpp"

#include <vector>

namespace hamlift::nn {

/// MLP with SELU activations, a linear head, and residual skip connections
/// between consecutive hidden layers (which must share one width).
struct MlpConfig {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<int> hidden;

    void validate() const;
};

/// 1D convolutional autoencoder geometry. The state of length field_dim = 2N
/// is viewed as two channels (q, p) of length N. Every encoder convolution
/// uses the same (kernel, stride, pad); decoder transposed convolutions mirror
/// them with the given output padding so shapes round-trip exactly.
struct ConvAeConfig {
    int field_dim = 0;   // 2N
    int latent_dim = 0;  // 2n
    std::vector<int> channels = {4, 8, 16, 32};
    int kernel = 5;
    int stride = 2;
    int pad = 2;
    int out_pad = 1;

    void validate() const;
};

struct ConvShapes {
    std::vector<int> lengths;  // signal length before each conv layer, plus final
    int flat = 0;              // channels.back() * lengths.back()
};
ConvShapes conv_shapes(const ConvAeConfig& cfg);

enum class NetKind { Mlp, ConvEncoder, ConvDecoder, Identity, Linear };

/// Node ids of one taped forward pass; emit_jvp/emit_vjp reuse the recorded
/// parameter leaves and pre-activations, so repeated sweeps share work and all
/// parameter gradients flow through a single backward call.
struct Trace {
    int input = -1;
    int output = -1;
    std::vector<int> param_nodes;
    std::vector<int> pre_acts;
    std::vector<int> selu_primes;  // lazily created, -1 until first jvp/vjp
    std::vector<int> conv_descs;
};

class Net {
public:
    static Net mlp(const MlpConfig& cfg);
    static Net conv_encoder(const ConvAeConfig& cfg);
    static Net conv_decoder(const ConvAeConfig& cfg);
    static Net identity(int dim);
    static Net linear(int in_dim, int out_dim);  // y = W x + b

    NetKind kind() const { return kind_; }
    int in_dim() const;
    int out_dim() const;
    int n_params() const;

    /// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases.
    void init_params(double* params, Rng& rng) const;

    Vec forward(const double* params, const Vec& x) const;
    Mat forward_batch(const double* params, const Mat& xs) const;

    Trace emit_forward(Tape& tape, int x_node, int param_off) const;
    /// Tangent propagation: returns the node holding (D net)(x) * tangent.
    int emit_jvp(Tape& tape, Trace& trace, int tangent_node) const;
    /// Cotangent propagation: returns the node holding (D net)(x)^T * cotangent.
    /// Available for Mlp and Identity.
    int emit_vjp(Tape& tape, Trace& trace, int cotangent_node) const;

    /// Dense Jacobian at x (column sweeps, or row sweeps for wide MLPs).
    Mat input_jacobian(const double* params, const Vec& x) const;

    const MlpConfig& mlp_config() const { return mlp_; }
    const ConvAeConfig& conv_config() const { return conv_; }
    int identity_dim() const { return identity_dim_; }

private:
    NetKind kind_ = NetKind::Identity;
    MlpConfig mlp_;  // also carries the dimensions of Linear nets
    ConvAeConfig conv_;
    int identity_dim_ = 0;

    void ensure_selu_primes(Tape& tape, Trace& trace) const;
};

/// Reverse-mode gradient of a recorded scalar with respect to all parameters.
Vec grad_params(Tape& tape, ParamStore& store, int scalar_node);

}  // namespace hamlift::nn
