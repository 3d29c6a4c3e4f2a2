#pragma once

#include "hamlift/common.hpp"
#include "hamlift/integrators.hpp"
#include "hamlift/nets.hpp"
#include "hamlift/quadham.hpp"
#include "hamlift/systems.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hamlift::training {

/// Lifting: low-dimensional data, higher-dimensional latent space, encoder-side
/// symplectic loss. Reduction: high-dimensional data, low-dimensional latent
/// space, decoder-side symplectic loss. Koopman: linear latent dynamics and no
/// symplectic loss (deep linear embedding baseline).
enum class Mode { Lifting, Reduction, Koopman };

std::string mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;

    static LossWeights defaults(Mode mode) {
        if (mode == Mode::Reduction) return {1.0, 1e-1, 1e-1};
        return {1e-1, 1.0, 1.0};
    }
};

enum class Normalize { Auto, On, Off };

struct TrainConfig {
    Mode mode = Mode::Lifting;
    int latent_dim = 4;
    std::vector<int> hidden = {64, 64, 64};  // MLP widths (lifting / koopman)
    std::vector<int> conv_channels = {4, 8, 16, 32};
    int conv_kernel = 5;
    int conv_stride = 2;
    int conv_pad = 2;
    int conv_out_pad = 1;
    double learning_rate = 3e-3;
    int batch_size = 5;
    int epochs = 1;
    double weight_decay = 1e-5;
    double lr_decay_factor = 0.1;
    int lr_decay_step = 0;  // 0 -> ceil(epochs / 2)
    std::uint64_t seed = 0;
    double mae_recon_weight = 0.5;
    double param_penalty_weight = 1e-5;
    double stop_tolerance = 0.0;  // early stop on total loss; 0 disables
    Normalize normalize = Normalize::Auto;
    int threads = 1;

    void validate() const;
    int effective_lr_step() const { return lr_decay_step > 0 ? lr_decay_step : (epochs + 1) / 2; }
    bool normalization_enabled() const {
        return normalize == Normalize::On || (normalize == Normalize::Auto && mode == Mode::Reduction);
    }
};

/// Trained encoder + decoder + latent dynamics. Network parameters are stored
/// as one flat vector, encoder block first. encode/decode apply the stored
/// normalization, so they map between raw ambient states and latent states.
struct ModelBundle {
    Mode mode = Mode::Lifting;
    models::SystemSpec system;
    std::optional<integrators::NormalizationRecord> normalization;
    nn::Net encoder = nn::Net::identity(2);
    nn::Net decoder = nn::Net::identity(2);
    Vec net_params;
    quadham::QuadHamParams dyn;
    Mat koopman;
    TrainConfig config;
    LossWeights weights;

    bool is_koopman() const { return mode == Mode::Koopman; }
    int latent_dim() const { return encoder.out_dim(); }
    int ambient_dim() const { return encoder.in_dim(); }
    const double* encoder_params() const { return net_params.data(); }
    const double* decoder_params() const { return net_params.data() + encoder.n_params(); }

    Vec encode(const Vec& x_raw) const;
    Vec decode(const Vec& z) const;
    integrators::OdeSystem latent_ode() const;
    /// Cubic latent Hamiltonian; NaN for Koopman bundles (no conserved latent energy).
    double latent_energy(const Vec& z) const;

    /// Identity-autoencoder bundle around given latent dynamics (test fixture
    /// and quadham-only simulations).
    static ModelBundle identity_bundle(const models::SystemSpec& system,
                                       const quadham::QuadHamParams& dyn);
};

struct LossValues {
    double encdec = 0.0;
    double symp = 0.0;
    double zdot = 0.0;
    double total = 0.0;
};

/// Mean squared reconstruction error plus mae_weight * mean absolute error,
/// means over batch and dimensions. Batches are in the bundle's trained
/// (normalized) coordinates.
double loss_encdec(const ModelBundle& bundle, const Mat& xs);
/// Mean over the batch of || D^T J D - J ||_F^2 for the encoder Jacobian
/// (lifting/koopman) or decoder Jacobian (reduction).
double loss_symp(const ModelBundle& bundle, const Mat& xs);
/// Mean squared residual of D psi(x) xdot against the latent dynamics, mean
/// over batch and latent dimensions, plus the L1 parameter penalty.
double loss_zdot(const ModelBundle& bundle, const Mat& xs, const Mat& xdots);
LossValues total_loss(const ModelBundle& bundle, const Mat& xs, const Mat& xdots,
                      const LossWeights& weights);

/// Total loss and its gradient with respect to all trainable parameters
/// (network blocks first, then the latent-dynamics storages in declared
/// order). This is exactly what one optimizer step consumes.
std::pair<LossValues, Vec> loss_gradient(const ModelBundle& bundle, const Mat& xs,
                                         const Mat& xdots, const LossWeights& weights);

struct EpochLosses {
    double encdec = 0.0;
    double symp = 0.0;
    double zdot = 0.0;
    double total = 0.0;
};

struct TrainResult {
    ModelBundle bundle;
    std::vector<EpochLosses> history;
};

/// Joint Adam optimization of autoencoder and latent dynamics. Throws
/// NumericError with epoch/batch diagnostics if the loss becomes non-finite.
TrainResult train(const integrators::Dataset& dataset, const TrainConfig& config,
                  const LossWeights& weights);

/// Deep-linear-embedding baseline: same machinery with mode = Koopman.
TrainResult train_koopman(const integrators::Dataset& dataset, const TrainConfig& config);

void write_history_csv(const std::vector<EpochLosses>& history, const std::string& path);

}  // namespace hamlift::training
