#include "hamlift/training.hpp"

#include "hamlift/io_util.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace hamlift::training {

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::Lifting: return "lifting";
        case Mode::Reduction: return "reduction";
        case Mode::Koopman: return "koopman";
    }
    throw ConfigError("unknown mode");
}

Mode mode_from_name(const std::string& name) {
    if (name == "lifting") return Mode::Lifting;
    if (name == "reduction") return Mode::Reduction;
    if (name == "koopman") return Mode::Koopman;
    throw ConfigError("unknown mode: " + name);
}

void TrainConfig::validate() const {
    if (latent_dim < 2 || latent_dim % 2 != 0)
        throw ConfigError("TrainConfig: latent dimension must be even and >= 2");
    if (learning_rate < 0.0) throw ConfigError("TrainConfig: learning rate must be nonnegative");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch size must be >= 1");
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight decay must be nonnegative");
    if (lr_decay_factor <= 0.0) throw ConfigError("TrainConfig: lr decay factor must be positive");
    if (mae_recon_weight < 0.0) throw ConfigError("TrainConfig: mae weight must be nonnegative");
    if (param_penalty_weight < 0.0) throw ConfigError("TrainConfig: penalty weight must be nonnegative");
    if (threads < 1) throw ConfigError("TrainConfig: threads must be >= 1");
}

// ---------------------------------------------------------------------------
// ModelBundle
// ---------------------------------------------------------------------------

Vec ModelBundle::encode(const Vec& x_raw) const {
    const Vec x = normalization ? normalization->normalize_state(x_raw) : x_raw;
    return encoder.forward(encoder_params(), x);
}

Vec ModelBundle::decode(const Vec& z) const {
    const Vec x = decoder.forward(decoder_params(), z);
    return normalization ? normalization->denormalize_state(x) : x;
}

integrators::OdeSystem ModelBundle::latent_ode() const {
    if (is_koopman()) {
        integrators::OdeSystem sys;
        const Mat k = koopman;
        sys.f = [k](const Vec& z) -> Vec { return k * z; };
        sys.jac = [k](const Vec&, Mat& j) { j = k; };
        sys.linear = true;
        return sys;
    }
    return quadham::ode_from_quadham(dyn);
}

double ModelBundle::latent_energy(const Vec& z) const {
    if (is_koopman()) return std::numeric_limits<double>::quiet_NaN();
    return quadham::latent_hamiltonian(dyn, z);
}

ModelBundle ModelBundle::identity_bundle(const models::SystemSpec& system,
                                         const quadham::QuadHamParams& dyn) {
    if (system.dimension() != dyn.dim)
        throw ConfigError("identity_bundle: system and latent dimensions must match");
    ModelBundle b;
    b.mode = Mode::Lifting;
    b.system = system;
    b.encoder = nn::Net::identity(dyn.dim);
    b.decoder = nn::Net::identity(dyn.dim);
    b.net_params = Vec(0);
    b.dyn = dyn;
    b.config.latent_dim = dyn.dim;
    b.weights = LossWeights::defaults(Mode::Lifting);
    return b;
}

// ---------------------------------------------------------------------------
// Per-sample loss graph
// ---------------------------------------------------------------------------

namespace {

struct Layout {
    Mode mode = Mode::Lifting;
    nn::Net encoder = nn::Net::identity(2);
    nn::Net decoder = nn::Net::identity(2);
    int enc_off = 0;
    int dec_off = 0;
    int dyn_off = 0;
    int dyn_count = 0;
    int d_amb = 0;
    int d_lat = 0;
};

Layout make_layout(Mode mode, int d_amb, const TrainConfig& cfg) {
    Layout lay;
    lay.mode = mode;
    lay.d_amb = d_amb;
    lay.d_lat = cfg.latent_dim;
    if (mode == Mode::Reduction) {
        nn::ConvAeConfig ae;
        ae.field_dim = d_amb;
        ae.latent_dim = cfg.latent_dim;
        ae.channels = cfg.conv_channels;
        ae.kernel = cfg.conv_kernel;
        ae.stride = cfg.conv_stride;
        ae.pad = cfg.conv_pad;
        ae.out_pad = cfg.conv_out_pad;
        lay.encoder = nn::Net::conv_encoder(ae);
        lay.decoder = nn::Net::conv_decoder(ae);
    } else {
        nn::MlpConfig enc{d_amb, cfg.latent_dim, cfg.hidden};
        nn::MlpConfig dec{cfg.latent_dim, d_amb, cfg.hidden};
        lay.encoder = nn::Net::mlp(enc);
        lay.decoder = nn::Net::mlp(dec);
    }
    lay.enc_off = 0;
    lay.dec_off = lay.encoder.n_params();
    lay.dyn_off = lay.dec_off + lay.decoder.n_params();
    lay.dyn_count = mode == Mode::Koopman ? cfg.latent_dim * cfg.latent_dim
                                          : quadham::QuadHamParams(cfg.latent_dim).n_params();
    return lay;
}

struct SampleNodes {
    int mse = -1;
    int mae = -1;
    int symp = -1;
    int zdot = -1;
};

SampleNodes emit_sample(nn::Tape& tape, const Layout& lay, const Eigen::Ref<const Vec>& x,
                        const Eigen::Ref<const Vec>& xdot) {
    SampleNodes nodes;
    const int xn = tape.leaf(x);
    const int xd = tape.leaf(xdot);

    nn::Trace enc_trace = lay.encoder.emit_forward(tape, xn, lay.enc_off);
    const int z = enc_trace.output;
    nn::Trace dec_trace = lay.decoder.emit_forward(tape, z, lay.dec_off);

    const int diff = tape.sub(dec_trace.output, xn);
    nodes.mse = tape.sum_sq(diff);
    nodes.mae = tape.sum_abs(diff);

    const int jz = lay.encoder.emit_jvp(tape, enc_trace, xd);
    int f;
    if (lay.mode == Mode::Koopman) {
        const int k = tape.param_mat(lay.dyn_off, lay.d_lat, lay.d_lat);
        f = tape.matvec(k, z);
    } else {
        nn::QuadDesc qd;
        qd.dim = lay.d_lat;
        qd.alpha_off = lay.dyn_off;
        qd.s_off = lay.dyn_off + lay.d_lat;
        qd.t_off = qd.s_off + quadham::QuadHamParams::s_size(lay.d_lat);
        f = tape.quad_rhs(z, tape.add_quad_desc(qd));
    }
    nodes.zdot = tape.sum_sq(tape.sub(jz, f));

    if (lay.mode != Mode::Koopman) {
        const bool enc_side = lay.mode == Mode::Lifting;
        const nn::Net& map = enc_side ? lay.encoder : lay.decoder;
        nn::Trace& trace = enc_side ? enc_trace : dec_trace;
        const int small = map.in_dim();
        const int half = small / 2;
        std::vector<int> cols(small), jcols(small);
        for (int k = 0; k < small; ++k) {
            Vec e = Vec::Zero(small);
            e[k] = 1.0;
            cols[k] = map.emit_jvp(tape, trace, tape.leaf(e));
            jcols[k] = tape.sympl_j(cols[k]);
        }
        int acc = -1;
        for (int k = 0; k < small; ++k)
            for (int l = 0; l < small; ++l) {
                const double target = (l == k + half) ? 1.0 : (k == l + half ? -1.0 : 0.0);
                const int r = tape.shift(tape.dot(cols[k], jcols[l]), -target);
                const int sq = tape.hadamard(r, r);
                acc = acc < 0 ? sq : tape.add(acc, sq);
            }
        nodes.symp = acc;
    }
    return nodes;
}

nn::ParamStore store_from_bundle(const ModelBundle& bundle, const Layout& lay) {
    nn::ParamStore store;
    store.allocate(lay.dyn_off + lay.dyn_count);
    if (bundle.net_params.size() != lay.dyn_off)
        throw ConfigError("bundle: network parameter block has unexpected size");
    store.values.head(lay.dyn_off) = bundle.net_params;
    if (bundle.is_koopman()) {
        if (bundle.koopman.rows() != lay.d_lat || bundle.koopman.cols() != lay.d_lat)
            throw ConfigError("bundle: Koopman operator has unexpected shape");
        store.values.segment(lay.dyn_off, lay.dyn_count) =
            Eigen::Map<const Vec>(bundle.koopman.data(), lay.dyn_count);
    } else {
        Vec dyn(lay.dyn_count);
        dyn << bundle.dyn.alpha, bundle.dyn.s_upper, bundle.dyn.t_unique;
        store.values.segment(lay.dyn_off, lay.dyn_count) = dyn;
    }
    return store;
}

Layout layout_from_bundle(const ModelBundle& bundle) {
    Layout lay;
    lay.mode = bundle.mode;
    lay.encoder = bundle.encoder;
    lay.decoder = bundle.decoder;
    lay.d_amb = bundle.encoder.in_dim();
    lay.d_lat = bundle.encoder.out_dim();
    lay.enc_off = 0;
    lay.dec_off = bundle.encoder.n_params();
    lay.dyn_off = lay.dec_off + bundle.decoder.n_params();
    lay.dyn_count = bundle.is_koopman() ? lay.d_lat * lay.d_lat
                                        : quadham::QuadHamParams(lay.d_lat).n_params();
    return lay;
}

double dyn_penalty(const nn::ParamStore& store, const Layout& lay, double weight) {
    if (lay.dyn_count == 0) return 0.0;
    return weight * store.values.segment(lay.dyn_off, lay.dyn_count).cwiseAbs().mean();
}

}  // namespace

// ---------------------------------------------------------------------------
// Public loss functions (values only)
// ---------------------------------------------------------------------------

namespace {

LossValues batch_losses(const ModelBundle& bundle, const Mat& xs, const Mat* xdots,
                        const LossWeights& weights) {
    if (xs.cols() == 0) throw ConfigError("loss: batch must be nonempty");
    const Layout lay = layout_from_bundle(bundle);
    if (xs.rows() != lay.d_amb) throw ConfigError("loss: batch dimension mismatch");
    nn::ParamStore store = store_from_bundle(bundle, lay);
    nn::Tape tape(&store);
    const Eigen::Index batch = xs.cols();
    LossValues out;
    const Vec zero_deriv = Vec::Zero(lay.d_amb);
    for (Eigen::Index i = 0; i < batch; ++i) {
        tape.reset();
        const SampleNodes nodes =
            emit_sample(tape, lay, xs.col(i), xdots ? xdots->col(i) : zero_deriv);
        out.encdec += (tape.value_scalar(nodes.mse) +
                       bundle.config.mae_recon_weight * tape.value_scalar(nodes.mae)) /
                      lay.d_amb;
        if (nodes.symp >= 0) out.symp += tape.value_scalar(nodes.symp);
        if (xdots) out.zdot += tape.value_scalar(nodes.zdot) / lay.d_lat;
    }
    out.encdec /= static_cast<double>(batch);
    out.symp /= static_cast<double>(batch);
    out.zdot /= static_cast<double>(batch);
    if (xdots) out.zdot += dyn_penalty(store, lay, bundle.config.param_penalty_weight);
    out.total = weights.lambda1 * out.encdec + weights.lambda3 * out.zdot;
    if (bundle.mode != Mode::Koopman) out.total += weights.lambda2 * out.symp;
    return out;
}

}  // namespace

double loss_encdec(const ModelBundle& bundle, const Mat& xs) {
    return batch_losses(bundle, xs, nullptr, bundle.weights).encdec;
}

double loss_symp(const ModelBundle& bundle, const Mat& xs) {
    return batch_losses(bundle, xs, nullptr, bundle.weights).symp;
}

double loss_zdot(const ModelBundle& bundle, const Mat& xs, const Mat& xdots) {
    if (xdots.cols() != xs.cols())
        throw ConfigError("loss_zdot: batch is missing time derivatives");
    return batch_losses(bundle, xs, &xdots, bundle.weights).zdot;
}

LossValues total_loss(const ModelBundle& bundle, const Mat& xs, const Mat& xdots,
                      const LossWeights& weights) {
    if (xdots.cols() != xs.cols())
        throw ConfigError("total_loss: batch is missing time derivatives");
    return batch_losses(bundle, xs, &xdots, weights);
}

std::pair<LossValues, Vec> loss_gradient(const ModelBundle& bundle, const Mat& xs,
                                         const Mat& xdots, const LossWeights& weights) {
    if (xs.cols() == 0) throw ConfigError("loss_gradient: batch must be nonempty");
    if (xdots.cols() != xs.cols())
        throw ConfigError("loss_gradient: batch is missing time derivatives");
    const Layout lay = layout_from_bundle(bundle);
    nn::ParamStore store = store_from_bundle(bundle, lay);
    nn::Tape tape(&store);
    store.zero_grads();
    const int b = static_cast<int>(xs.cols());
    const double lambda2 = bundle.is_koopman() ? 0.0 : weights.lambda2;
    std::vector<std::pair<int, double>> seeds;
    LossValues out;
    for (int i = 0; i < b; ++i) {
        tape.reset();
        const SampleNodes nodes = emit_sample(tape, lay, xs.col(i), xdots.col(i));
        out.encdec += (tape.value_scalar(nodes.mse) +
                       bundle.config.mae_recon_weight * tape.value_scalar(nodes.mae)) /
                      lay.d_amb;
        out.zdot += tape.value_scalar(nodes.zdot) / lay.d_lat;
        seeds.clear();
        seeds.push_back({nodes.mse, weights.lambda1 / (b * static_cast<double>(lay.d_amb))});
        seeds.push_back({nodes.mae, weights.lambda1 * bundle.config.mae_recon_weight /
                                        (b * static_cast<double>(lay.d_amb))});
        seeds.push_back({nodes.zdot, weights.lambda3 / (b * static_cast<double>(lay.d_lat))});
        if (nodes.symp >= 0) {
            out.symp += tape.value_scalar(nodes.symp);
            seeds.push_back({nodes.symp, lambda2 / b});
        }
        tape.backward(seeds);
    }
    out.encdec /= b;
    out.symp /= b;
    out.zdot /= b;
    const double pen_w = bundle.config.param_penalty_weight;
    out.zdot += dyn_penalty(store, lay, pen_w);
    if (lay.dyn_count > 0 && pen_w > 0.0) {
        const auto dyn = store.values.segment(lay.dyn_off, lay.dyn_count).array();
        store.grads.segment(lay.dyn_off, lay.dyn_count).array() +=
            weights.lambda3 * pen_w / lay.dyn_count * dyn.sign();
    }
    out.total = weights.lambda1 * out.encdec + lambda2 * out.symp + weights.lambda3 * out.zdot;
    return {out, store.grads};
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct BatchSums {
    double mse = 0.0;
    double mae = 0.0;
    double symp = 0.0;
    double zdot = 0.0;

    BatchSums& operator+=(const BatchSums& o) {
        mse += o.mse;
        mae += o.mae;
        symp += o.symp;
        zdot += o.zdot;
        return *this;
    }
};

struct Seeds {
    double mse = 0.0;
    double mae = 0.0;
    double symp = 0.0;
    double zdot = 0.0;
};

BatchSums run_samples(nn::Tape& tape, const Layout& lay, const Mat& xs, const Mat& xdots,
                      const std::vector<int>& idx, int begin, int end, const Seeds& seeds) {
    BatchSums sums;
    std::vector<std::pair<int, double>> seed_list;
    for (int i = begin; i < end; ++i) {
        tape.reset();
        const int col = idx[i];
        const SampleNodes nodes = emit_sample(tape, lay, xs.col(col), xdots.col(col));
        sums.mse += tape.value_scalar(nodes.mse);
        sums.mae += tape.value_scalar(nodes.mae);
        sums.zdot += tape.value_scalar(nodes.zdot);
        seed_list.clear();
        seed_list.push_back({nodes.mse, seeds.mse});
        seed_list.push_back({nodes.mae, seeds.mae});
        seed_list.push_back({nodes.zdot, seeds.zdot});
        if (nodes.symp >= 0) {
            sums.symp += tape.value_scalar(nodes.symp);
            seed_list.push_back({nodes.symp, seeds.symp});
        }
        tape.backward(seed_list);
    }
    return sums;
}

class Adam {
public:
    Adam(int n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_(Vec::Zero(n)), v_(Vec::Zero(n)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(Vec& theta, const Vec& grad, double lr, double weight_decay, int decay_count) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        theta.array() -= lr * (m_ / bc1).array() / ((v_ / bc2).array().sqrt() + eps_);
        if (weight_decay > 0.0 && decay_count > 0)
            theta.head(decay_count) -= lr * weight_decay * theta.head(decay_count);
    }

private:
    Vec m_, v_;
    double beta1_, beta2_, eps_;
    int t_ = 0;
};

void check_structure(const nn::ParamStore& store, const Layout& lay) {
    quadham::QuadHamParams p(lay.d_lat);
    const double* d = store.values.data() + lay.dyn_off;
    p.alpha = Eigen::Map<const Vec>(d, lay.d_lat);
    p.s_upper = Eigen::Map<const Vec>(d + lay.d_lat, quadham::QuadHamParams::s_size(lay.d_lat));
    p.t_unique = Eigen::Map<const Vec>(d + lay.d_lat + quadham::QuadHamParams::s_size(lay.d_lat),
                                       quadham::QuadHamParams::t_size(lay.d_lat));
    const auto check = quadham::structure_check(p);
    if (!check.ok)
        throw NumericError("latent dynamics left the Hamiltonian parametrization (residuals " +
                           std::to_string(check.residual_b) + ", " +
                           std::to_string(check.residual_c) + ")");
}

}  // namespace

TrainResult train(const integrators::Dataset& dataset, const TrainConfig& config,
                  const LossWeights& weights) {
    config.validate();
    if (dataset.trajectories.empty()) throw ConfigError("train: dataset is empty");
    for (const auto& traj : dataset.trajectories)
        if (!traj.has_derivs())
            throw ConfigError("train: dataset lacks time-derivative columns (xdot)");

    const int d_amb = static_cast<int>(dataset.trajectories.front().states.rows());
    const Layout lay = make_layout(config.mode, d_amb, config);

    // Pool snapshots across trajectories; normalize if requested.
    const Eigen::Index m_total = dataset.total_samples();
    Mat xs(d_amb, m_total);
    Mat xdots(d_amb, m_total);
    Eigen::Index c = 0;
    for (const auto& traj : dataset.trajectories) {
        xs.middleCols(c, traj.samples()) = traj.states;
        xdots.middleCols(c, traj.samples()) = traj.derivs;
        c += traj.samples();
    }
    std::optional<integrators::NormalizationRecord> norm;
    if (config.normalization_enabled()) {
        norm = dataset.normalization ? *dataset.normalization
                                     : integrators::compute_normalization(dataset);
        for (Eigen::Index i = 0; i < m_total; ++i) {
            xs.col(i) = norm->normalize_state(xs.col(i));
            xdots.col(i) = norm->normalize_deriv(xdots.col(i));
        }
    }

    nn::ParamStore store;
    store.allocate(lay.dyn_off + lay.dyn_count);
    Rng rng(config.seed);
    lay.encoder.init_params(store.values.data() + lay.enc_off, rng);
    lay.decoder.init_params(store.values.data() + lay.dec_off, rng);
    // latent dynamics start at zero: the trivially stable system

    Adam adam(store.size());
    Rng shuffle_rng(config.seed ^ 0x9d2c5680f1e5eedULL);
    std::vector<int> idx(m_total);
    for (Eigen::Index i = 0; i < m_total; ++i) idx[i] = static_cast<int>(i);

    const int n_threads = std::max(1, std::min<int>(config.threads, config.batch_size));
    nn::Tape tape(&store);
    std::vector<std::unique_ptr<nn::ParamStore>> worker_stores;
    std::vector<std::unique_ptr<nn::Tape>> worker_tapes;
    for (int w = 0; w < n_threads; ++w) {
        worker_stores.push_back(std::make_unique<nn::ParamStore>());
        worker_stores.back()->values = store.values;
        worker_stores.back()->grads = Vec::Zero(store.size());
        worker_tapes.push_back(std::make_unique<nn::Tape>(worker_stores.back().get()));
    }

    const double lambda2 = config.mode == Mode::Koopman ? 0.0 : weights.lambda2;
    const int lr_step = config.effective_lr_step();
    std::vector<EpochLosses> history;
    history.reserve(config.epochs);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.learning_rate * std::pow(config.lr_decay_factor, epoch / lr_step);
        shuffle_rng.shuffle(idx);
        double ep_encdec = 0.0, ep_symp = 0.0, ep_zdot = 0.0, ep_total = 0.0;

        for (Eigen::Index start = 0; start < m_total; start += config.batch_size) {
            const int b = static_cast<int>(std::min<Eigen::Index>(config.batch_size, m_total - start));
            Seeds seeds;
            seeds.mse = weights.lambda1 / (b * static_cast<double>(d_amb));
            seeds.mae = weights.lambda1 * config.mae_recon_weight / (b * static_cast<double>(d_amb));
            seeds.symp = lambda2 / b;
            seeds.zdot = weights.lambda3 / (b * static_cast<double>(lay.d_lat));

            store.zero_grads();
            BatchSums sums;
            if (n_threads == 1 || b == 1) {
                sums = run_samples(tape, lay, xs, xdots, idx, static_cast<int>(start),
                                   static_cast<int>(start) + b, seeds);
            } else {
                const int chunk = (b + n_threads - 1) / n_threads;
                const int n_started = (b + chunk - 1) / chunk;
                std::vector<BatchSums> partial(n_started);
                std::vector<std::thread> pool;
                for (int w = 0; w < n_started; ++w) {
                    const int lo = static_cast<int>(start) + w * chunk;
                    const int hi = std::min(static_cast<int>(start) + b, lo + chunk);
                    worker_stores[w]->values = store.values;
                    worker_stores[w]->zero_grads();
                    pool.emplace_back([&, w, lo, hi] {
                        partial[w] = run_samples(*worker_tapes[w], lay, xs, xdots, idx, lo, hi, seeds);
                    });
                }
                for (auto& th : pool) th.join();
                for (int w = 0; w < n_started; ++w) {
                    store.grads += worker_stores[w]->grads;
                    sums += partial[w];
                }
            }

            const double pen = dyn_penalty(store, lay, config.param_penalty_weight);
            if (lay.dyn_count > 0 && config.param_penalty_weight > 0.0) {
                const auto dyn = store.values.segment(lay.dyn_off, lay.dyn_count).array();
                store.grads.segment(lay.dyn_off, lay.dyn_count).array() +=
                    weights.lambda3 * config.param_penalty_weight / lay.dyn_count *
                    dyn.sign();
            }

            const double b_encdec = (sums.mse + config.mae_recon_weight * sums.mae) / (b * d_amb);
            const double b_symp = sums.symp / b;
            const double b_zdot = sums.zdot / (b * static_cast<double>(lay.d_lat)) + pen;
            const double b_total = weights.lambda1 * b_encdec + lambda2 * b_symp +
                                   weights.lambda3 * b_zdot;
            if (!std::isfinite(b_total)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch + 1 << ", batch "
                    << start / config.batch_size + 1 << " (L_encdec=" << b_encdec
                    << ", L_symp=" << b_symp << ", L_zdot=" << b_zdot << ")";
                throw NumericError(msg.str());
            }

            adam.step(store.values, store.grads, lr, config.weight_decay, lay.dyn_off);
            if (config.mode != Mode::Koopman) check_structure(store, lay);

            ep_encdec += b_encdec * b;
            ep_symp += b_symp * b;
            ep_zdot += b_zdot * b;
            ep_total += b_total * b;
        }

        EpochLosses ep;
        ep.encdec = ep_encdec / static_cast<double>(m_total);
        ep.symp = ep_symp / static_cast<double>(m_total);
        ep.zdot = ep_zdot / static_cast<double>(m_total);
        ep.total = ep_total / static_cast<double>(m_total);
        history.push_back(ep);
        if (config.stop_tolerance > 0.0 && ep.total < config.stop_tolerance) break;
    }

    TrainResult result;
    result.bundle.mode = config.mode;
    result.bundle.system = dataset.system;
    result.bundle.normalization = norm;
    result.bundle.encoder = lay.encoder;
    result.bundle.decoder = lay.decoder;
    result.bundle.net_params = store.values.head(lay.dyn_off);
    result.bundle.config = config;
    result.bundle.weights = weights;
    if (config.mode == Mode::Koopman) {
        result.bundle.koopman =
            Eigen::Map<const Mat>(store.values.data() + lay.dyn_off, lay.d_lat, lay.d_lat);
        result.bundle.dyn = quadham::QuadHamParams(lay.d_lat);
    } else {
        quadham::QuadHamParams p(lay.d_lat);
        const double* d = store.values.data() + lay.dyn_off;
        p.alpha = Eigen::Map<const Vec>(d, lay.d_lat);
        p.s_upper = Eigen::Map<const Vec>(d + lay.d_lat, quadham::QuadHamParams::s_size(lay.d_lat));
        p.t_unique = Eigen::Map<const Vec>(
            d + lay.d_lat + quadham::QuadHamParams::s_size(lay.d_lat),
            quadham::QuadHamParams::t_size(lay.d_lat));
        result.bundle.dyn = p;
    }
    result.history = std::move(history);
    return result;
}

TrainResult train_koopman(const integrators::Dataset& dataset, const TrainConfig& config) {
    TrainConfig cfg = config;
    cfg.mode = Mode::Koopman;
    return train(dataset, cfg, LossWeights::defaults(Mode::Lifting));
}

void write_history_csv(const std::vector<EpochLosses>& history, const std::string& path) {
    std::string out = "epoch,L_encdec,L_symp,L_zdot,total\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += io::format_double(history[i].encdec);
        out += ',';
        out += io::format_double(history[i].symp);
        out += ',';
        out += io::format_double(history[i].zdot);
        out += ',';
        out += io::format_double(history[i].total);
        out += '\n';
    }
    io::write_text_file(path, out);
}

}  // namespace hamlift::training
