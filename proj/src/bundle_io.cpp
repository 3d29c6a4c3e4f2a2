#include "hamlift/bundle_io.hpp"

#include "hamlift/dataset_io.hpp"
#include "hamlift/io_util.hpp"

#include <nlohmann/json.hpp>

namespace hamlift::io {

using nlohmann::json;
using training::Mode;
using training::ModelBundle;

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json net_to_json(const nn::Net& net) {
    json j;
    switch (net.kind()) {
        case nn::NetKind::Mlp:
            j["kind"] = "mlp";
            j["in_dim"] = net.mlp_config().in_dim;
            j["out_dim"] = net.mlp_config().out_dim;
            j["hidden"] = net.mlp_config().hidden;
            return j;
        case nn::NetKind::ConvEncoder:
        case nn::NetKind::ConvDecoder: {
            j["kind"] = net.kind() == nn::NetKind::ConvEncoder ? "conv_encoder" : "conv_decoder";
            const auto& c = net.conv_config();
            j["field_dim"] = c.field_dim;
            j["latent_dim"] = c.latent_dim;
            j["channels"] = c.channels;
            j["kernel"] = c.kernel;
            j["stride"] = c.stride;
            j["pad"] = c.pad;
            j["out_pad"] = c.out_pad;
            return j;
        }
        case nn::NetKind::Identity:
            j["kind"] = "identity";
            j["dim"] = net.identity_dim();
            return j;
        case nn::NetKind::Linear:
            j["kind"] = "linear";
            j["in_dim"] = net.in_dim();
            j["out_dim"] = net.out_dim();
            return j;
    }
    throw IoError("unknown net kind");
}

nn::Net net_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "mlp") {
        nn::MlpConfig cfg;
        cfg.in_dim = j.at("in_dim").get<int>();
        cfg.out_dim = j.at("out_dim").get<int>();
        cfg.hidden = j.at("hidden").get<std::vector<int>>();
        return nn::Net::mlp(cfg);
    }
    if (kind == "conv_encoder" || kind == "conv_decoder") {
        nn::ConvAeConfig cfg;
        cfg.field_dim = j.at("field_dim").get<int>();
        cfg.latent_dim = j.at("latent_dim").get<int>();
        cfg.channels = j.at("channels").get<std::vector<int>>();
        cfg.kernel = j.at("kernel").get<int>();
        cfg.stride = j.at("stride").get<int>();
        cfg.pad = j.at("pad").get<int>();
        cfg.out_pad = j.at("out_pad").get<int>();
        return kind == "conv_encoder" ? nn::Net::conv_encoder(cfg) : nn::Net::conv_decoder(cfg);
    }
    if (kind == "identity") return nn::Net::identity(j.at("dim").get<int>());
    if (kind == "linear")
        return nn::Net::linear(j.at("in_dim").get<int>(), j.at("out_dim").get<int>());
    throw IoError("unknown net kind in bundle: " + kind);
}

std::string normalize_name(training::Normalize n) {
    switch (n) {
        case training::Normalize::Auto: return "auto";
        case training::Normalize::On: return "on";
        case training::Normalize::Off: return "off";
    }
    return "auto";
}

training::Normalize normalize_from_name(const std::string& s) {
    if (s == "auto") return training::Normalize::Auto;
    if (s == "on") return training::Normalize::On;
    if (s == "off") return training::Normalize::Off;
    throw IoError("unknown normalize setting: " + s);
}

json train_config_to_json(const training::TrainConfig& c) {
    json j;
    j["mode"] = training::mode_name(c.mode);
    j["latent_dim"] = c.latent_dim;
    j["hidden"] = c.hidden;
    j["conv_channels"] = c.conv_channels;
    j["conv_kernel"] = c.conv_kernel;
    j["conv_stride"] = c.conv_stride;
    j["conv_pad"] = c.conv_pad;
    j["conv_out_pad"] = c.conv_out_pad;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["weight_decay"] = c.weight_decay;
    j["lr_decay_factor"] = c.lr_decay_factor;
    j["lr_decay_step"] = c.lr_decay_step;
    j["seed"] = c.seed;
    j["mae_recon_weight"] = c.mae_recon_weight;
    j["param_penalty_weight"] = c.param_penalty_weight;
    j["stop_tolerance"] = c.stop_tolerance;
    j["normalize"] = normalize_name(c.normalize);
    j["threads"] = c.threads;
    return j;
}

training::TrainConfig train_config_from_json(const json& j) {
    training::TrainConfig c;
    c.mode = training::mode_from_name(j.at("mode").get<std::string>());
    c.latent_dim = j.at("latent_dim").get<int>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    c.conv_kernel = j.at("conv_kernel").get<int>();
    c.conv_stride = j.at("conv_stride").get<int>();
    c.conv_pad = j.at("conv_pad").get<int>();
    c.conv_out_pad = j.at("conv_out_pad").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    c.lr_decay_step = j.at("lr_decay_step").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.mae_recon_weight = j.at("mae_recon_weight").get<double>();
    c.param_penalty_weight = j.at("param_penalty_weight").get<double>();
    c.stop_tolerance = j.at("stop_tolerance").get<double>();
    c.normalize = normalize_from_name(j.at("normalize").get<std::string>());
    c.threads = j.at("threads").get<int>();
    return c;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    json j;
    j["format"] = "hamlift-bundle";
    j["version"] = 1;
    j["mode"] = training::mode_name(bundle.mode);
    j["system"] = system_to_json(bundle.system);
    if (bundle.normalization) {
        j["normalization"]["mu"] = to_std(bundle.normalization->mu);
        j["normalization"]["sigma"] = to_std(bundle.normalization->sigma);
    } else {
        j["normalization"] = nullptr;
    }
    j["encoder"] = net_to_json(bundle.encoder);
    j["decoder"] = net_to_json(bundle.decoder);
    if (bundle.is_koopman()) {
        j["dynamics"]["kind"] = "koopman";
        j["dynamics"]["dim"] = bundle.latent_dim();
        j["dynamics"]["k"] = std::vector<double>(
            bundle.koopman.data(), bundle.koopman.data() + bundle.koopman.size());
    } else {
        j["dynamics"]["kind"] = "quadham";
        j["dynamics"]["dim"] = bundle.dyn.dim;
        j["dynamics"]["alpha"] = to_std(bundle.dyn.alpha);
        j["dynamics"]["s_upper"] = to_std(bundle.dyn.s_upper);
        j["dynamics"]["t_unique"] = to_std(bundle.dyn.t_unique);
    }
    j["train_config"] = train_config_to_json(bundle.config);
    j["weights"] = {{"lambda1", bundle.weights.lambda1},
                    {"lambda2", bundle.weights.lambda2},
                    {"lambda3", bundle.weights.lambda3}};
    j["net_params_b64"] = base64_encode(bundle.net_params.data(), bundle.net_params.size());
    write_text_file(path, j.dump(2) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw IoError("cannot parse bundle: " + std::string(e.what()));
    }
    if (j.value("format", "") != "hamlift-bundle")
        throw IoError("not a hamlift bundle: " + path.string());
    if (j.value("version", 0) != 1)
        throw IoError("unsupported bundle format version " + std::to_string(j.value("version", 0)));
    ModelBundle b;
    b.mode = training::mode_from_name(j.at("mode").get<std::string>());
    b.system = system_from_json(j.at("system"));
    if (!j.at("normalization").is_null()) {
        integrators::NormalizationRecord rec;
        rec.mu = from_std(j["normalization"]["mu"].get<std::vector<double>>());
        rec.sigma = from_std(j["normalization"]["sigma"].get<std::vector<double>>());
        b.normalization = rec;
    }
    b.encoder = net_from_json(j.at("encoder"));
    b.decoder = net_from_json(j.at("decoder"));
    const auto& dyn = j.at("dynamics");
    const int dim = dyn.at("dim").get<int>();
    if (dyn.at("kind").get<std::string>() == "koopman") {
        const auto k = dyn.at("k").get<std::vector<double>>();
        if (static_cast<int>(k.size()) != dim * dim) throw IoError("bundle: Koopman block size mismatch");
        b.koopman = Eigen::Map<const Mat>(k.data(), dim, dim);
        b.dyn = quadham::QuadHamParams(dim);
    } else {
        quadham::QuadHamParams p(dim);
        p.alpha = from_std(dyn.at("alpha").get<std::vector<double>>());
        p.s_upper = from_std(dyn.at("s_upper").get<std::vector<double>>());
        p.t_unique = from_std(dyn.at("t_unique").get<std::vector<double>>());
        if (p.alpha.size() != dim || p.s_upper.size() != quadham::QuadHamParams::s_size(dim) ||
            p.t_unique.size() != quadham::QuadHamParams::t_size(dim))
            throw IoError("bundle: latent dynamics block size mismatch");
        b.dyn = p;
    }
    b.config = train_config_from_json(j.at("train_config"));
    b.weights.lambda1 = j.at("weights").at("lambda1").get<double>();
    b.weights.lambda2 = j.at("weights").at("lambda2").get<double>();
    b.weights.lambda3 = j.at("weights").at("lambda3").get<double>();
    const auto params = base64_decode_doubles(j.at("net_params_b64").get<std::string>());
    b.net_params = from_std(params);
    const int expected = b.encoder.n_params() + b.decoder.n_params();
    if (b.net_params.size() != expected)
        throw IoError("bundle: parameter blob has " + std::to_string(b.net_params.size()) +
                      " doubles, architecture expects " + std::to_string(expected));
    return b;
}

}  // namespace hamlift::io
