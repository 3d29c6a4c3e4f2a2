#include "hamlift/config.hpp"

#include "hamlift/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace hamlift::cli {

double DataConfig::effective_dt() const {
    if (dt > 0.0) return dt;
    if (n_points > 1) return t_final / (n_points - 1);
    throw ConfigError("[data]: set either dt > 0 or n_points > 1");
}

int DataConfig::steps() const {
    if (n_points > 1) return n_points - 1;
    return std::max(1, static_cast<int>(std::llround(t_final / effective_dt())));
}

training::LossWeights RunConfig::weights() const {
    training::LossWeights w = training::LossWeights::defaults(train.mode);
    if (lambda1) w.lambda1 = *lambda1;
    if (lambda2) w.lambda2 = *lambda2;
    if (lambda3) w.lambda3 = *lambda3;
    return w;
}

void RunConfig::validate() const {
    train.validate();
    if (system.is_pde()) {
        if (system.grid_n < 3) throw ConfigError("[system]: PDE systems need grid_n >= 3");
        if (system.domain_hi <= system.domain_lo)
            throw ConfigError("[system]: domain_hi must exceed domain_lo");
    }
    if (data.n_trajectories < 1) throw ConfigError("[data]: n_trajectories must be >= 1");
    if (data.t_final <= 0.0) throw ConfigError("[data]: t_final must be positive");
    if (data.ic != "random" && data.ic != "sech")
        throw ConfigError("[data]: ic must be 'random' or 'sech'");
    if (data.ic == "sech" && !system.is_pde())
        throw ConfigError("[data]: sech initial conditions require a PDE system");
    if (lambda1 && *lambda1 < 0.0) throw ConfigError("[train]: lambda1 must be nonnegative");
    if (lambda2 && *lambda2 < 0.0) throw ConfigError("[train]: lambda2 must be nonnegative");
    if (lambda3 && *lambda3 < 0.0) throw ConfigError("[train]: lambda3 must be nonnegative");
    data.effective_dt();
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        return io::parse_double(v);
    } catch (const IoError&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& key) {
    const double d = to_double(v, key);
    const int i = static_cast<int>(std::llround(d));
    if (std::abs(d - i) > 1e-12) throw ConfigError("config: key '" + key + "' expects an integer");
    return i;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const std::uint64_t r = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

std::vector<int> to_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_int(item, key));
    }
    if (out.empty()) throw ConfigError("config: key '" + key + "' expects a comma-separated list");
    return out;
}

training::Normalize to_normalize(const std::string& v) {
    if (v == "auto") return training::Normalize::Auto;
    if (v == "on") return training::Normalize::On;
    if (v == "off") return training::Normalize::Off;
    throw ConfigError("config: normalize must be auto|on|off, got '" + v + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    cfg.source_text = text;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": malformed section");
            section = line.substr(1, line.size() - 2);
            if (section != "system" && section != "data" && section != "train" &&
                section != "eval" && section != "paths")
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": key outside a section");

        if (section == "system") {
            if (key == "kind") cfg.system.kind = models::kind_from_name(val);
            else if (key == "grid_n") cfg.system.grid_n = to_int(val, key);
            else if (key == "c") cfg.system.wave_c = to_double(val, key);
            else if (key == "alpha") cfg.system.nls_alpha = to_double(val, key);
            else if (key == "beta") cfg.system.nls_beta = to_double(val, key);
            else if (key == "domain_lo") cfg.system.domain_lo = to_double(val, key);
            else if (key == "domain_hi") cfg.system.domain_hi = to_double(val, key);
            else throw ConfigError("config: unknown key '" + key + "' in [system]");
        } else if (section == "data") {
            if (key == "n_trajectories") cfg.data.n_trajectories = to_int(val, key);
            else if (key == "t_final") cfg.data.t_final = to_double(val, key);
            else if (key == "dt") cfg.data.dt = to_double(val, key);
            else if (key == "n_points") cfg.data.n_points = to_int(val, key);
            else if (key == "seed") cfg.data.seed = to_u64(val, key);
            else if (key == "bounds_lo") cfg.data.bounds_lo = to_double(val, key);
            else if (key == "bounds_hi") cfg.data.bounds_hi = to_double(val, key);
            else if (key == "energy_lo") cfg.data.energy_lo = to_double(val, key);
            else if (key == "energy_hi") cfg.data.energy_hi = to_double(val, key);
            else if (key == "ic") cfg.data.ic = val;
            else if (key == "reject_cap") cfg.data.reject_cap = to_int(val, key);
            else if (key == "newton_tol") cfg.data.newton_tol = to_double(val, key);
            else throw ConfigError("config: unknown key '" + key + "' in [data]");
        } else if (section == "train") {
            if (key == "mode") cfg.train.mode = training::mode_from_name(val);
            else if (key == "latent_dim") cfg.train.latent_dim = to_int(val, key);
            else if (key == "hidden") cfg.train.hidden = to_int_list(val, key);
            else if (key == "conv_channels") cfg.train.conv_channels = to_int_list(val, key);
            else if (key == "conv_kernel") cfg.train.conv_kernel = to_int(val, key);
            else if (key == "conv_stride") cfg.train.conv_stride = to_int(val, key);
            else if (key == "conv_pad") cfg.train.conv_pad = to_int(val, key);
            else if (key == "conv_out_pad") cfg.train.conv_out_pad = to_int(val, key);
            else if (key == "learning_rate") cfg.train.learning_rate = to_double(val, key);
            else if (key == "batch_size") cfg.train.batch_size = to_int(val, key);
            else if (key == "epochs") cfg.train.epochs = to_int(val, key);
            else if (key == "weight_decay") cfg.train.weight_decay = to_double(val, key);
            else if (key == "lr_decay_factor") cfg.train.lr_decay_factor = to_double(val, key);
            else if (key == "lr_decay_step") cfg.train.lr_decay_step = to_int(val, key);
            else if (key == "seed") cfg.train.seed = to_u64(val, key);
            else if (key == "mae_recon_weight") cfg.train.mae_recon_weight = to_double(val, key);
            else if (key == "param_penalty_weight") cfg.train.param_penalty_weight = to_double(val, key);
            else if (key == "stop_tolerance") cfg.train.stop_tolerance = to_double(val, key);
            else if (key == "normalize") cfg.train.normalize = to_normalize(val);
            else if (key == "threads") cfg.train.threads = to_int(val, key);
            else if (key == "lambda1") cfg.lambda1 = to_double(val, key);
            else if (key == "lambda2") cfg.lambda2 = to_double(val, key);
            else if (key == "lambda3") cfg.lambda3 = to_double(val, key);
            else throw ConfigError("config: unknown key '" + key + "' in [train]");
        } else if (section == "eval") {
            if (key == "horizon") cfg.eval.horizon = to_double(val, key);
            else if (key == "n_test_ics") cfg.eval.n_test_ics = to_int(val, key);
            else if (key == "seed") cfg.eval.seed = to_u64(val, key);
            else if (key == "dt") cfg.eval.dt = to_double(val, key);
            else if (key == "newton_tol") cfg.eval.newton_tol = to_double(val, key);
            else if (key == "trajectory_csv") cfg.eval.trajectory_csv = val;
            else throw ConfigError("config: unknown key '" + key + "' in [eval]");
        } else {  // paths
            if (key == "dataset") cfg.paths.dataset = val;
            else if (key == "bundle") cfg.paths.bundle = val;
            else if (key == "report") cfg.paths.report = val;
            else if (key == "history") cfg.paths.history = val;
            else throw ConfigError("config: unknown key '" + key + "' in [paths]");
        }
    }
    // kind-specific domain defaults when the config leaves them unset
    if (cfg.system.is_pde() && cfg.system.domain_lo == 0.0 && cfg.system.domain_hi == 0.0) {
        const double half = cfg.system.kind == models::SystemKind::LinearWave ? 5.0 : 10.0;
        cfg.system.domain_lo = -half;
        cfg.system.domain_hi = half;
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    return parse_config(io::read_text_file(path));
}

namespace {

std::filesystem::path preset_dir() {
    if (const char* env = std::getenv("HAMLIFT_PRESET_DIR")) return env;
#ifdef HAMLIFT_PRESET_DIR
    return HAMLIFT_PRESET_DIR;
#else
    return "presets";
#endif
}

}  // namespace

std::vector<std::string> list_presets() {
    std::vector<std::string> names;
    const auto dir = preset_dir();
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
        if (entry.path().extension() == ".cfg") names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::filesystem::path preset_path(const std::string& name) {
    const auto p = preset_dir() / (name + ".cfg");
    if (!std::filesystem::exists(p)) {
        std::string known;
        for (const auto& n : list_presets()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
    }
    return p;
}

std::filesystem::path output_root() {
    if (const char* env = std::getenv("HAMLIFT_OUTPUT_ROOT")) return env;
    return ".";
}

std::filesystem::path resolve_output(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return p;
    return output_root() / p;
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hamlift::cli
