#pragma once

#include "hamlift/integrators.hpp"
#include "hamlift/systems.hpp"
#include "hamlift/training.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace hamlift::cli {

struct DataConfig {
    int n_trajectories = 10;
    double t_final = 10.0;
    double dt = 0.0;    // either dt or n_points must be set
    int n_points = 0;   // samples including t = 0
    std::uint64_t seed = 0;
    double bounds_lo = -2.0;
    double bounds_hi = 2.0;
    double energy_lo = -std::numeric_limits<double>::infinity();
    double energy_hi = std::numeric_limits<double>::infinity();
    std::string ic = "random";  // random | sech
    int reject_cap = 100000;
    double newton_tol = 1e-10;

    double effective_dt() const;
    int steps() const;
};

struct EvalConfig {
    double horizon = 0.0;  // 0 -> twice the training horizon
    int n_test_ics = 3;
    std::optional<std::uint64_t> seed;  // default: data seed + 1000
    double dt = 0.0;                    // 0 -> training dt
    double newton_tol = 1e-8;
    std::string trajectory_csv;  // external trajectory for evaluation-only runs
};

struct PathsConfig {
    std::string dataset = "dataset";
    std::string bundle = "bundle.json";
    std::string report = "report";
    std::string history = "history.csv";
};

struct RunConfig {
    models::SystemSpec system;
    DataConfig data;
    training::TrainConfig train;
    std::optional<double> lambda1, lambda2, lambda3;
    EvalConfig eval;
    PathsConfig paths;
    std::string source_text;

    training::LossWeights weights() const;
    void validate() const;
};

/// key = value sections ([system]/[data]/[train]/[eval]/[paths]); '#' starts a
/// comment; unknown sections and keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::filesystem::path& path);

/// Preset names (sorted), from $HAMLIFT_PRESET_DIR or the built-in directory.
std::vector<std::string> list_presets();
std::filesystem::path preset_path(const std::string& name);

/// Output root for relative paths: $HAMLIFT_OUTPUT_ROOT or the working directory.
std::filesystem::path output_root();
std::filesystem::path resolve_output(const std::string& path);

std::string config_hash(const std::string& text);

}  // namespace hamlift::cli
