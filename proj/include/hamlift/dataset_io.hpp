#pragma once

#include "hamlift/integrators.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>

namespace hamlift::io {

nlohmann::json system_to_json(const models::SystemSpec& system);
models::SystemSpec system_from_json(const nlohmann::json& j);

/// One CSV per trajectory with header t, x_0..x_{d-1}[, xdot_0..xdot_{d-1}]
/// in round-trip double precision, plus manifest.json with the system spec,
/// dt, seed and the normalization record.
void write_dataset(const integrators::Dataset& dataset, const std::filesystem::path& dir);
integrators::Dataset read_dataset(const std::filesystem::path& dir);

void write_trajectory_csv(const integrators::Trajectory& traj, const std::filesystem::path& path,
                          bool include_derivs = true);

/// Accepts external files with the same header; the xdot columns may be
/// absent (such trajectories are usable for evaluation but not training).
integrators::Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace hamlift::io
