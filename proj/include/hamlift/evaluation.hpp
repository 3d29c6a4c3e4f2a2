#pragma once

#include "hamlift/training.hpp"

#include <filesystem>

namespace hamlift::evaluation {

struct HamiltonianTraces {
    Vec h_truth;    // ground-truth H along the reference solution
    Vec h_latent;   // cubic latent H along the latent rollout (NaN for Koopman)
    Vec h_decoded;  // ground-truth H along the decoded rollout
    double drift_truth = 0.0;
    double drift_latent = 0.0;
    double drift_decoded = 0.0;
    double offset = 0.0;  // h_latent(0) - h_truth(0); reported, never penalized
};

struct SympStats {
    double mean = 0.0;
    double max = 0.0;
};

struct Metrics {
    Mat abs_error;
    double mae = 0.0;
    double max_error = 0.0;
};

struct TrajectoryReport {
    integrators::Trajectory truth;
    integrators::Trajectory predicted;
    integrators::Trajectory latent;
    Metrics metrics;
    HamiltonianTraces hams;
    SympStats symp;
};

struct EvalReport {
    std::vector<TrajectoryReport> trajectories;
    std::string config_hash;
};

struct RolloutResult {
    integrators::Trajectory decoded;
    integrators::Trajectory latent;
};

/// Encode x0, integrate the latent dynamics with implicit midpoint, decode
/// every sample. T == 0 returns the single decoded sample.
RolloutResult rollout(const training::ModelBundle& bundle, const Vec& x0, double T,
                      const integrators::IntegratorConfig& cfg);

HamiltonianTraces hamiltonian_report(const training::ModelBundle& bundle,
                                     const models::SystemSpec& system,
                                     const integrators::Trajectory& truth,
                                     const integrators::Trajectory& latent,
                                     const integrators::Trajectory& decoded);

/// Frobenius norm (unsquared) of the symplecticity residual of the encoder
/// (lifting/koopman; points are raw ambient states) or decoder (reduction;
/// points are latent states), evaluated in the trained coordinates.
SympStats symplecticity_residual(const training::ModelBundle& bundle, const Mat& points,
                                 training::Mode mode);

Metrics error_metrics(const Mat& predicted, const Mat& truth);

/// Full per-trajectory pipeline: rollout from the truth trajectory's initial
/// state over its time grid, then metrics, Hamiltonian traces and residuals.
TrajectoryReport evaluate_trajectory(const training::ModelBundle& bundle,
                                     const integrators::Trajectory& truth,
                                     const integrators::IntegratorConfig& cfg);

/// Writes per-trajectory CSV traces (truth, predicted, abs_error,
/// hamiltonians, latent) and an aggregated summary.json.
void export_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace hamlift::evaluation
