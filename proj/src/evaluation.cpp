#include "hamlift/evaluation.hpp"

#include "hamlift/dataset_io.hpp"
#include "hamlift/io_util.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace hamlift::evaluation {

using training::ModelBundle;
using training::Mode;

RolloutResult rollout(const ModelBundle& bundle, const Vec& x0, double T,
                      const integrators::IntegratorConfig& cfg) {
    if (x0.size() != bundle.ambient_dim()) throw ConfigError("rollout: initial state dimension mismatch");
    RolloutResult res;
    const Vec z0 = bundle.encode(x0);
    if (T <= 0.0) {
        res.latent.times = Vec::Zero(1);
        res.latent.states.resize(z0.size(), 1);
        res.latent.states.col(0) = z0;
    } else {
        res.latent = integrators::integrate(bundle.latent_ode(), z0, T, cfg);
    }
    res.decoded.times = res.latent.times;
    res.decoded.states.resize(bundle.ambient_dim(), res.latent.samples());
    for (Eigen::Index k = 0; k < res.latent.samples(); ++k)
        res.decoded.states.col(k) = bundle.decode(res.latent.states.col(k));
    return res;
}

namespace {

double drift(const Vec& h) {
    double d = 0.0;
    for (Eigen::Index k = 0; k < h.size(); ++k) d = std::max(d, std::abs(h[k] - h[0]));
    return d;
}

}  // namespace

HamiltonianTraces hamiltonian_report(const ModelBundle& bundle, const models::SystemSpec& system,
                                     const integrators::Trajectory& truth,
                                     const integrators::Trajectory& latent,
                                     const integrators::Trajectory& decoded) {
    HamiltonianTraces tr;
    tr.h_truth.resize(truth.samples());
    for (Eigen::Index k = 0; k < truth.samples(); ++k)
        tr.h_truth[k] = models::hamiltonian(system, truth.states.col(k));
    tr.h_latent.resize(latent.samples());
    for (Eigen::Index k = 0; k < latent.samples(); ++k)
        tr.h_latent[k] = bundle.latent_energy(latent.states.col(k));
    tr.h_decoded.resize(decoded.samples());
    for (Eigen::Index k = 0; k < decoded.samples(); ++k)
        tr.h_decoded[k] = models::hamiltonian(system, decoded.states.col(k));
    tr.drift_truth = drift(tr.h_truth);
    tr.drift_latent = bundle.is_koopman() ? std::numeric_limits<double>::quiet_NaN()
                                          : drift(tr.h_latent);
    tr.drift_decoded = drift(tr.h_decoded);
    tr.offset = (tr.h_latent.size() > 0 && tr.h_truth.size() > 0) ? tr.h_latent[0] - tr.h_truth[0]
                                                                  : 0.0;
    return tr;
}

SympStats symplecticity_residual(const ModelBundle& bundle, const Mat& points, Mode mode) {
    if (points.cols() == 0) throw ConfigError("symplecticity_residual: no points");
    const bool decoder_side = mode == Mode::Reduction;
    const nn::Net& map = decoder_side ? bundle.decoder : bundle.encoder;
    const double* params = decoder_side ? bundle.decoder_params() : bundle.encoder_params();
    const int small = map.in_dim();
    check_even(small, "symplecticity_residual");
    check_even(map.out_dim(), "symplecticity_residual");
    const Mat j_small = sympl_matrix(small);
    SympStats stats;
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        Vec x = points.col(c);
        if (!decoder_side && bundle.normalization) x = bundle.normalization->normalize_state(x);
        const Mat jac = map.input_jacobian(params, x);
        const double r = (jac.transpose() * sympl_apply_mat(jac) - j_small).norm();
        stats.mean += r;
        stats.max = std::max(stats.max, r);
    }
    stats.mean /= static_cast<double>(points.cols());
    return stats;
}

Metrics error_metrics(const Mat& predicted, const Mat& truth) {
    if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
        throw ConfigError("error_metrics: prediction and truth grids do not match");
    Metrics m;
    m.abs_error = (predicted - truth).cwiseAbs();
    m.mae = m.abs_error.mean();
    m.max_error = m.abs_error.maxCoeff();
    return m;
}

TrajectoryReport evaluate_trajectory(const ModelBundle& bundle,
                                     const integrators::Trajectory& truth,
                                     const integrators::IntegratorConfig& cfg) {
    truth.validate();
    TrajectoryReport rep;
    rep.truth = truth;
    const double T = truth.times[truth.samples() - 1] - truth.times[0];
    RolloutResult roll = rollout(bundle, truth.states.col(0), T, cfg);
    rep.predicted = roll.decoded;
    rep.latent = roll.latent;
    const Eigen::Index n = std::min(rep.predicted.samples(), truth.samples());
    rep.metrics = error_metrics(rep.predicted.states.leftCols(n), truth.states.leftCols(n));
    rep.hams = hamiltonian_report(bundle, bundle.system, truth, rep.latent, rep.predicted);
    rep.symp = bundle.mode == Mode::Reduction
                   ? symplecticity_residual(bundle, rep.latent.states, bundle.mode)
                   : symplecticity_residual(bundle, truth.states, bundle.mode);
    return rep;
}

namespace {

void write_trace_csv(const std::filesystem::path& path, const Vec& times, const Mat& values,
                     const std::string& prefix) {
    std::string out = "t";
    for (Eigen::Index i = 0; i < values.rows(); ++i) out += "," + prefix + std::to_string(i);
    out += '\n';
    for (Eigen::Index k = 0; k < times.size(); ++k) {
        out += io::format_double(times[k]);
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            out += ',';
            out += io::format_double(values(i, k));
        }
        out += '\n';
    }
    io::write_text_file(path, out);
}

}  // namespace

void export_report(const EvalReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    double mae_sum = 0.0;
    double drift_truth = 0.0, drift_latent = 0.0, drift_decoded = 0.0;
    double symp_mean = 0.0, symp_max = 0.0;
    for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
        const TrajectoryReport& tr = report.trajectories[i];
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03zu", i);
        const auto tdir = dir / name;
        std::filesystem::create_directories(tdir, ec);
        write_trace_csv(tdir / "truth.csv", tr.truth.times, tr.truth.states, "x_");
        write_trace_csv(tdir / "predicted.csv", tr.predicted.times, tr.predicted.states, "x_");
        write_trace_csv(tdir / "abs_error.csv", tr.predicted.times.head(tr.metrics.abs_error.cols()),
                        tr.metrics.abs_error, "e_");
        write_trace_csv(tdir / "latent.csv", tr.latent.times, tr.latent.states, "z_");
        {
            std::string out = "t,h_truth,h_latent,h_decoded\n";
            for (Eigen::Index k = 0; k < tr.predicted.times.size(); ++k) {
                out += io::format_double(tr.predicted.times[k]);
                out += ',';
                out += k < tr.hams.h_truth.size() ? io::format_double(tr.hams.h_truth[k]) : "nan";
                out += ',';
                out += k < tr.hams.h_latent.size() ? io::format_double(tr.hams.h_latent[k]) : "nan";
                out += ',';
                out += k < tr.hams.h_decoded.size() ? io::format_double(tr.hams.h_decoded[k]) : "nan";
                out += '\n';
            }
            io::write_text_file(tdir / "hamiltonians.csv", out);
        }
        mae_sum += tr.metrics.mae;
        drift_truth = std::max(drift_truth, tr.hams.drift_truth);
        if (!std::isnan(tr.hams.drift_latent)) drift_latent = std::max(drift_latent, tr.hams.drift_latent);
        drift_decoded = std::max(drift_decoded, tr.hams.drift_decoded);
        symp_mean += tr.symp.mean;
        symp_max = std::max(symp_max, tr.symp.max);
    }

    nlohmann::json summary;
    const auto n = report.trajectories.size();
    summary["n_trajectories"] = n;
    summary["final_mae"] = n ? mae_sum / static_cast<double>(n) : 0.0;
    summary["h_drift_truth"] = drift_truth;
    summary["h_drift_latent"] = drift_latent;
    summary["h_drift_decoded"] = drift_decoded;
    summary["symp_residual_mean"] = n ? symp_mean / static_cast<double>(n) : 0.0;
    summary["symp_residual_max"] = symp_max;
    summary["config_hash"] = report.config_hash;
    io::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace hamlift::evaluation
