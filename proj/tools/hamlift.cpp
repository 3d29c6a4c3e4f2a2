#include "hamlift/bundle_io.hpp"
#include "hamlift/config.hpp"
#include "hamlift/dataset_io.hpp"
#include "hamlift/evaluation.hpp"
#include "hamlift/io_util.hpp"
#include "hamlift/training.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace hamlift;

cli::RunConfig load_run_config(const std::string& config_file, const std::string& preset) {
    if (config_file.empty() == preset.empty())
        throw ConfigError("provide exactly one of --config or --preset");
    const auto path = config_file.empty() ? cli::preset_path(preset) : std::filesystem::path(config_file);
    return cli::load_config_file(path);
}

std::vector<Vec> initial_conditions(const cli::RunConfig& cfg, int count, std::uint64_t seed) {
    if (cfg.data.ic == "sech") return {models::sech_initial_condition(cfg.system)};
    const int dim = cfg.system.dimension();
    const auto box = models::Box::square(dim, cfg.data.bounds_lo, cfg.data.bounds_hi);
    const models::EnergyWindow window{cfg.data.energy_lo, cfg.data.energy_hi};
    return models::sample_initial_conditions(cfg.system, count, box, window, seed,
                                             cfg.data.reject_cap);
}

int cmd_generate(const cli::RunConfig& cfg) {
    const auto ics = initial_conditions(cfg, cfg.data.n_trajectories, cfg.data.seed);
    integrators::IntegratorConfig icfg;
    icfg.dt = cfg.data.effective_dt();
    icfg.newton_tol = cfg.data.newton_tol;
    const double t_end = cfg.data.steps() * icfg.dt;
    integrators::Dataset ds = integrators::generate_dataset(cfg.system, ics, t_end, icfg);
    ds.seed = cfg.data.seed;
    const auto dir = cli::resolve_output(cfg.paths.dataset);
    io::write_dataset(ds, dir);

    double h_min = std::numeric_limits<double>::infinity();
    double h_max = -h_min;
    for (const Vec& x0 : ics) {
        const double h = models::hamiltonian(cfg.system, x0);
        h_min = std::min(h_min, h);
        h_max = std::max(h_max, h);
    }
    std::printf("wrote %zu trajectories x %ld samples (dim %d) to %s\n", ds.trajectories.size(),
                static_cast<long>(ds.trajectories.front().samples()), cfg.system.dimension(),
                dir.string().c_str());
    std::printf("initial energies in [%g, %g], dt = %g\n", h_min, h_max, icfg.dt);
    return 0;
}

int cmd_train(const cli::RunConfig& cfg) {
    const auto ds = io::read_dataset(cli::resolve_output(cfg.paths.dataset));
    const auto result = training::train(ds, cfg.train, cfg.weights());
    const auto bundle_path = cli::resolve_output(cfg.paths.bundle);
    io::save_bundle(result.bundle, bundle_path);
    training::write_history_csv(result.history, cli::resolve_output(cfg.paths.history).string());
    const auto& last = result.history.back();
    std::printf("trained %s model for %zu epochs\n", training::mode_name(cfg.train.mode).c_str(),
                result.history.size());
    std::printf("final losses: L_encdec = %.6g, L_symp = %.6g, L_zdot = %.6g, total = %.6g\n",
                last.encdec, last.symp, last.zdot, last.total);
    std::printf("bundle written to %s\n", bundle_path.string().c_str());
    return 0;
}

int cmd_eval(const cli::RunConfig& cfg) {
    const auto bundle = io::load_bundle(cli::resolve_output(cfg.paths.bundle));
    evaluation::EvalReport report;
    report.config_hash = cli::config_hash(cfg.source_text);

    integrators::IntegratorConfig rcfg;  // latent rollouts
    rcfg.newton_tol = cfg.eval.newton_tol;
    integrators::IntegratorConfig tcfg;  // ground-truth reference
    tcfg.newton_tol = cfg.data.newton_tol;

    if (!cfg.eval.trajectory_csv.empty()) {
        const auto traj = io::read_trajectory_csv(cfg.eval.trajectory_csv);
        if (traj.states.rows() != bundle.ambient_dim())
            throw ConfigError("external trajectory dimension does not match the bundle");
        if (traj.samples() < 2)
            throw ConfigError("external trajectory needs at least two samples");
        rcfg.dt = traj.times[1] - traj.times[0];
        report.trajectories.push_back(evaluation::evaluate_trajectory(bundle, traj, rcfg));
    } else {
        const double dt = cfg.eval.dt > 0.0 ? cfg.eval.dt : cfg.data.effective_dt();
        const double horizon = cfg.eval.horizon > 0.0 ? cfg.eval.horizon : 2.0 * cfg.data.t_final;
        rcfg.dt = dt;
        tcfg.dt = dt;
        const std::uint64_t seed = cfg.eval.seed ? *cfg.eval.seed : cfg.data.seed + 1000;
        const int count = cfg.data.ic == "sech" ? 1 : cfg.eval.n_test_ics;
        const auto ics = initial_conditions(cfg, count, seed);
        const auto sys = integrators::ode_from_system(bundle.system);
        for (const Vec& x0 : ics) {
            const auto truth = integrators::integrate(sys, x0, horizon, tcfg);
            report.trajectories.push_back(evaluation::evaluate_trajectory(bundle, truth, rcfg));
        }
    }

    const auto dir = cli::resolve_output(cfg.paths.report);
    evaluation::export_report(report, dir);
    double mae = 0.0;
    for (const auto& tr : report.trajectories) mae += tr.metrics.mae;
    std::printf("evaluated %zu trajectories, mean MAE = %.6g; report in %s\n",
                report.trajectories.size(),
                report.trajectories.empty() ? 0.0 : mae / report.trajectories.size(),
                dir.string().c_str());
    return 0;
}

int cmd_inspect(const std::string& path_str) {
    namespace fs = std::filesystem;
    const fs::path path(path_str);
    if (fs::is_directory(path) && fs::exists(path / "manifest.json")) {
        const auto ds = io::read_dataset(path);
        std::printf("dataset: system = %s, dim = %d, trajectories = %zu\n",
                    models::kind_name(ds.system.kind).c_str(), ds.system.dimension(),
                    ds.trajectories.size());
        std::printf("dt = %g, seed = %llu, samples = %ld\n", ds.dt,
                    static_cast<unsigned long long>(ds.seed), static_cast<long>(ds.total_samples()));
        double h_min = std::numeric_limits<double>::infinity(), h_max = -h_min, h_sum = 0.0;
        Eigen::Index n = 0;
        for (const auto& traj : ds.trajectories)
            for (Eigen::Index k = 0; k < traj.samples(); ++k) {
                const double h = models::hamiltonian(ds.system, traj.states.col(k));
                h_min = std::min(h_min, h);
                h_max = std::max(h_max, h);
                h_sum += h;
                ++n;
            }
        std::printf("energy: min = %g, max = %g, mean = %g\n", h_min, h_max, h_sum / n);
        return 0;
    }
    if (fs::is_directory(path) && fs::exists(path / "summary.json")) {
        std::printf("%s", io::read_text_file(path / "summary.json").c_str());
        return 0;
    }
    if (fs::is_regular_file(path)) {
        const auto bundle = io::load_bundle(path);
        std::printf("bundle: mode = %s, ambient dim = %d, latent dim = %d\n",
                    training::mode_name(bundle.mode).c_str(), bundle.ambient_dim(),
                    bundle.latent_dim());
        std::printf("system = %s, network parameters = %ld, normalization = %s\n",
                    models::kind_name(bundle.system.kind).c_str(),
                    static_cast<long>(bundle.net_params.size()),
                    bundle.normalization ? "on" : "off");
        std::printf("training: lr = %g, batch = %d, epochs = %d, seed = %llu\n",
                    bundle.config.learning_rate, bundle.config.batch_size, bundle.config.epochs,
                    static_cast<unsigned long long>(bundle.config.seed));
        if (!bundle.is_koopman()) {
            const auto check = quadham::structure_check(bundle.dyn);
            std::printf("latent structure residuals: B = %.3e, C = %.3e (%s)\n", check.residual_b,
                        check.residual_c, check.ok ? "Hamiltonian" : "VIOLATED");
        } else {
            std::printf("latent dynamics: linear Koopman operator (%d x %d)\n", bundle.latent_dim(),
                        bundle.latent_dim());
        }
        return 0;
    }
    throw IoError("inspect: '" + path_str + "' is not a dataset, bundle, or report");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learn quadratic Hamiltonian latent representations from trajectory data"};
    app.require_subcommand(0, 1);

    bool list_flag = false;
    app.add_flag("--list-presets", list_flag, "list available preset configurations");

    std::string config_file, preset, inspect_path, trajectory_csv;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int epochs_override = 0;
    std::string mode_override;
    double lambda1 = -1.0, lambda2 = -1.0, lambda3 = -1.0;

    auto add_config_opts = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_file, "configuration file");
        sub->add_option("--preset", preset, "named preset configuration");
        sub->add_option("--seed", seed_override, "override the section seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* gen = app.add_subcommand("generate", "integrate a dataset and write CSVs + manifest");
    add_config_opts(gen);

    auto* train = app.add_subcommand("train", "train a model on a generated dataset");
    add_config_opts(train);
    train->add_option("--mode", mode_override, "lifting | reduction | koopman");
    train->add_option("--epochs", epochs_override, "override epoch count");
    train->add_option("--lambda1", lambda1, "override loss weight lambda1");
    train->add_option("--lambda2", lambda2, "override loss weight lambda2 (0 = ablation)");
    train->add_option("--lambda3", lambda3, "override loss weight lambda3");

    auto* eval = app.add_subcommand("eval", "roll out a trained bundle and export reports");
    add_config_opts(eval);
    eval->add_option("--trajectory", trajectory_csv, "external trajectory CSV (evaluation only)");

    auto* inspect = app.add_subcommand("inspect", "print a summary of a dataset/bundle/report");
    inspect->add_option("path", inspect_path, "path to inspect")->required();

    auto* list = app.add_subcommand("list-presets", "list available preset configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list_flag || list->parsed()) {
            for (const auto& name : hamlift::cli::list_presets()) std::printf("%s\n", name.c_str());
            return 0;
        }
        if (inspect->parsed()) return cmd_inspect(inspect_path);
        if (!gen->parsed() && !train->parsed() && !eval->parsed()) {
            std::fputs(app.help().c_str(), stderr);
            return 2;
        }
        hamlift::cli::RunConfig cfg = load_run_config(config_file, preset);
        if (gen->parsed()) {
            if (seed_set) cfg.data.seed = seed_override;
            return cmd_generate(cfg);
        }
        if (train->parsed()) {
            if (seed_set) cfg.train.seed = seed_override;
            if (!mode_override.empty()) cfg.train.mode = hamlift::training::mode_from_name(mode_override);
            if (epochs_override > 0) cfg.train.epochs = epochs_override;
            if (lambda1 >= 0.0) cfg.lambda1 = lambda1;
            if (lambda2 >= 0.0) cfg.lambda2 = lambda2;
            if (lambda3 >= 0.0) cfg.lambda3 = lambda3;
            return cmd_train(cfg);
        }
        if (seed_set) cfg.eval.seed = seed_override;
        if (!trajectory_csv.empty()) cfg.eval.trajectory_csv = trajectory_csv;
        return cmd_eval(cfg);
    } catch (const hamlift::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const hamlift::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const hamlift::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
