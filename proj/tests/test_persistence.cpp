#include "hamlift/bundle_io.hpp"
#include "hamlift/dataset_io.hpp"
#include "hamlift/io_util.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <filesystem>

using namespace hamlift;

namespace {

std::filesystem::path temp_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("dataset round-trips losslessly through CSV") {
    const auto spec = models::SystemSpec::oscillator();
    const auto box = models::Box::square(2, -1.0, 1.0);
    const auto ics =
        models::sample_initial_conditions(spec, 3, box, models::EnergyWindow{0.0, 1.0}, 77);
    integrators::IntegratorConfig cfg;
    cfg.dt = 0.14;
    auto ds = integrators::generate_dataset(spec, ics, 2.0, cfg);
    ds.seed = 77;

    const auto dir = temp_dir("hamlift_ds_roundtrip");
    io::write_dataset(ds, dir);
    const auto back = io::read_dataset(dir);

    CHECK(back.system.kind == ds.system.kind);
    CHECK(back.dt == ds.dt);
    CHECK(back.seed == ds.seed);
    REQUIRE(back.trajectories.size() == ds.trajectories.size());
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        CHECK((back.trajectories[i].times - ds.trajectories[i].times).norm() == 0.0);
        CHECK((back.trajectories[i].states - ds.trajectories[i].states).norm() == 0.0);
        CHECK((back.trajectories[i].derivs - ds.trajectories[i].derivs).norm() == 0.0);
    }
    REQUIRE(back.normalization.has_value());
    CHECK((back.normalization->mu - ds.normalization->mu).norm() == 0.0);
    CHECK((back.normalization->sigma - ds.normalization->sigma).norm() == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory CSV without derivative columns") {
    integrators::Trajectory traj;
    traj.times = Vec::LinSpaced(5, 0.0, 1.0);
    traj.states.resize(2, 5);
    traj.states.setRandom();
    const auto dir = temp_dir("hamlift_traj_noderiv");
    const auto path = dir / "external.csv";
    io::write_trajectory_csv(traj, path, false);
    const auto back = io::read_trajectory_csv(path);
    CHECK_FALSE(back.has_derivs());
    CHECK((back.states - traj.states).norm() == 0.0);

    // the trainer rejects datasets without xdot
    integrators::Dataset ds;
    ds.system = models::SystemSpec::pendulum();
    ds.trajectories.push_back(back);
    training::TrainConfig cfg;
    cfg.latent_dim = 2;
    cfg.hidden = {4};
    CHECK_THROWS_AS(training::train(ds, cfg, training::LossWeights::defaults(training::Mode::Lifting)),
                    ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("external wooden-clock-format file ingests for evaluation") {
    // synthesized t, angle, angular-velocity file in the documented header format
    const auto dir = temp_dir("hamlift_external");
    const auto path = dir / "clock.csv";
    std::string text = "t,x_0,x_1\n";
    for (int k = 0; k < 20; ++k) {
        const double t = 0.0331 * k;
        text += io::format_double(t) + "," + io::format_double(0.4 * std::cos(t)) + "," +
                io::format_double(-0.4 * std::sin(t)) + "\n";
    }
    io::write_text_file(path, text);
    const auto traj = io::read_trajectory_csv(path);
    CHECK(traj.samples() == 20);
    CHECK(traj.states.rows() == 2);
    CHECK_FALSE(traj.has_derivs());
    CHECK(traj.states(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
    std::filesystem::remove_all(dir);
}

TEST_CASE("malformed trajectory files are rejected") {
    const auto dir = temp_dir("hamlift_bad_csv");
    SUBCASE("wrong header") {
        io::write_text_file(dir / "bad.csv", "time,q,p\n0,1,2\n");
        CHECK_THROWS_AS(io::read_trajectory_csv(dir / "bad.csv"), IoError);
    }
    SUBCASE("ragged row") {
        io::write_text_file(dir / "bad.csv", "t,x_0,x_1\n0,1\n");
        CHECK_THROWS_AS(io::read_trajectory_csv(dir / "bad.csv"), IoError);
    }
    SUBCASE("non-numeric field") {
        io::write_text_file(dir / "bad.csv", "t,x_0,x_1\n0,one,2\n0.1,1,2\n");
        CHECK_THROWS_AS(io::read_trajectory_csv(dir / "bad.csv"), IoError);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("bundle round-trips bit-exactly") {
    // short real training run so every field is populated
    integrators::Dataset ds;
    ds.system = models::SystemSpec::pendulum();
    integrators::Trajectory traj;
    traj.times = Vec::LinSpaced(10, 0.0, 1.0);
    traj.states.resize(2, 10);
    traj.derivs.resize(2, 10);
    for (int k = 0; k < 10; ++k) {
        traj.states.col(k) << std::sin(0.3 * k), std::cos(0.3 * k);
        traj.derivs.col(k) = models::rhs(ds.system, traj.states.col(k));
    }
    ds.trajectories.push_back(traj);

    training::TrainConfig cfg;
    cfg.mode = training::Mode::Lifting;
    cfg.latent_dim = 4;
    cfg.hidden = {6, 6, 6};
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 5;
    cfg.epochs = 3;
    cfg.seed = 99;

    const auto dir = temp_dir("hamlift_bundle_roundtrip");

    SUBCASE("quadratic-Hamiltonian bundle") {
        const auto result = training::train(ds, cfg, training::LossWeights::defaults(cfg.mode));
        const auto path = dir / "bundle.json";
        io::save_bundle(result.bundle, path);
        const auto back = io::load_bundle(path);
        CHECK((back.net_params - result.bundle.net_params).norm() == 0.0);
        CHECK((back.dyn.alpha - result.bundle.dyn.alpha).norm() == 0.0);
        CHECK((back.dyn.s_upper - result.bundle.dyn.s_upper).norm() == 0.0);
        CHECK((back.dyn.t_unique - result.bundle.dyn.t_unique).norm() == 0.0);
        CHECK(back.mode == result.bundle.mode);
        CHECK(back.config.seed == cfg.seed);
        CHECK(back.encoder.kind() == nn::NetKind::Mlp);
        // loaded bundle computes identical losses
        Mat xs = traj.states.leftCols(4);
        Mat xd = traj.derivs.leftCols(4);
        const auto a = training::total_loss(result.bundle, xs, xd, result.bundle.weights);
        const auto b = training::total_loss(back, xs, xd, back.weights);
        CHECK(a.total == b.total);
    }
    SUBCASE("koopman bundle") {
        const auto result = training::train_koopman(ds, cfg);
        const auto path = dir / "koopman.json";
        io::save_bundle(result.bundle, path);
        const auto back = io::load_bundle(path);
        CHECK(back.is_koopman());
        CHECK((back.koopman - result.bundle.koopman).norm() == 0.0);
        CHECK((back.net_params - result.bundle.net_params).norm() == 0.0);
    }
    SUBCASE("reduction bundle with normalization") {
        const auto wave = models::SystemSpec::wave(16);
        integrators::IntegratorConfig icfg;
        icfg.dt = 0.1;
        auto wds = integrators::generate_dataset(wave, {models::sech_initial_condition(wave)},
                                                 1.0, icfg);
        training::TrainConfig rcfg;
        rcfg.mode = training::Mode::Reduction;
        rcfg.latent_dim = 2;
        rcfg.conv_channels = {2, 4};
        rcfg.conv_kernel = 3;
        rcfg.conv_pad = 1;
        rcfg.learning_rate = 1e-3;
        rcfg.batch_size = 4;
        rcfg.epochs = 2;
        rcfg.seed = 1;
        const auto result = training::train(wds, rcfg, training::LossWeights::defaults(rcfg.mode));
        const auto path = dir / "reduction.json";
        io::save_bundle(result.bundle, path);
        const auto back = io::load_bundle(path);
        REQUIRE(back.normalization.has_value());
        CHECK((back.normalization->mu - result.bundle.normalization->mu).norm() == 0.0);
        CHECK((back.normalization->sigma - result.bundle.normalization->sigma).norm() == 0.0);
        CHECK(back.encoder.kind() == nn::NetKind::ConvEncoder);
        CHECK((back.net_params - result.bundle.net_params).norm() == 0.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupted and mismatched bundles are rejected") {
    const auto dir = temp_dir("hamlift_bad_bundle");
    SUBCASE("not json") {
        io::write_text_file(dir / "junk.json", "this is not json");
        CHECK_THROWS_AS(io::load_bundle(dir / "junk.json"), IoError);
    }
    SUBCASE("wrong format marker") {
        io::write_text_file(dir / "other.json", "{\"format\": \"something-else\", \"version\": 1}");
        CHECK_THROWS_AS(io::load_bundle(dir / "other.json"), IoError);
    }
    SUBCASE("unsupported version") {
        io::write_text_file(dir / "future.json",
                            "{\"format\": \"hamlift-bundle\", \"version\": 99}");
        CHECK_THROWS_AS(io::load_bundle(dir / "future.json"), IoError);
    }
    SUBCASE("dataset manifest with wrong format") {
        std::filesystem::create_directories(dir / "ds");
        io::write_text_file(dir / "ds" / "manifest.json", "{\"format\": \"nope\", \"version\": 1}");
        CHECK_THROWS_AS(io::read_dataset(dir / "ds"), IoError);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("base64 double payloads round-trip") {
    Rng rng(123);
    std::vector<double> values(17);
    for (auto& v : values) v = rng.uniform(-1e10, 1e10);
    values[0] = 0.1 + 0.2;  // classic non-representable sum
    const std::string text = io::base64_encode(values.data(), values.size());
    const auto back = io::base64_decode_doubles(text);
    REQUIRE(back.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(back[i] == values[i]);
}
