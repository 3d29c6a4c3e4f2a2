#include "hamlift/evaluation.hpp"

#include "hamlift/io_util.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <filesystem>

using namespace hamlift;
using namespace hamlift::evaluation;
using training::ModelBundle;
using training::Mode;

namespace {

quadham::QuadHamParams harmonic_latent() {
    quadham::QuadHamParams p(2);
    p.s(0, 0) = 1.0;
    p.s(1, 1) = 1.0;  // H = (q^2 + p^2)/2, zdot = (p, -q)
    return p;
}

// Perturbed harmonic well; bounded orbits with a genuinely cubic energy.
quadham::QuadHamParams bounded_cubic() {
    quadham::QuadHamParams p(2);
    p.s(0, 0) = 1.0;
    p.s(1, 1) = 1.0;
    p.t(0, 0, 0) = 0.3;
    p.t(0, 0, 1) = -0.2;
    return p;
}

Mat random_points(Rng& rng, int dim, int count) {
    Mat pts(dim, count);
    for (int c = 0; c < count; ++c) pts.col(c) = testutil::random_vec(rng, dim);
    return pts;
}

}  // namespace

TEST_CASE("rollout with zero horizon decodes the encoded state") {
    const auto bundle =
        ModelBundle::identity_bundle(models::SystemSpec::pendulum(), harmonic_latent());
    Vec x0(2);
    x0 << 0.4, -0.2;
    integrators::IntegratorConfig cfg;
    cfg.dt = 0.1;
    const auto roll = rollout(bundle, x0, 0.0, cfg);
    CHECK(roll.decoded.samples() == 1);
    CHECK((roll.decoded.states.col(0) - x0).norm() == 0.0);
}

TEST_CASE("identity bundle reproduces the reference trajectory exactly") {
    const auto dyn = bounded_cubic();
    const auto bundle = ModelBundle::identity_bundle(models::SystemSpec::pendulum(), dyn);
    integrators::IntegratorConfig cfg;
    cfg.dt = 0.05;
    cfg.newton_tol = 1e-12;
    Vec x0(2);
    x0 << 0.3, 0.2;
    const auto truth = integrators::integrate(quadham::ode_from_quadham(dyn), x0, 3.0, cfg);
    const auto rep = evaluate_trajectory(bundle, truth, cfg);
    CHECK(rep.metrics.mae < 1e-12);
    CHECK(rep.metrics.max_error < 1e-12);
    // latent Hamiltonian conserved at second order along the rollout
    CHECK(rep.hams.drift_latent < 1e-4);
    CHECK(rep.symp.max < 1e-14);
}

TEST_CASE("latent rollout drift scales at second order in dt") {
    const auto dyn = bounded_cubic();
    const auto bundle = ModelBundle::identity_bundle(models::SystemSpec::pendulum(), dyn);
    Vec x0(2);
    x0 << 0.4, 0.3;
    auto drift_at = [&](double dt) {
        integrators::IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.newton_tol = 1e-13;
        const auto roll = rollout(bundle, x0, 5.0, cfg);
        const double h0 = bundle.latent_energy(roll.latent.states.col(0));
        double worst = 0.0;
        for (Eigen::Index k = 0; k < roll.latent.samples(); ++k)
            worst = std::max(worst,
                             std::abs(bundle.latent_energy(roll.latent.states.col(k)) - h0));
        return worst;
    };
    const double ratio = drift_at(0.02) / drift_at(0.01);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("error metrics") {
    Mat a(2, 3), b(2, 3);
    a.setConstant(1.0);
    b.setConstant(1.0);
    SUBCASE("identical inputs give zeros") {
        const auto m = error_metrics(a, b);
        CHECK(m.mae == 0.0);
        CHECK(m.max_error == 0.0);
    }
    SUBCASE("constant offset") {
        b.array() += 0.1;
        const auto m = error_metrics(a, b);
        CHECK(m.mae == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(m.max_error == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("grid mismatch is rejected") {
        CHECK_THROWS_AS(error_metrics(a, Mat::Zero(2, 4)), ConfigError);
    }
}

TEST_CASE("hamiltonian report traces") {
    const auto spec = models::SystemSpec::pendulum();
    const auto sys = integrators::ode_from_system(spec);
    integrators::IntegratorConfig cfg;
    cfg.dt = 0.05;
    cfg.newton_tol = 1e-11;
    Vec x0(2);
    x0 << 1.0, 0.0;
    const auto truth = integrators::integrate(sys, x0, 5.0, cfg);
    const auto bundle = ModelBundle::identity_bundle(spec, harmonic_latent());
    const auto roll = rollout(bundle, x0, 5.0, cfg);
    const auto tr = hamiltonian_report(bundle, spec, truth, roll.latent, roll.decoded);
    // midpoint keeps the pendulum energy in a bounded O(dt^2) oscillation
    CHECK(tr.drift_truth < 1e-4);
    CHECK(tr.h_truth.size() == truth.samples());
    // offset between latent and ambient energies is reported as-is
    const double expected_offset =
        bundle.latent_energy(roll.latent.states.col(0)) - models::hamiltonian(spec, x0);
    CHECK(tr.offset == doctest::Approx(expected_offset).epsilon(1e-12));
}

TEST_CASE("symplecticity residual statistics") {
    Rng rng(8);
    SUBCASE("identity map has zero residual") {
        const auto bundle =
            ModelBundle::identity_bundle(models::SystemSpec::pendulum(), harmonic_latent());
        const auto stats = symplecticity_residual(bundle, random_points(rng, 2, 10), Mode::Lifting);
        CHECK(stats.mean == 0.0);
        CHECK(stats.max == 0.0);
    }
    SUBCASE("residual transforms by congruence under composition with a linear map") {
        // psi composed with M satisfies D(psi . M)(x) = Dpsi(M x) M, so the
        // residual matrix at M^{-1} y is M^T R(y) M; with a symplectic M the
        // zero residual is preserved exactly.
        nn::MlpConfig mcfg{2, 4, {6, 6, 6}};
        const auto psi = nn::Net::mlp(mcfg);
        Vec params(psi.n_params());
        Rng prng(9);
        psi.init_params(params.data(), prng);

        // symplectic M = exp(J S) with S symmetric
        Mat s(2, 2);
        s << 0.4, 0.1, 0.1, -0.3;
        const Mat js = sympl_apply_mat(s);
        Mat m = Mat::Identity(2, 2);
        Mat term = Mat::Identity(2, 2);
        for (int k = 1; k < 25; ++k) {
            term = term * js / k;
            m += term;
        }
        CHECK((m.transpose() * sympl_apply_mat(m) - sympl_matrix(2)).norm() < 1e-12);

        const Vec y = testutil::random_vec(rng, 2);
        const Mat j_psi = psi.input_jacobian(params.data(), y);
        const Mat r_psi = j_psi.transpose() * sympl_apply_mat(j_psi) - sympl_matrix(2);

        // composite evaluated through the same machinery at the preimage
        const Vec x_pre = m.partialPivLu().solve(y);
        auto composite = [&](const Vec& v) { return psi.forward(params.data(), m * v); };
        const Mat j_comp = testutil::fd_jacobian(composite, x_pre, 1e-7);
        const Mat r_comp = j_comp.transpose() * sympl_apply_mat(j_comp) - sympl_matrix(2);
        CHECK(testutil::rel_err(r_comp, (m.transpose() * r_psi * m).eval()) < 1e-5);
    }
    SUBCASE("orthogonal symplectic rotations leave the residual norm unchanged") {
        nn::MlpConfig mcfg{2, 4, {6, 6, 6}};
        const auto psi = nn::Net::mlp(mcfg);
        Vec params(psi.n_params());
        Rng prng(10);
        psi.init_params(params.data(), prng);
        const double a = 0.9;
        Mat rot(2, 2);
        rot << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
        const Vec y = testutil::random_vec(rng, 2);
        const Mat j_psi = psi.input_jacobian(params.data(), y);
        const Mat r_psi = j_psi.transpose() * sympl_apply_mat(j_psi) - sympl_matrix(2);
        const Mat j_comp = j_psi * rot;  // chain rule at the preimage
        const Mat r_comp = j_comp.transpose() * sympl_apply_mat(j_comp) - sympl_matrix(2);
        CHECK(std::abs(r_comp.norm() - r_psi.norm()) < 1e-10);
    }
}

TEST_CASE("report export") {
    const auto dyn = harmonic_latent();
    const auto spec = models::SystemSpec::pendulum();
    const auto bundle = ModelBundle::identity_bundle(spec, dyn);
    integrators::IntegratorConfig cfg;
    cfg.dt = 0.1;
    Vec x0(2);
    x0 << 0.5, 0.1;
    const auto truth = integrators::integrate(integrators::ode_from_system(spec), x0, 1.0, cfg);

    EvalReport report;
    report.config_hash = "deadbeef";
    report.trajectories.push_back(evaluate_trajectory(bundle, truth, cfg));

    const auto dir = std::filesystem::temp_directory_path() / "hamlift_report_test";
    std::filesystem::remove_all(dir);
    export_report(report, dir);
    for (const char* name :
         {"truth.csv", "predicted.csv", "abs_error.csv", "hamiltonians.csv", "latent.csv"})
        CHECK(std::filesystem::exists(dir / "traj_000" / name));
    CHECK(std::filesystem::exists(dir / "summary.json"));

    // re-export is byte-identical
    const std::string summary1 = io::read_text_file(dir / "summary.json");
    const std::string ham1 = io::read_text_file(dir / "traj_000" / "hamiltonians.csv");
    export_report(report, dir);
    CHECK(io::read_text_file(dir / "summary.json") == summary1);
    CHECK(io::read_text_file(dir / "traj_000" / "hamiltonians.csv") == ham1);

    SUBCASE("empty report exports a zero-trajectory summary") {
        EvalReport empty;
        const auto edir = std::filesystem::temp_directory_path() / "hamlift_empty_report";
        std::filesystem::remove_all(edir);
        export_report(empty, edir);
        const std::string text = io::read_text_file(edir / "summary.json");
        CHECK(text.find("\"n_trajectories\": 0") != std::string::npos);
        std::filesystem::remove_all(edir);
    }
    std::filesystem::remove_all(dir);
}
