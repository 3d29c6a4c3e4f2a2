#include "hamlift/nets.hpp"

#include "testutil.hpp"

#include <doctest.h>

using namespace hamlift;
using namespace hamlift::nn;

namespace {

Vec init_net(const Net& net, std::uint64_t seed) {
    Vec params = Vec::Zero(net.n_params());
    Rng rng(seed);
    net.init_params(params.data(), rng);
    return params;
}

// Parameter gradient of a scalar functional of the net via finite differences.
Vec fd_param_gradient(const Net& net, Vec params,
                      const std::function<double(const double*)>& f, double scale = 1e-6) {
    Vec g(params.size());
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        const double h = scale * (1.0 + std::abs(orig));
        params[i] = orig + h;
        const double fp = f(params.data());
        params[i] = orig - h;
        const double fm = f(params.data());
        params[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("selu constants") {
    CHECK(selu_fn(0.0) == 0.0);
    CHECK(selu_fn(1.0) == doctest::Approx(1.0507009873554805).epsilon(1e-15));
    CHECK(selu_fn(-40.0) ==
          doctest::Approx(-1.0507009873554805 * 1.6732632423543772).epsilon(1e-12));
}

TEST_CASE("mlp forward basics") {
    MlpConfig cfg{2, 3, {4, 4, 4}};
    const Net net = Net::mlp(cfg);
    CHECK(net.n_params() == (4 * 2 + 4) + 2 * (4 * 4 + 4) + (3 * 4 + 3));

    SUBCASE("all-zero parameters give zero output") {
        const Vec params = Vec::Zero(net.n_params());
        Vec x(2);
        x << 0.7, -0.3;
        CHECK(net.forward(params.data(), x).norm() == 0.0);
    }
    SUBCASE("scripted single-layer composition") {
        // one hidden layer, W1 = I padded, b = 0, head sums the hidden units
        MlpConfig tiny{2, 1, {2}};
        const Net t = Net::mlp(tiny);
        Vec p = Vec::Zero(t.n_params());
        p[0] = 1.0;  // W1(0,0)
        p[3] = 1.0;  // W1(1,1), column-major
        p[6] = 1.0;  // W_out(0,0)
        p[7] = 1.0;  // W_out(0,1)
        Vec x(2);
        x << 0.5, -0.25;
        const double expect = selu_fn(0.5) + selu_fn(-0.25);
        CHECK(t.forward(p.data(), x)[0] == doctest::Approx(expect).epsilon(1e-15));
    }
    SUBCASE("batched forward equals per-sample forward") {
        const Vec params = init_net(net, 9);
        Rng rng(10);
        Mat xs(2, 7);
        for (int c = 0; c < 7; ++c) xs.col(c) = testutil::random_vec(rng, 2);
        const Mat batch = net.forward_batch(params.data(), xs);
        for (int c = 0; c < 7; ++c) {
            const Vec single = net.forward(params.data(), xs.col(c));
            CHECK((batch.col(c) - single).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
}

TEST_CASE("mlp hidden layers must share a width") {
    CHECK_THROWS_AS(Net::mlp(MlpConfig{2, 2, {8, 4, 8}}), ConfigError);
    CHECK_THROWS_AS(Net::mlp(MlpConfig{2, 2, {}}), ConfigError);
}

TEST_CASE("conv autoencoder shapes") {
    SUBCASE("decode(encode(x)) preserves the length across resolutions") {
        for (int field : {256, 512, 1024}) {
            ConvAeConfig cfg;
            cfg.field_dim = field;
            cfg.latent_dim = 4;
            const Net enc = Net::conv_encoder(cfg);
            const Net dec = Net::conv_decoder(cfg);
            const Vec pe = init_net(enc, 1);
            const Vec pd = init_net(dec, 2);
            Rng rng(3);
            const Vec x = testutil::random_vec(rng, field);
            const Vec z = enc.forward(pe.data(), x);
            CHECK(z.size() == 4);
            const Vec back = dec.forward(pd.data(), z);
            CHECK(back.size() == field);
        }
    }
    SUBCASE("incompatible geometry is rejected at construction") {
        ConvAeConfig bad;
        bad.field_dim = 250;  // 125 is odd, cannot halve cleanly
        bad.latent_dim = 4;
        CHECK_THROWS_AS(Net::conv_encoder(bad), ConfigError);
    }
    SUBCASE("kernel 1, stride 1 acts per position") {
        ConvAeConfig cfg;
        cfg.field_dim = 16;
        cfg.latent_dim = 2;
        cfg.channels = {1};
        cfg.kernel = 1;
        cfg.stride = 1;
        cfg.pad = 0;
        cfg.out_pad = 0;
        const Net enc = Net::conv_encoder(cfg);
        Vec p = Vec::Zero(enc.n_params());
        p[0] = 2.0;  // single kernel weight on channel q
        // conv output = selu(2 * q_i) at each position, then the dense head
        Rng rng(4);
        Vec x = testutil::random_vec(rng, 16);
        ParamStore store;
        store.values = p;
        store.grads = Vec::Zero(p.size());
        Tape tape(&store);
        Trace tr = enc.emit_forward(tape, tape.leaf(x), 0);
        const auto pre = tape.value(tr.pre_acts[0]);
        for (int i = 0; i < 8; ++i) CHECK(pre[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-15));
    }
}

TEST_CASE("zero conv input propagates only biases") {
    ConvAeConfig cfg;
    cfg.field_dim = 32;
    cfg.latent_dim = 2;
    cfg.channels = {3, 6};
    const Net dec = Net::conv_decoder(cfg);
    Vec params = init_net(dec, 7);
    const Vec y0 = dec.forward(params.data(), Vec::Zero(2));
    const Vec y0_again = dec.forward(params.data(), Vec::Zero(2));
    CHECK((y0 - y0_again).norm() == 0.0);
}

TEST_CASE("parameter gradients match finite differences") {
    Rng seed_rng(100);
    SUBCASE("mlp") {
        const Net net = Net::mlp(MlpConfig{3, 2, {5, 5, 5}});
        const Vec params = init_net(net, 11);
        Rng rng(12);
        const Vec x = testutil::random_vec(rng, 3);
        auto loss = [&](const double* p) {
            ParamStore store;
            store.values = Eigen::Map<const Vec>(p, net.n_params());
            store.grads = Vec::Zero(net.n_params());
            Tape tape(&store);
            Trace tr = net.emit_forward(tape, tape.leaf(x), 0);
            return tape.value_scalar(tape.sum_sq(tr.output));
        };
        ParamStore store;
        store.values = params;
        store.grads = Vec::Zero(params.size());
        Tape tape(&store);
        Trace tr = net.emit_forward(tape, tape.leaf(x), 0);
        const Vec ad = grad_params(tape, store, tape.sum_sq(tr.output));
        const Vec fd = fd_param_gradient(net, params, loss);
        CHECK(testutil::rel_err(ad, fd) < 1e-5);
    }
    SUBCASE("conv autoencoder") {
        ConvAeConfig cfg;
        cfg.field_dim = 32;
        cfg.latent_dim = 2;
        cfg.channels = {3, 5};
        cfg.kernel = 3;
        cfg.pad = 1;
        const Net enc = Net::conv_encoder(cfg);
        const Net dec = Net::conv_decoder(cfg);
        const int n_enc = enc.n_params();
        const int n_all = n_enc + dec.n_params();
        Vec params(n_all);
        Rng rng(13);
        enc.init_params(params.data(), rng);
        dec.init_params(params.data() + n_enc, rng);
        Rng rng2(14);
        const Vec x = testutil::random_vec(rng2, 32);

        auto loss_value = [&](const double* p) {
            ParamStore store;
            store.values = Eigen::Map<const Vec>(p, n_all);
            store.grads = Vec::Zero(n_all);
            Tape tape(&store);
            Trace te = enc.emit_forward(tape, tape.leaf(x), 0);
            Trace td = dec.emit_forward(tape, te.output, n_enc);
            return tape.value_scalar(tape.sum_sq(tape.sub(td.output, tape.leaf(x))));
        };
        ParamStore store;
        store.values = params;
        store.grads = Vec::Zero(n_all);
        Tape tape(&store);
        Trace te = enc.emit_forward(tape, tape.leaf(x), 0);
        Trace td = dec.emit_forward(tape, te.output, n_enc);
        const Vec ad =
            grad_params(tape, store, tape.sum_sq(tape.sub(td.output, tape.leaf(x))));
        const Vec fd = fd_param_gradient(enc, params, loss_value);
        CHECK(testutil::rel_err(ad, fd) < 1e-5);
    }
}

TEST_CASE("input jacobians match finite differences") {
    SUBCASE("linear net jacobian is the matrix itself") {
        const Net net = Net::linear(3, 2);
        Vec params = init_net(net, 15);
        Rng rng(15);
        const Vec x = testutil::random_vec(rng, 3);
        const Mat jac = net.input_jacobian(params.data(), x);
        const Mat w = Eigen::Map<const Mat>(params.data(), 2, 3);
        CHECK((jac - w).norm() == 0.0);
    }
    SUBCASE("random mlp 2 -> 4") {
        const Net net = Net::mlp(MlpConfig{2, 4, {6, 6, 6}});
        const Vec params = init_net(net, 16);
        Rng rng(17);
        for (int trial = 0; trial < 5; ++trial) {
            const Vec x = testutil::random_vec(rng, 2);
            const Mat jac = net.input_jacobian(params.data(), x);
            const Mat fd = testutil::fd_jacobian(
                [&](const Vec& v) { return net.forward(params.data(), v); }, x);
            CHECK(testutil::rel_err(jac, fd) < 1e-5);
        }
    }
    SUBCASE("wide mlp uses reverse rows") {
        const Net net = Net::mlp(MlpConfig{6, 2, {5, 5, 5}});
        const Vec params = init_net(net, 18);
        Rng rng(19);
        const Vec x = testutil::random_vec(rng, 6);
        const Mat jac = net.input_jacobian(params.data(), x);
        const Mat fd = testutil::fd_jacobian(
            [&](const Vec& v) { return net.forward(params.data(), v); }, x);
        CHECK(testutil::rel_err(jac, fd) < 1e-5);
    }
    SUBCASE("conv decoder jacobian") {
        ConvAeConfig cfg;
        cfg.field_dim = 24;
        cfg.latent_dim = 2;
        cfg.channels = {2, 4};
        cfg.kernel = 3;
        cfg.pad = 1;
        const Net dec = Net::conv_decoder(cfg);
        const Vec params = init_net(dec, 20);
        Rng rng(21);
        const Vec z = testutil::random_vec(rng, 2);
        const Mat jac = dec.input_jacobian(params.data(), z);
        const Mat fd = testutil::fd_jacobian(
            [&](const Vec& v) { return dec.forward(params.data(), v); }, z);
        CHECK(testutil::rel_err(jac, fd) < 1e-5);
    }
}

TEST_CASE("jacobian chain rule along a curve") {
    const Net net = Net::mlp(MlpConfig{2, 4, {6, 6, 6}});
    const Vec params = init_net(net, 22);
    auto curve = [](double t) {
        Vec x(2);
        x << std::sin(t), 0.5 * std::cos(2 * t);
        return x;
    };
    auto curve_dot = [](double t) {
        Vec v(2);
        v << std::cos(t), -std::sin(2 * t);
        return v;
    };
    const double t0 = 0.37;
    const Mat jac = net.input_jacobian(params.data(), curve(t0));
    const Vec expect = jac * curve_dot(t0);
    const double h = 1e-6;
    const Vec fd = (net.forward(params.data(), curve(t0 + h)) -
                    net.forward(params.data(), curve(t0 - h))) /
                   (2 * h);
    CHECK(testutil::rel_err(expect, fd) < 1e-5);
}

TEST_CASE("gradient of the squared Jacobian norm matches finite differences") {
    // differentiation through the Jacobian is the engine's hardest path
    auto jac_norm_loss = [](const Net& net, const double* p, const Vec& x) {
        ParamStore store;
        store.values = Eigen::Map<const Vec>(p, net.n_params());
        store.grads = Vec::Zero(net.n_params());
        Tape tape(&store);
        Trace tr = net.emit_forward(tape, tape.leaf(x), 0);
        int acc = -1;
        for (int c = 0; c < net.in_dim(); ++c) {
            Vec e = Vec::Zero(net.in_dim());
            e[c] = 1.0;
            const int col = net.emit_jvp(tape, tr, tape.leaf(e));
            const int sq = tape.sum_sq(col);
            acc = acc < 0 ? sq : tape.add(acc, sq);
        }
        return std::pair<double, Vec>(tape.value_scalar(acc), grad_params(tape, store, acc));
    };

    SUBCASE("mlp") {
        const Net net = Net::mlp(MlpConfig{2, 3, {5, 5, 5}});
        const Vec params = init_net(net, 23);
        Rng rng(24);
        const Vec x = testutil::random_vec(rng, 2);
        const auto [value, ad] = jac_norm_loss(net, params.data(), x);
        const Vec fd = fd_param_gradient(net, params, [&](const double* p) {
            return jac_norm_loss(net, p, x).first;
        });
        CHECK(value > 0.0);
        CHECK(testutil::rel_err(ad, fd) < 1e-4);
    }
    SUBCASE("conv decoder") {
        ConvAeConfig cfg;
        cfg.field_dim = 16;
        cfg.latent_dim = 2;
        cfg.channels = {2, 3};
        cfg.kernel = 3;
        cfg.pad = 1;
        const Net dec = Net::conv_decoder(cfg);
        const Vec params = init_net(dec, 25);
        Rng rng(26);
        const Vec z = testutil::random_vec(rng, 2);
        const auto [value, ad] = jac_norm_loss(dec, params.data(), z);
        const Vec fd = fd_param_gradient(dec, params, [&](const double* p) {
            return jac_norm_loss(dec, p, z).first;
        });
        CHECK(value > 0.0);
        CHECK(testutil::rel_err(ad, fd) < 1e-4);
    }
}

TEST_CASE("vjp and jvp agree on the jacobian") {
    const Net net = Net::mlp(MlpConfig{3, 2, {4, 4, 4}});
    const Vec params = init_net(net, 27);
    Rng rng(28);
    const Vec x = testutil::random_vec(rng, 3);
    ParamStore store;
    store.values = params;
    store.grads = Vec::Zero(params.size());
    Tape tape(&store);
    Trace tr = net.emit_forward(tape, tape.leaf(x), 0);
    Mat from_jvp(2, 3), from_vjp(2, 3);
    for (int c = 0; c < 3; ++c) {
        Vec e = Vec::Zero(3);
        e[c] = 1.0;
        from_jvp.col(c) = tape.value(net.emit_jvp(tape, tr, tape.leaf(e)));
    }
    for (int r = 0; r < 2; ++r) {
        Vec e = Vec::Zero(2);
        e[r] = 1.0;
        from_vjp.row(r) = tape.value(net.emit_vjp(tape, tr, tape.leaf(e))).transpose();
    }
    CHECK((from_jvp - from_vjp).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("identity net") {
    const Net net = Net::identity(4);
    CHECK(net.n_params() == 0);
    Rng rng(30);
    const Vec x = testutil::random_vec(rng, 4);
    CHECK((net.forward(nullptr, x) - x).norm() == 0.0);
    CHECK((net.input_jacobian(nullptr, x) - Mat::Identity(4, 4)).norm() == 0.0);
}
