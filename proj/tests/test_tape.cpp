#include "hamlift/tape.hpp"

#include "hamlift/quadham.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <functional>

using namespace hamlift;
using namespace hamlift::nn;

namespace {

using Builder = std::function<int(Tape&)>;

double eval_scalar(ParamStore& store, const Builder& build) {
    Tape tape(&store);
    return tape.value_scalar(build(tape));
}

Vec ad_gradient(ParamStore& store, const Builder& build) {
    Tape tape(&store);
    const int node = build(tape);
    store.zero_grads();
    tape.backward({{node, 1.0}});
    return store.grads;
}

Vec fd_gradient_params(ParamStore& store, const Builder& build, double scale = 1e-6) {
    Vec g(store.size());
    for (int i = 0; i < store.size(); ++i) {
        const double orig = store.values[i];
        const double h = scale * (1.0 + std::abs(orig));
        store.values[i] = orig + h;
        const double fp = eval_scalar(store, build);
        store.values[i] = orig - h;
        const double fm = eval_scalar(store, build);
        store.values[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

void check_grads(ParamStore& store, const Builder& build, double tol = 1e-6) {
    const Vec ad = ad_gradient(store, build);
    const Vec fd = fd_gradient_params(store, build);
    CHECK(testutil::rel_err(ad, fd) < tol);
}

}  // namespace

TEST_CASE("matvec gradient has the outer-product form") {
    ParamStore store;
    const int w_off = store.allocate(4);
    store.values << 1, 0, 0, 1;  // identity, column-major
    Vec x(2);
    x << 1, 2;

    Tape tape(&store);
    const int w = tape.param_mat(w_off, 2, 2);
    const int y = tape.matvec(w, tape.leaf(x));
    const int loss = tape.sum_sq(y);
    CHECK(tape.value_scalar(loss) == doctest::Approx(5.0));
    store.zero_grads();
    tape.backward({{loss, 1.0}});
    // d||Wx||^2/dW = 2 (Wx) x^T = [[2, 4], [4, 8]]
    Vec expect(4);
    expect << 2, 4, 4, 8;
    CHECK((store.grads - expect).norm() == 0.0);
}

TEST_CASE("constant subgraphs get zero gradients") {
    ParamStore store;
    const int off = store.allocate(3);
    store.values << 0.3, -0.2, 0.9;
    const Builder build = [&](Tape& t) {
        t.param_vec(off, 3);          // registered but unused
        return t.sum_sq(t.leaf(Vec::Constant(2, 1.5)));
    };
    CHECK(ad_gradient(store, build).norm() == 0.0);
}

TEST_CASE("elementwise and reduction ops differentiate correctly") {
    Rng rng(17);
    ParamStore store;
    const int a_off = store.allocate(6);
    const int b_off = store.allocate(6);
    for (int i = 0; i < 12; ++i) store.values[i] = rng.uniform(0.2, 1.3) * (i % 3 == 0 ? -1 : 1);

    SUBCASE("selu chain with hadamard, axpy, scale, shift") {
        check_grads(store, [&](Tape& t) {
            const int a = t.param_vec(a_off, 6);
            const int b = t.param_vec(b_off, 6);
            const int s = t.selu(a);
            const int h = t.hadamard(s, t.selu_prime(b));
            const int c = t.axpy(h, t.scale(s, -0.7), 1.3);
            return t.sum_sq(t.shift(c, 0.25));
        });
    }
    SUBCASE("dot, sub, add, and symplectic application") {
        check_grads(store, [&](Tape& t) {
            const int a = t.param_vec(a_off, 6);
            const int b = t.param_vec(b_off, 6);
            const int ja = t.sympl_j(a);
            const int d = t.dot(ja, t.sub(b, t.add(a, a)));
            return t.hadamard(d, d);
        });
    }
    SUBCASE("sum_abs away from kinks") {
        check_grads(store, [&](Tape& t) {
            return t.sum_abs(t.param_vec(a_off, 6));
        });
    }
    SUBCASE("mattvec transposed products") {
        check_grads(store, [&](Tape& t) {
            const int w = t.param_mat(a_off, 2, 3);
            const int x = t.param_vec(b_off, 2);
            return t.sum_sq(t.mattvec(w, x));
        });
    }
}

TEST_CASE("conv ops differentiate correctly") {
    Rng rng(29);
    ParamStore store;
    const int kern_off = store.allocate(2 * 3 * 3);  // (out=2, in=3, k=3) conv kernel
    const int bias_off = store.allocate(2);
    const int x_off = store.allocate(3 * 8);
    const int tkern_off = store.allocate(3 * 2 * 3);  // (in=3, out=2, k=3) convT kernel
    for (int i = 0; i < store.size(); ++i) store.values[i] = rng.uniform(-1.0, 1.0);

    ConvDesc down;
    down.in_ch = 3;
    down.out_ch = 2;
    down.k = 3;
    down.s = 2;
    down.p = 1;
    down.l_in = 8;
    down.l_out = 4;

    SUBCASE("conv1d with channel bias") {
        check_grads(store, [&](Tape& t) {
            const int d = t.add_conv_desc(down);
            const int y = t.conv1d(t.param_vec(kern_off, 18), t.param_vec(x_off, 24), d);
            return t.sum_sq(t.bias_chan(y, t.param_vec(bias_off, 2)));
        });
    }
    SUBCASE("transposed conv1d restores the length") {
        ConvDesc up;
        up.in_ch = 3;
        up.out_ch = 2;
        up.k = 3;
        up.s = 2;
        up.p = 1;
        up.out_pad = 1;
        up.l_in = 8;
        up.l_out = 16;
        check_grads(store, [&](Tape& t) {
            const int d = t.add_conv_desc(up);
            const int y = t.convt1d(t.param_vec(tkern_off, 18), t.param_vec(x_off, 24), d);
            return t.sum_sq(y);
        });
    }
}

TEST_CASE("quadratic Hamiltonian rhs op differentiates into all storages") {
    Rng rng(31);
    const int dim = 4;
    ParamStore store;
    const int z_src = store.allocate(dim);
    const int alpha_off = store.allocate(dim);
    const int s_off = store.allocate(quadham::QuadHamParams::s_size(dim));
    const int t_off = store.allocate(quadham::QuadHamParams::t_size(dim));
    for (int i = 0; i < store.size(); ++i) store.values[i] = rng.uniform(-0.8, 0.8);

    check_grads(store, [&](Tape& t) {
        QuadDesc qd;
        qd.dim = dim;
        qd.alpha_off = alpha_off;
        qd.s_off = s_off;
        qd.t_off = t_off;
        // route z through selu so its gradient path is nontrivial
        const int z = t.selu(t.param_vec(z_src, dim));
        const int f = t.quad_rhs(z, t.add_quad_desc(qd));
        return t.sum_sq(f);
    });
}

TEST_CASE("backward is deterministic and repeatable") {
    Rng rng(40);
    ParamStore store;
    const int off = store.allocate(10);
    for (int i = 0; i < 10; ++i) store.values[i] = rng.uniform(-1, 1);
    const Builder build = [&](Tape& t) {
        const int w = t.param_mat(off, 2, 5);
        const int y = t.matvec(w, t.leaf(Vec::LinSpaced(5, -1.0, 1.0)));
        return t.sum_sq(t.selu(y));
    };
    const Vec g1 = ad_gradient(store, build);
    const Vec g2 = ad_gradient(store, build);
    CHECK((g1 - g2).norm() == 0.0);

    // tape reuse after reset computes identical values
    Tape tape(&store);
    const double v1 = tape.value_scalar(build(tape));
    tape.reset();
    const double v2 = tape.value_scalar(build(tape));
    CHECK(v1 == v2);
}

TEST_CASE("non-scalar seeds are rejected") {
    ParamStore store;
    Tape tape(&store);
    const int leaf = tape.leaf(Vec::Zero(3));
    CHECK_THROWS_AS(tape.backward({{leaf, 1.0}}), ConfigError);
}
