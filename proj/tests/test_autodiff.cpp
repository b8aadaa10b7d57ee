#include <cmath>
#include <functional>
#include <vector>

#include "dinn/gradcheck.hpp"
#include "dinn/graph.hpp"
#include "dinn/rng.hpp"
#include "doctest.h"

using namespace dinn;

namespace {

Tensor randn_tensor(const Shape& s, Rng& rng, double scale = 1.0) {
    Tensor t(s);
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
}

// Values in (lo, hi) for probability-like tensors.
Tensor rand_open(const Shape& s, Rng& rng, double lo = 0.05, double hi = 0.95) {
    Tensor t(s);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Any node reduced to a smooth scalar: squash then cross-entropy against
// fixed targets. Keeps every op differentiable end to end.
int probe(Graph<double>& g, int y, const Tensor& targets) {
    const int s = g.sigmoid(y);
    const int t = g.input(targets);
    return g.bce_mean(s, t, 1, 1e-12);
}

struct Built {
    int loss = -1;
    std::vector<int> params;
};
using BuildFn = std::function<Built(Graph<double>&)>;

// Backprop vs central finite differences for every listed parameter.
void check_grads(const BuildFn& build, const std::vector<Tensor*>& thetas, double tol = 1e-6) {
    Graph<double> g;
    const Built bt = build(g);
    REQUIRE(bt.params.size() == thetas.size());
    g.backward(bt.loss);
    std::vector<Tensor> analytic;
    for (int id : bt.params) analytic.push_back(g.grad(id));

    for (std::size_t p = 0; p < thetas.size(); ++p) {
        auto f = [&](const Tensor& x) {
            const Tensor saved = *thetas[p];
            *thetas[p] = x;
            Graph<double> g2;
            const double v = g2.val(build(g2).loss).data[0];
            *thetas[p] = saved;
            return v;
        };
        const Tensor fd = finite_diff_grad(f, *thetas[p]);
        CAPTURE(p);
        CHECK(grad_rel_err(analytic[p].data, fd.data) < tol);
    }
}

}  // namespace

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("conv2d gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 1));
        Tensor x = randn_tensor({5, 4, 2}, rng);
        Tensor k = randn_tensor({3, 3, 2, 3}, rng, 0.5);
        Tensor b = randn_tensor({3}, rng, 0.1);
        const int stride = 1 + static_cast<int>(seed % 2);
        const int oh = (5 + stride - 1) / stride, ow = (4 + stride - 1) / stride;
        const Tensor targets = rand_open({oh, ow, 3}, rng);
        auto build = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x), g.param(&k), g.param(&b)};
            const int y = g.conv2d(bt.params[0], bt.params[1], bt.params[2], stride, stride);
            bt.loss = probe(g, y, targets);
            return bt;
        };
        check_grads(build, {&x, &k, &b});
    }
}

TEST_CASE("conv2d batched input gradients") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 2));
        Tensor x = randn_tensor({2, 4, 5, 3}, rng);
        Tensor k = randn_tensor({3, 3, 3, 2}, rng, 0.5);
        Tensor b = randn_tensor({2}, rng, 0.1);
        const Tensor targets = rand_open({2, 2, 3, 2}, rng);
        auto build = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x), g.param(&k), g.param(&b)};
            const int y = g.conv2d(bt.params[0], bt.params[1], bt.params[2], 2, 2);
            bt.loss = probe(g, y, targets);
            return bt;
        };
        check_grads(build, {&x, &k, &b});
    }
}

TEST_CASE("dense gradients, batched and single") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 3));
        const bool batched = seed % 2 == 0;
        Tensor x = batched ? randn_tensor({3, 5}, rng) : randn_tensor({5}, rng);
        Tensor w = randn_tensor({5, 4}, rng, 0.5);
        Tensor b = randn_tensor({4}, rng, 0.1);
        const Tensor targets = batched ? rand_open({3, 4}, rng) : rand_open({4}, rng);
        auto build = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x), g.param(&w), g.param(&b)};
            bt.loss = probe(g, g.dense(bt.params[0], bt.params[1], bt.params[2]), targets);
            return bt;
        };
        check_grads(build, {&x, &w, &b});
    }
}

TEST_CASE("resize, reshape, pool and pointwise op gradients") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 4));

        // resize (8,10,c) -> (15,20,c), the generator's first hop
        Tensor x = randn_tensor({8, 10, 2}, rng);
        const Tensor t1 = rand_open({15, 20, 2}, rng);
        auto build_resize = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x)};
            bt.loss = probe(g, g.resize_nearest(bt.params[0], 15, 20), t1);
            return bt;
        };
        check_grads(build_resize, {&x});

        // lrelu away from the kink
        Tensor x2(Shape{4, 3});
        for (auto& v : x2.data) {
            v = rng.normal();
            if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
        }
        const Tensor t2 = rand_open({4, 3}, rng);
        auto build_lrelu = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x2)};
            bt.loss = probe(g, g.lrelu(bt.params[0], 0.2), t2);
            return bt;
        };
        check_grads(build_lrelu, {&x2});

        // reshape + global average pool
        Tensor x3 = randn_tensor({4, 3, 2}, rng);
        const Tensor t3 = rand_open({2}, rng);
        auto build_gap = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x3)};
            const int r = g.reshape(bt.params[0], {2, 6, 2});
            bt.loss = probe(g, g.global_avg_pool(r), t3);
            return bt;
        };
        check_grads(build_gap, {&x3});
    }
}

TEST_CASE("softmax gradients, single row and batched") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 5));
        const bool batched = seed % 2 == 0;
        Tensor x = batched ? randn_tensor({3, 4}, rng) : randn_tensor({4}, rng);
        Tensor onehot(x.shape);
        const int rows = batched ? 3 : 1;
        for (int r = 0; r < rows; ++r)
            onehot.data[r * 4 + static_cast<int>(rng.next_below(4))] = 1.0;
        auto build = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x)};
            const int sm = g.softmax(bt.params[0]);
            bt.loss = g.bce_mean(sm, g.input(onehot), rows, 1e-12);
            return bt;
        };
        check_grads(build, {&x});
    }
}

TEST_CASE("channel scaling and the squeeze-excite composite") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 6));
        Tensor x = randn_tensor({4, 3, 4}, rng);
        Tensor w1 = randn_tensor({4, 2}, rng, 0.5), b1 = randn_tensor({2}, rng, 0.1);
        Tensor w2 = randn_tensor({2, 4}, rng, 0.5), b2 = randn_tensor({4}, rng, 0.1);
        const Tensor t = rand_open({4, 3, 4}, rng);
        // x feeds both the pooled gate path and the scaling, so its gradient
        // accumulates over two consumers.
        auto build = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&x), g.param(&w1), g.param(&b1), g.param(&w2), g.param(&b2)};
            const int pooled = g.global_avg_pool(bt.params[0]);
            const int h = g.relu(g.dense(pooled, bt.params[1], bt.params[2]));
            const int gate = g.sigmoid(g.dense(h, bt.params[3], bt.params[4]));
            bt.loss = probe(g, g.scale_channels(bt.params[0], gate), t);
            return bt;
        };
        check_grads(build, {&x, &w1, &b1, &w2, &b2});
    }
}

TEST_CASE("cross-entropy loss gradient and clipping") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        Rng rng(derive_seed(seed, 7));
        Tensor pred = rand_open({2, 6}, rng, 0.1, 0.9);
        Tensor targ = rand_open({2, 6}, rng, 0.0, 1.0);
        auto build = [&](Graph<double>& g) {
            Built bt;
            bt.params = {g.param(&pred)};
            bt.loss = g.bce_mean(bt.params[0], g.input(targ), 2, 1e-7);
            return bt;
        };
        check_grads(build, {&pred});
    }

    // clipped coordinates produce a flat (zero) gradient instead of a blowup
    Tensor pred({3}, {1e-9, 0.5, 1.0 - 1e-9});
    Tensor targ({3}, {1.0, 0.25, 0.0});
    Graph<double> g;
    const int p = g.param(&pred);
    const int loss = g.bce_mean(p, g.input(targ), 1, 1e-7);
    CHECK(std::isfinite(g.val(loss).data[0]));
    g.backward(loss);
    const Tensor& grad = g.grad(p);
    CHECK(grad.data[0] == 0.0);
    CHECK(grad.data[2] == 0.0);
    CHECK(grad.data[1] != 0.0);
}

TEST_CASE("backward resets state between passes on one graph") {
    Rng rng(11);
    Tensor x = randn_tensor({4}, rng);
    Tensor w1 = randn_tensor({4, 3}, rng), b1 = randn_tensor({3}, rng, 0.1);
    Tensor w2 = randn_tensor({4, 2}, rng), b2 = randn_tensor({2}, rng, 0.1);
    const Tensor t1 = rand_open({3}, rng), t2 = rand_open({2}, rng);

    Graph<double> g;
    const int xp = g.param(&x);
    const int w1p = g.param(&w1), b1p = g.param(&b1);
    const int w2p = g.param(&w2), b2p = g.param(&b2);
    const int l1 = probe(g, g.dense(xp, w1p, b1p), t1);
    const int l2 = probe(g, g.dense(xp, w2p, b2p), t2);

    g.backward(l1);
    const Tensor gx_first = g.grad(xp);
    CHECK(l2 >= 0);

    g.backward(l2);
    const Tensor gx_second = g.grad(xp);
    // head-1 weights are off the second loss's path: zero gradient
    const Tensor gw1 = g.grad(w1p);
    for (double v : gw1.data) CHECK(v == 0.0);

    // fresh graph agrees exactly with the second pass
    Graph<double> h;
    const int hx = h.param(&x);
    const int l2b = probe(h, h.dense(hx, h.param(&w2), h.param(&b2)), t2);
    h.backward(l2b);
    CHECK(h.grad(hx).data == gx_second.data);
    CHECK(gx_first.data != gx_second.data);
}

TEST_CASE("inputs never accumulate gradients, params always do") {
    Rng rng(12);
    Tensor w = randn_tensor({3, 2}, rng);
    Tensor b = randn_tensor({2}, rng);
    const Tensor t = rand_open({2}, rng);
    Graph<double> g;
    const int x = g.input(randn_tensor({3}, rng));
    const int wp = g.param(&w), bp = g.param(&b);
    const int loss = probe(g, g.dense(x, wp, bp), t);
    g.backward(loss);
    for (double v : g.grad(x).data) CHECK(v == 0.0);
    double wsum = 0;
    for (double v : g.grad(wp).data) wsum += std::abs(v);
    CHECK(wsum > 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
    Graph<double> g;
    Tensor x({2, 2}, {1, 2, 3, 4});
    const int p = g.param(&x);
    const int y = g.sigmoid(p);
    CHECK_THROWS_AS(g.backward(y), InvalidArgument);
}

TEST_CASE("shape mismatches fail loudly at record time") {
    Graph<double> g;
    Tensor x({5, 4, 2});
    Tensor k({3, 3, 3, 2});  // in_c mismatch
    Tensor b({2});
    const int xp = g.param(&x), kp = g.param(&k), bp = g.param(&b);
    CHECK_THROWS_AS(g.conv2d(xp, kp, bp, 1, 1), ShapeError);

    Tensor w({4, 3});
    const int wp = g.param(&w);
    CHECK_THROWS_AS(g.dense(xp, wp, bp), ShapeError);
}

TEST_SUITE_END();
