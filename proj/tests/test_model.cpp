#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dinn/model.hpp"
#include "dinn/rng.hpp"
#include "doctest.h"

using namespace dinn;

namespace {

Tensor random_input(const Shape& s, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(s);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

std::map<std::string, Shape> trace_map(const std::vector<LayerShape>& trace) {
    std::map<std::string, Shape> m;
    for (const auto& row : trace) m[row.name] = row.shape;
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("parameter tensor count and exact sizes per network") {
    ModelConfig cfg;
    auto p = make_params<double>(cfg);

    std::size_t fe = 0, gen = 0, disc = 0;
    for (auto& np : p.named_fe()) fe += np.tensor->numel();
    for (auto& np : p.named_gen()) gen += np.tensor->numel();
    for (auto& np : p.named_disc()) disc += np.tensor->numel();

    CHECK(fe == 59448);
    CHECK(gen == 15781977);
    CHECK(disc == 2755204);
    CHECK(p.count() == 18596629);
    CHECK(p.named().size() == 40);
    CHECK(p.named_fe_gen().size() == 32);
}

TEST_CASE("extractor ladder shapes") {
    ModelConfig cfg;
    auto p = init_params<double>(1, cfg);
    Graph<double> g;
    ParamNodes pn = bind_params(g, p);
    std::vector<LayerShape> trace;
    const int x = g.input(random_input({kCsiH, kCsiW, kCsiC}, 7));
    const int z = feature_extractor(g, pn, x, cfg, &trace);

    auto m = trace_map(trace);
    CHECK(m["conv1"] == Shape{15, 10, 8});
    CHECK(m["conv2"] == Shape{15, 10, 8});
    CHECK(m["conv3"] == Shape{8, 5, 32});
    CHECK(m["conv4"] == Shape{8, 5, 32});
    CHECK(m["conv5"] == Shape{4, 3, 128});
    CHECK(m["conv6"] == Shape{4, 3, 128});
    CHECK(m["se.pool"] == Shape{128});
    CHECK(m["se.squeeze"] == Shape{8});
    CHECK(m["se.expand"] == Shape{128});
    CHECK(m["se.scale"] == Shape{4, 3, 128});
    CHECK(g.val(z).shape == Shape{kBottleneckH, kBottleneckW, kBottleneckC});
    CHECK(g.val(z).all_finite());
}

TEST_CASE("generator ladder shapes") {
    ModelConfig cfg;
    auto p = init_params<double>(2, cfg);
    Graph<double> g;
    ParamNodes pn = bind_params(g, p);
    std::vector<LayerShape> trace;
    const int z = g.input(random_input({kBottleneckH, kBottleneckW, kBottleneckC}, 8));
    const int y = generator(g, pn, z, cfg, &trace);

    auto m = trace_map(trace);
    CHECK(m["fc"] == Shape{10240});
    CHECK(m["reshape"] == Shape{8, 10, 128});
    CHECK(m["resize1"] == Shape{15, 20, 128});
    CHECK(m["conv1"] == Shape{15, 20, 64});
    CHECK(m["conv2"] == Shape{15, 20, 64});
    CHECK(m["resize3"] == Shape{30, 40, 64});
    CHECK(m["conv3"] == Shape{30, 40, 32});
    CHECK(m["conv4"] == Shape{30, 40, 32});
    CHECK(m["resize5"] == Shape{60, 80, 32});
    CHECK(m["conv5"] == Shape{60, 80, 8});
    CHECK(m["conv6"] == Shape{60, 80, 8});
    CHECK(m["resize7"] == Shape{120, 160, 8});
    CHECK(m["conv7"] == Shape{120, 160, 1});
    CHECK(g.val(y).shape == Shape{kImgH, kImgW, 1});

    // final squash keeps everything in (0,1)
    for (double v : g.val(y).data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("discriminator ladder shapes and row-stochastic output") {
    ModelConfig cfg;
    auto p = init_params<double>(3, cfg);
    Graph<double> g;
    ParamNodes pn = bind_params(g, p);
    std::vector<LayerShape> trace;
    const int z = g.input(random_input({2, kBottleneckH, kBottleneckW, kBottleneckC}, 9));
    const int d = discriminator(g, pn, z, cfg, &trace);

    auto m = trace_map(trace);
    CHECK(m["fc1"] == Shape{2, 1024});
    CHECK(m["fc2"] == Shape{2, 1024});
    CHECK(m["fc3"] == Shape{2, 128});
    CHECK(m["fc4"] == Shape{2, 4});
    CHECK(m["softmax"] == Shape{2, 4});

    const Tensor& probs = g.val(d);
    for (int r = 0; r < 2; ++r) {
        double sum = 0;
        for (int c = 0; c < 4; ++c) {
            const double v = probs.data[r * 4 + c];
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("batched forward equals per-sample forward") {
    ModelConfig cfg;
    auto p = init_params<double>(4, cfg);
    const Tensor x0 = random_input({kCsiH, kCsiW, kCsiC}, 20);
    const Tensor x1 = random_input({kCsiH, kCsiW, kCsiC}, 21);
    Tensor xb({2, kCsiH, kCsiW, kCsiC});
    std::copy(x0.data.begin(), x0.data.end(), xb.data.begin());
    std::copy(x1.data.begin(), x1.data.end(), xb.data.begin() + x0.numel());

    Graph<double> gb;
    ParamNodes pnb = bind_params(gb, p);
    const int yb = generator(gb, pnb, feature_extractor(gb, pnb, gb.input(xb), cfg), cfg);
    CHECK(gb.val(yb).shape == Shape{2, kImgH, kImgW, 1});

    for (int i = 0; i < 2; ++i) {
        Graph<double> gs;
        ParamNodes pns = bind_params(gs, p);
        const int ys =
            generator(gs, pns, feature_extractor(gs, pns, gs.input(i ? x1 : x0), cfg), cfg);
        const auto& single = gs.val(ys).data;
        const std::size_t n = single.size();
        for (std::size_t e = 0; e < n; ++e)
            CHECK(gb.val(yb).data[i * n + e] ==
                  doctest::Approx(single[e]).epsilon(1e-12));
    }
}

TEST_CASE("initialization statistics") {
    ModelConfig cfg;
    auto p = init_params<double>(42, cfg);

    auto var_of = [](const Tensor& t) {
        double sum = 0, sq = 0;
        for (double v : t.data) {
            sum += v;
            sq += v * v;
        }
        const double mean = sum / t.numel();
        return sq / t.numel() - mean * mean;
    };

    // hidden layers draw at variance 2/fan_in
    CHECK(var_of(p.gen_fc.w) == doctest::Approx(2.0 / 1536).epsilon(0.2));
    CHECK(var_of(p.disc_fc[0].w) == doctest::Approx(2.0 / 1536).epsilon(0.2));
    CHECK(var_of(p.fe_conv[4].kernel) == doctest::Approx(2.0 / (3 * 3 * 32)).epsilon(0.2));

    // layers feeding a squashing nonlinearity draw at 1/fan_in
    CHECK(var_of(p.disc_fc[3].w) == doctest::Approx(1.0 / 128).epsilon(0.2));
    CHECK(var_of(p.gen_conv[6].kernel) == doctest::Approx(1.0 / (3 * 3 * 8)).epsilon(0.25));
    CHECK(var_of(p.se_expand.w) == doctest::Approx(1.0 / cfg.se_hidden()).epsilon(0.25));

    // biases start at zero
    for (double v : p.gen_fc.b.data) CHECK(v == 0.0);
    for (double v : p.fe_conv[0].bias.data) CHECK(v == 0.0);

    // deterministic in the seed, distinct across seeds, identical across types
    auto p2 = init_params<double>(42, cfg);
    CHECK(p.gen_fc.w.data == p2.gen_fc.w.data);
    auto p3 = init_params<double>(43, cfg);
    CHECK(p.gen_fc.w.data != p3.gen_fc.w.data);
    auto pf = init_params<float>(42, cfg);
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(pf.gen_fc.w.data[i] == doctest::Approx(p.gen_fc.w.data[i]).epsilon(1e-7));
}

TEST_CASE("input validation names the expected geometry") {
    ModelConfig cfg;
    auto p = init_params<double>(5, cfg);
    Graph<double> g;
    ParamNodes pn = bind_params(g, p);
    const int bad = g.input(random_input({20, 30, 4}, 1));
    CHECK_THROWS_AS(feature_extractor(g, pn, bad, cfg), ShapeError);

    const int bad_z = g.input(random_input({kFeatureDim + 1}, 2));
    CHECK_THROWS_AS(generator(g, pn, bad_z, cfg), ShapeError);
}

TEST_CASE("config validation") {
    ModelConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.domains = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.domains = 4;
    cfg.se_ratio = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.se_ratio = 7;  // must divide the bottleneck width
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.se_ratio = 16;
    cfg.lrelu_alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_SUITE_END();
