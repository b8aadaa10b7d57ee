#include <cmath>
#include <cstring>
#include <vector>

#include "dinn/common.hpp"
#include "dinn/kernels.hpp"
#include "dinn/rng.hpp"
#include "doctest.h"

using dinn::Rng;
using dinn::kern::Conv2dDims;
using dinn::kern::conv2d_dims;
namespace serial = dinn::kern::serial;
namespace omp = dinn::kern::omp;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

std::vector<float> randnf(std::size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Brute-force convolution over an explicitly zero-padded copy of the input.
std::vector<double> conv_oracle(const Conv2dDims& d, const std::vector<double>& x,
                                const std::vector<double>& k, const std::vector<double>& bias) {
    const int ph = d.in_h + d.k_h, pw = d.in_w + d.k_w;  // generous padded extent
    std::vector<double> y(static_cast<std::size_t>(d.batch) * d.out_h * d.out_w * d.out_c);
    for (int b = 0; b < d.batch; ++b) {
        std::vector<double> pad(static_cast<std::size_t>(ph) * pw * d.in_c, 0.0);
        for (int i = 0; i < d.in_h; ++i)
            for (int j = 0; j < d.in_w; ++j)
                for (int c = 0; c < d.in_c; ++c)
                    pad[((static_cast<std::size_t>(i + d.pad_top) * pw) + (j + d.pad_left)) *
                            d.in_c +
                        c] = x[((static_cast<std::size_t>(b) * d.in_h + i) * d.in_w + j) *
                                   d.in_c +
                               c];
        for (int oy = 0; oy < d.out_h; ++oy)
            for (int ox = 0; ox < d.out_w; ++ox)
                for (int co = 0; co < d.out_c; ++co) {
                    double acc = bias[co];
                    for (int ky = 0; ky < d.k_h; ++ky)
                        for (int kx = 0; kx < d.k_w; ++kx)
                            for (int ci = 0; ci < d.in_c; ++ci) {
                                const int iy = oy * d.stride_h + ky;
                                const int ix = ox * d.stride_w + kx;
                                if (iy >= ph || ix >= pw) continue;
                                acc += pad[(static_cast<std::size_t>(iy) * pw + ix) * d.in_c +
                                           ci] *
                                       k[((static_cast<std::size_t>(ky) * d.k_w + kx) * d.in_c +
                                          ci) *
                                             d.out_c +
                                         co];
                            }
                    y[((static_cast<std::size_t>(b) * d.out_h + oy) * d.out_w + ox) * d.out_c +
                      co] = acc;
                }
    }
    return y;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("ceil-mode same-padding geometry") {
    // stride 2 halves odd/even extents upward
    Conv2dDims d = conv2d_dims(1, 30, 20, 4, 3, 3, 8, 2, 2);
    CHECK(d.out_h == 15);
    CHECK(d.out_w == 10);
    CHECK(d.pad_top == 0);  // total pad 1: extra goes bottom/right
    CHECK(d.pad_left == 0);

    d = conv2d_dims(1, 15, 10, 8, 3, 3, 32, 2, 2);
    CHECK(d.out_h == 8);
    CHECK(d.out_w == 5);

    d = conv2d_dims(1, 8, 5, 32, 3, 3, 128, 2, 2);
    CHECK(d.out_h == 4);
    CHECK(d.out_w == 3);

    // stride 1 keeps extents; k3 pads 1 all around
    d = conv2d_dims(1, 7, 9, 2, 3, 3, 2, 1, 1);
    CHECK(d.out_h == 7);
    CHECK(d.out_w == 9);
    CHECK(d.pad_top == 1);
    CHECK(d.pad_left == 1);

    // 1x1 never pads
    d = conv2d_dims(1, 5, 5, 3, 1, 1, 7, 1, 1);
    CHECK(d.out_h == 5);
    CHECK(d.pad_top == 0);
    CHECK(d.pad_left == 0);
}

struct ConvCase {
    int h, w, ci, co, k, s;
};

TEST_CASE("conv forward matches the padded brute-force oracle") {
    Rng rng(31);
    for (const auto& [h, w, ci, co, k, s] :
         {ConvCase{7, 5, 3, 4, 3, 2}, {6, 6, 2, 3, 3, 1}, {5, 4, 4, 2, 1, 1},
          {30, 20, 4, 8, 3, 2}}) {
        const Conv2dDims d = conv2d_dims(2, h, w, ci, k, k, co, s, s);
        const auto x = randn(static_cast<std::size_t>(2) * h * w * ci, rng);
        const auto ker = randn(static_cast<std::size_t>(k) * k * ci * co, rng);
        const auto bias = randn(co, rng);
        std::vector<double> y(static_cast<std::size_t>(2) * d.out_h * d.out_w * co);
        serial::conv2d_fwd(d, x.data(), ker.data(), bias.data(), y.data());
        const auto want = conv_oracle(d, x, ker, bias);
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv backward passes the adjoint identity") {
    // <conv(x;k,0), dy> == <x, bwd_input(dy;k)> == <k, bwd_kernel(x,dy)>
    Rng rng(77);
    for (const auto& [h, w, ci, co, k, s] :
         {ConvCase{6, 5, 3, 4, 3, 2}, {5, 7, 2, 3, 3, 1}, {4, 4, 3, 5, 1, 1}}) {
        const Conv2dDims d = conv2d_dims(2, h, w, ci, k, k, co, s, s);
        const auto x = randn(static_cast<std::size_t>(2) * h * w * ci, rng);
        const auto ker = randn(static_cast<std::size_t>(k) * k * ci * co, rng);
        const std::vector<double> zero_bias(co, 0.0);
        const std::size_t ny = static_cast<std::size_t>(2) * d.out_h * d.out_w * co;
        const auto dy = randn(ny, rng);

        std::vector<double> y(ny);
        serial::conv2d_fwd(d, x.data(), ker.data(), zero_bias.data(), y.data());
        std::vector<double> dx(x.size(), 0.0), dk(ker.size(), 0.0), db(co, 0.0);
        serial::conv2d_bwd_input(d, dy.data(), ker.data(), dx.data());
        serial::conv2d_bwd_kernel(d, x.data(), dy.data(), dk.data());
        serial::conv2d_bwd_bias(d, dy.data(), db.data());

        const double ref = dot(y, dy);
        CHECK(dot(x, dx) == doctest::Approx(ref).epsilon(1e-10));
        CHECK(dot(ker, dk) == doctest::Approx(ref).epsilon(1e-10));

        // bias adjoint: y with bias b and zero x is b broadcast
        std::vector<double> bias = randn(co, rng);
        std::vector<double> y2(ny);
        const std::vector<double> zero_x(x.size(), 0.0);
        serial::conv2d_fwd(d, zero_x.data(), ker.data(), bias.data(), y2.data());
        CHECK(dot(y2, dy) == doctest::Approx(dot(bias, db)).epsilon(1e-10));
    }
}

TEST_CASE("dense forward and backward match hand loops") {
    Rng rng(13);
    const int b = 3, n = 5, m = 4;
    const auto x = randn(b * n, rng), w = randn(n * m, rng), bias = randn(m, rng);
    const auto dy = randn(b * m, rng);

    std::vector<double> y(b * m);
    serial::dense_fwd(b, n, m, x.data(), w.data(), bias.data(), y.data());
    for (int r = 0; r < b; ++r)
        for (int j = 0; j < m; ++j) {
            double acc = bias[j];
            for (int i = 0; i < n; ++i) acc += x[r * n + i] * w[i * m + j];
            CHECK(y[r * m + j] == doctest::Approx(acc).epsilon(1e-12));
        }

    std::vector<double> dx(b * n, 0.0), dw(n * m, 0.0), db(m, 0.0);
    serial::dense_bwd_input(b, n, m, dy.data(), w.data(), dx.data());
    serial::dense_bwd_weights(b, n, m, x.data(), dy.data(), dw.data());
    serial::dense_bwd_bias(b, n, m, dy.data(), db.data());
    for (int r = 0; r < b; ++r)
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int j = 0; j < m; ++j) acc += dy[r * m + j] * w[i * m + j];
            CHECK(dx[r * n + i] == doctest::Approx(acc).epsilon(1e-12));
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = 0;
            for (int r = 0; r < b; ++r) acc += x[r * n + i] * dy[r * m + j];
            CHECK(dw[i * m + j] == doctest::Approx(acc).epsilon(1e-12));
        }
    for (int j = 0; j < m; ++j) {
        double acc = 0;
        for (int r = 0; r < b; ++r) acc += dy[r * m + j];
        CHECK(db[j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("backward kernels accumulate into the output buffer") {
    Rng rng(99);
    const int b = 2, n = 3, m = 2;
    const auto x = randn(b * n, rng), dy = randn(b * m, rng);
    std::vector<double> dw(n * m, 0.5);  // sentinel
    serial::dense_bwd_weights(b, n, m, x.data(), dy.data(), dw.data());
    std::vector<double> fresh(n * m, 0.0);
    serial::dense_bwd_weights(b, n, m, x.data(), dy.data(), fresh.data());
    for (int i = 0; i < n * m; ++i) CHECK(dw[i] == doctest::Approx(0.5 + fresh[i]));
}

TEST_CASE("nearest-neighbour resize uses the floor mapping") {
    // 2x2 -> 4x4: source index floor(i*in/out)
    const int b = 1, h = 2, w = 2, c = 1;
    std::vector<double> x{1, 2, 3, 4}, y(16);
    serial::resize_nn_fwd(b, h, w, c, 4, 4, x.data(), y.data());
    const std::vector<double> want{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
    CHECK(y == want);

    // production shapes: 8x10 -> 15x20 (odd target from even source)
    std::vector<double> x2(8 * 10), y2(15 * 20);
    for (int i = 0; i < 80; ++i) x2[i] = i;
    serial::resize_nn_fwd(1, 8, 10, 1, 15, 20, x2.data(), y2.data());
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 20; ++j)
            CHECK(y2[i * 20 + j] == x2[(i * 8 / 15) * 10 + (j * 10 / 20)]);
}

TEST_CASE("resize backward is the exact adjoint") {
    Rng rng(55);
    const int b = 2, h = 8, w = 10, c = 3, th = 15, tw = 20;
    const auto x = randn(static_cast<std::size_t>(b) * h * w * c, rng);
    const auto dy = randn(static_cast<std::size_t>(b) * th * tw * c, rng);
    std::vector<double> y(dy.size()), dx(x.size(), 0.0);
    serial::resize_nn_fwd(b, h, w, c, th, tw, x.data(), y.data());
    serial::resize_nn_bwd(b, h, w, c, th, tw, dy.data(), dx.data());
    CHECK(dot(y, dy) == doctest::Approx(dot(x, dx)).epsilon(1e-12));
}

TEST_CASE("leaky relu and sigmoid pointwise values") {
    const std::vector<double> x{-2.0, -0.5, 0.0, 0.5, 3.0};
    std::vector<double> y(x.size());
    serial::lrelu_fwd(x.size(), 0.2, x.data(), y.data());
    CHECK(y == std::vector<double>{-0.4, -0.1, 0.0, 0.5, 3.0});

    std::vector<double> dy(x.size(), 1.0), dx(x.size(), 0.0);
    serial::lrelu_bwd(x.size(), 0.2, x.data(), dy.data(), dx.data());
    CHECK(dx == std::vector<double>{0.2, 0.2, 0.2, 1.0, 1.0});  // slope at 0 is alpha

    serial::sigmoid_fwd(x.size(), x.data(), y.data());
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y[i] == doctest::Approx(1.0 / (1.0 + std::exp(-x[i]))).epsilon(1e-14));
    std::fill(dx.begin(), dx.end(), 0.0);
    serial::sigmoid_bwd(y.size(), y.data(), dy.data(), dx.data());
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(dx[i] == doctest::Approx(y[i] * (1.0 - y[i])).epsilon(1e-14));
}

TEST_CASE("omp kernels match serial bitwise at one worker") {
    dinn::set_threads(1);
    Rng rng(404);
    const Conv2dDims d = conv2d_dims(3, 12, 9, 5, 3, 3, 7, 2, 2);
    const auto x = randnf(static_cast<std::size_t>(3) * 12 * 9 * 5, rng);
    const auto k = randnf(static_cast<std::size_t>(3) * 3 * 5 * 7, rng);
    const auto bias = randnf(7, rng);
    const std::size_t ny = static_cast<std::size_t>(3) * d.out_h * d.out_w * 7;
    const auto dy = randnf(ny, rng);

    std::vector<float> a(ny), b(ny);
    serial::conv2d_fwd(d, x.data(), k.data(), bias.data(), a.data());
    omp::conv2d_fwd(d, x.data(), k.data(), bias.data(), b.data());
    CHECK(std::memcmp(a.data(), b.data(), ny * sizeof(float)) == 0);

    std::vector<float> dxa(x.size(), 0), dxb(x.size(), 0);
    serial::conv2d_bwd_input(d, dy.data(), k.data(), dxa.data());
    omp::conv2d_bwd_input(d, dy.data(), k.data(), dxb.data());
    CHECK(std::memcmp(dxa.data(), dxb.data(), dxa.size() * sizeof(float)) == 0);

    std::vector<float> dka(k.size(), 0), dkb(k.size(), 0);
    serial::conv2d_bwd_kernel(d, x.data(), dy.data(), dka.data());
    omp::conv2d_bwd_kernel(d, x.data(), dy.data(), dkb.data());
    CHECK(std::memcmp(dka.data(), dkb.data(), dka.size() * sizeof(float)) == 0);

    std::vector<float> dba(7, 0), dbb(7, 0);
    serial::conv2d_bwd_bias(d, dy.data(), dba.data());
    omp::conv2d_bwd_bias(d, dy.data(), dbb.data());
    CHECK(std::memcmp(dba.data(), dbb.data(), 7 * sizeof(float)) == 0);

    const int bb = 4, n = 37, m = 29;
    const auto dx2 = randnf(bb * n, rng);
    const auto w2 = randnf(n * m, rng);
    const auto b2 = randnf(m, rng);
    const auto dy2 = randnf(bb * m, rng);
    std::vector<float> ya(bb * m), yb(bb * m);
    serial::dense_fwd(bb, n, m, dx2.data(), w2.data(), b2.data(), ya.data());
    omp::dense_fwd(bb, n, m, dx2.data(), w2.data(), b2.data(), yb.data());
    CHECK(std::memcmp(ya.data(), yb.data(), ya.size() * sizeof(float)) == 0);

    std::vector<float> ga(bb * n, 0), gb(bb * n, 0);
    serial::dense_bwd_input(bb, n, m, dy2.data(), w2.data(), ga.data());
    omp::dense_bwd_input(bb, n, m, dy2.data(), w2.data(), gb.data());
    CHECK(std::memcmp(ga.data(), gb.data(), ga.size() * sizeof(float)) == 0);

    std::vector<float> wa(n * m, 0), wb(n * m, 0);
    serial::dense_bwd_weights(bb, n, m, dx2.data(), dy2.data(), wa.data());
    omp::dense_bwd_weights(bb, n, m, dx2.data(), dy2.data(), wb.data());
    CHECK(std::memcmp(wa.data(), wb.data(), wa.size() * sizeof(float)) == 0);
}

TEST_CASE("gather kernels match serial bitwise at any worker count") {
    Rng rng(606);
    const Conv2dDims d = conv2d_dims(4, 16, 12, 6, 3, 3, 10, 2, 2);
    const auto x = randnf(static_cast<std::size_t>(4) * 16 * 12 * 6, rng);
    const auto k = randnf(static_cast<std::size_t>(3) * 3 * 6 * 10, rng);
    const auto bias = randnf(10, rng);
    const std::size_t ny = static_cast<std::size_t>(4) * d.out_h * d.out_w * 10;
    const auto dy = randnf(ny, rng);

    std::vector<float> ref_y(ny), ref_dx(x.size(), 0), ref_dw, ref_dxd;
    serial::conv2d_fwd(d, x.data(), k.data(), bias.data(), ref_y.data());
    serial::conv2d_bwd_input(d, dy.data(), k.data(), ref_dx.data());

    const int bb = 8, n = 64, m = 48;
    const auto xd = randnf(bb * n, rng);
    const auto wd = randnf(n * m, rng);
    const auto bd = randnf(m, rng);
    const auto dyd = randnf(bb * m, rng);
    std::vector<float> ref_yd(bb * m);
    ref_dxd.assign(bb * n, 0);
    ref_dw.assign(n * m, 0);
    serial::dense_fwd(bb, n, m, xd.data(), wd.data(), bd.data(), ref_yd.data());
    serial::dense_bwd_input(bb, n, m, dyd.data(), wd.data(), ref_dxd.data());
    serial::dense_bwd_weights(bb, n, m, xd.data(), dyd.data(), ref_dw.data());

    for (int nt : {2, 3, 8}) {
        CAPTURE(nt);
        dinn::set_threads(nt);

        std::vector<float> y(ny), dx(x.size(), 0);
        omp::conv2d_fwd(d, x.data(), k.data(), bias.data(), y.data());
        omp::conv2d_bwd_input(d, dy.data(), k.data(), dx.data());
        CHECK(std::memcmp(y.data(), ref_y.data(), ny * sizeof(float)) == 0);
        CHECK(std::memcmp(dx.data(), ref_dx.data(), dx.size() * sizeof(float)) == 0);

        std::vector<float> yd(bb * m), dxd(bb * n, 0), dw(n * m, 0);
        omp::dense_fwd(bb, n, m, xd.data(), wd.data(), bd.data(), yd.data());
        omp::dense_bwd_input(bb, n, m, dyd.data(), wd.data(), dxd.data());
        omp::dense_bwd_weights(bb, n, m, xd.data(), dyd.data(), dw.data());
        CHECK(std::memcmp(yd.data(), ref_yd.data(), yd.size() * sizeof(float)) == 0);
        CHECK(std::memcmp(dxd.data(), ref_dxd.data(), dxd.size() * sizeof(float)) == 0);
        CHECK(std::memcmp(dw.data(), ref_dw.data(), dw.size() * sizeof(float)) == 0);
    }
    dinn::set_threads(1);
}

TEST_CASE("kernel-gradient reduction stays within rounding at many workers") {
    Rng rng(707);
    const Conv2dDims d = conv2d_dims(4, 16, 12, 6, 3, 3, 10, 2, 2);
    const auto x = randn(static_cast<std::size_t>(4) * 16 * 12 * 6, rng);
    const std::size_t ny = static_cast<std::size_t>(4) * d.out_h * d.out_w * 10;
    const auto dy = randn(ny, rng);
    std::vector<double> ref(static_cast<std::size_t>(3) * 3 * 6 * 10, 0.0);
    serial::conv2d_bwd_kernel(d, x.data(), dy.data(), ref.data());
    for (int nt : {2, 3, 8}) {
        CAPTURE(nt);
        dinn::set_threads(nt);
        std::vector<double> dk(ref.size(), 0.0);
        omp::conv2d_bwd_kernel(d, x.data(), dy.data(), dk.data());
        for (std::size_t i = 0; i < ref.size(); ++i)
            CHECK(dk[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    dinn::set_threads(1);
}

TEST_CASE("thread configuration validates its input") {
    CHECK_THROWS_AS(dinn::set_threads(0), dinn::ConfigError);
    CHECK_THROWS_AS(dinn::set_threads(-2), dinn::ConfigError);
    dinn::set_threads(3);
    CHECK(dinn::threads() == 3);
    dinn::set_threads(1);
}

TEST_SUITE_END();
