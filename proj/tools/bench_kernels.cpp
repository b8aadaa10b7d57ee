// Times the serial reference kernels against the OpenMP ones on the layer
// shapes the networks actually run, checking that both produce the same
// output. Worker count comes from --threads or DINN_THREADS.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dinn/common.hpp"
#include "dinn/kernels.hpp"
#include "dinn/rng.hpp"

using dinn::Rng;
using dinn::kern::Conv2dDims;
namespace serial = dinn::kern::serial;
namespace dispatch = dinn::kern::dispatch;

namespace {

using Clock = std::chrono::steady_clock;

double best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        const auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

std::vector<float> random_vec(std::size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

struct Row {
    std::string name;
    double flops, serial_s, omp_s, diff;
};

std::vector<Row> g_rows;

void bench_conv(const std::string& name, int b, int h, int w, int ci, int co, int k, int stride,
                Rng& rng, int reps) {
    const Conv2dDims d = dinn::kern::conv2d_dims(b, h, w, ci, k, k, co, stride, stride);
    const auto x = random_vec(static_cast<std::size_t>(b) * h * w * ci, rng);
    const auto ker = random_vec(static_cast<std::size_t>(k) * k * ci * co, rng);
    const auto bias = random_vec(co, rng);
    std::vector<float> ys(static_cast<std::size_t>(b) * d.out_h * d.out_w * co);
    std::vector<float> yo(ys.size());

    const double serial_s = best_of(reps, [&] {
        serial::conv2d_fwd(d, x.data(), ker.data(), bias.data(), ys.data());
    });
    const double omp_s = best_of(reps, [&] {
        dispatch::conv2d_fwd(d, x.data(), ker.data(), bias.data(), yo.data());
    });
    const double flops = 2.0 * b * d.out_h * d.out_w * co * k * k * ci;
    g_rows.push_back({name, flops, serial_s, omp_s, max_abs_diff(ys, yo)});
}

void bench_dense(const std::string& name, int b, int n, int m, Rng& rng, int reps) {
    const auto x = random_vec(static_cast<std::size_t>(b) * n, rng);
    const auto w = random_vec(static_cast<std::size_t>(n) * m, rng);
    const auto bias = random_vec(m, rng);
    std::vector<float> ys(static_cast<std::size_t>(b) * m), yo(ys.size());

    const double serial_s =
        best_of(reps, [&] { serial::dense_fwd(b, n, m, x.data(), w.data(), bias.data(), ys.data()); });
    const double omp_s =
        best_of(reps, [&] { dispatch::dense_fwd(b, n, m, x.data(), w.data(), bias.data(), yo.data()); });
    g_rows.push_back({name, 2.0 * b * n * m, serial_s, omp_s, max_abs_diff(ys, yo)});
}

void bench_dense_bwd_w(const std::string& name, int b, int n, int m, Rng& rng, int reps) {
    const auto x = random_vec(static_cast<std::size_t>(b) * n, rng);
    const auto dy = random_vec(static_cast<std::size_t>(b) * m, rng);
    std::vector<float> dws(static_cast<std::size_t>(n) * m), dwo(dws.size());

    const double serial_s = best_of(reps, [&] {
        std::memset(dws.data(), 0, dws.size() * sizeof(float));
        serial::dense_bwd_weights(b, n, m, x.data(), dy.data(), dws.data());
    });
    const double omp_s = best_of(reps, [&] {
        std::memset(dwo.data(), 0, dwo.size() * sizeof(float));
        dispatch::dense_bwd_weights(b, n, m, x.data(), dy.data(), dwo.data());
    });
    g_rows.push_back({name, 2.0 * b * n * m, serial_s, omp_s, max_abs_diff(dws, dwo)});
}

void bench_conv_bwd_k(const std::string& name, int b, int h, int w, int ci, int co, int k,
                      int stride, Rng& rng, int reps) {
    const Conv2dDims d = dinn::kern::conv2d_dims(b, h, w, ci, k, k, co, stride, stride);
    const auto x = random_vec(static_cast<std::size_t>(b) * h * w * ci, rng);
    const auto dy = random_vec(static_cast<std::size_t>(b) * d.out_h * d.out_w * co, rng);
    std::vector<float> dks(static_cast<std::size_t>(k) * k * ci * co), dko(dks.size());

    const double serial_s = best_of(reps, [&] {
        std::memset(dks.data(), 0, dks.size() * sizeof(float));
        serial::conv2d_bwd_kernel(d, x.data(), dy.data(), dks.data());
    });
    const double omp_s = best_of(reps, [&] {
        std::memset(dko.data(), 0, dko.size() * sizeof(float));
        dispatch::conv2d_bwd_kernel(d, x.data(), dy.data(), dko.data());
    });
    const double flops = 2.0 * b * d.out_h * d.out_w * co * k * k * ci;
    g_rows.push_back({name, flops, serial_s, omp_s, max_abs_diff(dks, dko)});
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 5;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--threads" && i + 1 < argc)
            dinn::set_threads(std::atoi(argv[++i]));
        else if (a == "--reps" && i + 1 < argc)
            reps = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: %s [--threads N] [--reps N]\n", argv[0]);
            return 2;
        }
    }
    if (std::getenv("DINN_THREADS") && dinn::threads() == 1) dinn::init_threads_from_env();

    Rng rng(42);
    const int B = 32;
    bench_conv("extractor conv1 3x3s2 30x20 4->8", B, 30, 20, 4, 8, 3, 2, rng, reps);
    bench_conv("extractor conv5 3x3s2 8x5 32->128", B, 8, 5, 32, 128, 3, 2, rng, reps);
    bench_conv("generator conv3 3x3 30x40 64->32", B, 30, 40, 64, 32, 3, 1, rng, reps);
    bench_conv("generator conv5 3x3 60x80 32->8", B, 60, 80, 32, 8, 3, 1, rng, reps);
    bench_conv("generator conv7 3x3 120x160 8->1", B, 120, 160, 8, 1, 3, 1, rng, reps);
    bench_conv_bwd_k("generator conv3 kernel grad", B, 30, 40, 64, 32, 3, 1, rng, reps);
    bench_dense("generator fc 1536->10240", B, 1536, 10240, rng, reps);
    bench_dense("discriminator fc1 1536->1024", B, 1536, 1024, rng, reps);
    bench_dense_bwd_w("generator fc weight grad", B, 1536, 10240, rng, reps);

    std::printf("%-36s %10s %10s %8s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup",
                "ser GF/s", "omp GF/s", "max|diff|");
    bool all_close = true;
    for (const Row& r : g_rows) {
        std::printf("%-36s %10.3f %10.3f %8.2f %10.2f %10.2f %9.2e\n", r.name.c_str(),
                    r.serial_s * 1e3, r.omp_s * 1e3, r.serial_s / r.omp_s,
                    r.flops / r.serial_s * 1e-9, r.flops / r.omp_s * 1e-9, r.diff);
        if (!(r.diff <= 1e-4)) all_close = false;
    }
    std::printf("workers: %d\n", dinn::threads());
    if (!all_close) {
        std::fprintf(stderr, "kernel outputs diverged between implementations\n");
        return 1;
    }
    return 0;
}
