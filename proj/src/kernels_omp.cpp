#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dinn/common.hpp"
#include "dinn/kernels.hpp"
#include "dinn/kernels_detail.hpp"

namespace dinn::kern::omp {

// Parallel kernels. Every output element is accumulated in the same order
// as the serial reference, so gather-style kernels match it bitwise at any
// worker count; conv2d_bwd_kernel merges per-chunk partials and matches the
// reference bitwise at one worker, to rounding error otherwise.
//
// The hot loops peel the padded border off so the interior runs without
// bounds checks, and dispatch to micro-kernels with compile-time channel
// counts so the accumulators live in vector registers. Neither transform
// touches the order of any element's own sum.

namespace {

constexpr int kAccCap = 256;  // stack accumulator clamp; model channels are <= 128

struct Band {
    int lo, hi;  // taps are fully in bounds for lo <= i < hi
};

// output rows/cols whose every kernel tap lands inside the input
Band interior(int out_n, int in_n, int k, int stride, int pad) {
    Band b;
    b.lo = (pad + stride - 1) / stride;
    b.hi = std::min(out_n, in_n - k + pad >= 0 ? (in_n - k + pad) / stride + 1 : 0);
    if (b.hi < b.lo) b.hi = b.lo;
    return b;
}

// how many output pixels share one sweep of the kernel tensor; the tile
// keeps the whole accumulator set inside the vector register file
constexpr int tile_for(int channels) {
    return channels >= 128 ? 2 : channels >= 32 ? 4 : channels >= 8 ? 1 : 16;
}

// one interior output row; OC = 0 means runtime out_c (tile of 1)
template <typename T, int OC>
void conv_fwd_row(const Conv2dDims& d, const T* __restrict__ xb, const T* __restrict__ k,
                  const T* __restrict__ bias, T* __restrict__ yrow, int iy0, int x0, int x1) {
    const int oc = OC ? OC : d.out_c;
    const int row = d.k_w * d.in_c;
    constexpr int TILE = OC ? tile_for(OC) : 1;
    int ox = x0;
    for (; ox + TILE <= x1; ox += TILE) {
        T acc[TILE][OC ? OC : kAccCap];
        for (int u = 0; u < TILE; ++u)
            for (int co = 0; co < oc; ++co) acc[u][co] = bias[co];
        const T* __restrict__ xq =
            xb + (static_cast<std::size_t>(iy0) * d.in_w + ox * d.stride_w - d.pad_left) * d.in_c;
        const std::size_t xstep = static_cast<std::size_t>(d.stride_w) * d.in_c;
        const T* __restrict__ kq = k;
        for (int ky = 0; ky < d.k_h; ++ky) {
            const T* __restrict__ xr = xq + static_cast<std::size_t>(ky) * d.in_w * d.in_c;
            for (int t = 0; t < row; ++t) {
                const T* __restrict__ kr = kq + static_cast<std::size_t>(t) * oc;
                for (int u = 0; u < TILE; ++u) {
                    const T xv = xr[t + u * xstep];
                    for (int co = 0; co < oc; ++co) acc[u][co] = std::fma(xv, kr[co], acc[u][co]);
                }
            }
            kq += static_cast<std::size_t>(row) * oc;
        }
        for (int u = 0; u < TILE; ++u) {
            T* __restrict__ yo = yrow + (static_cast<std::size_t>(ox) + u) * oc;
            for (int co = 0; co < oc; ++co) yo[co] = acc[u][co];
        }
    }
    for (; ox < x1; ++ox) {
        T acc[OC ? OC : kAccCap];
        for (int co = 0; co < oc; ++co) acc[co] = bias[co];
        const T* __restrict__ xq =
            xb + (static_cast<std::size_t>(iy0) * d.in_w + ox * d.stride_w - d.pad_left) * d.in_c;
        const T* __restrict__ kq = k;
        for (int ky = 0; ky < d.k_h; ++ky) {
            const T* __restrict__ xr = xq + static_cast<std::size_t>(ky) * d.in_w * d.in_c;
            for (int t = 0; t < row; ++t) {
                const T xv = xr[t];
                const T* __restrict__ kr = kq + static_cast<std::size_t>(t) * oc;
                for (int co = 0; co < oc; ++co) acc[co] = std::fma(xv, kr[co], acc[co]);
            }
            kq += static_cast<std::size_t>(row) * oc;
        }
        T* __restrict__ yo = yrow + static_cast<std::size_t>(ox) * oc;
        for (int co = 0; co < oc; ++co) yo[co] = acc[co];
    }
}

template <typename T, typename... A>
void conv_fwd_dispatch(int oc, A&&... a) {
    switch (oc) {
        case 1: conv_fwd_row<T, 1>(a...); break;
        case 8: conv_fwd_row<T, 8>(a...); break;
        case 32: conv_fwd_row<T, 32>(a...); break;
        case 64: conv_fwd_row<T, 64>(a...); break;
        case 128: conv_fwd_row<T, 128>(a...); break;
        default: conv_fwd_row<T, 0>(a...); break;
    }
}

// one interior input row of the data gradient (stride 1); IC = 0 means runtime in_c
template <typename T, int IC>
void conv_bwd_in_row(const Conv2dDims& d, const T* __restrict__ dyb, const T* __restrict__ kt,
                     T* __restrict__ dxrow, int iy, int x0, int x1) {
    const int ic = IC ? IC : d.in_c;
    constexpr int TILE = IC ? tile_for(IC) : 1;
    int ix = x0;
    for (; ix + TILE <= x1; ix += TILE) {
        T acc[TILE][IC ? IC : kAccCap];
        for (int u = 0; u < TILE; ++u)
            for (int ci = 0; ci < ic; ++ci) acc[u][ci] = T(0);
        for (int ky = 0; ky < d.k_h; ++ky) {
            const int oy = iy + d.pad_top - ky;
            const T* __restrict__ dyrow = dyb + static_cast<std::size_t>(oy) * d.out_w * d.out_c;
            const T* __restrict__ ktrow = kt + static_cast<std::size_t>(ky) * d.k_w * d.out_c * ic;
            for (int kx = 0; kx < d.k_w; ++kx) {
                const T* __restrict__ dyp =
                    dyrow + static_cast<std::size_t>(ix + d.pad_left - kx) * d.out_c;
                const T* __restrict__ ktp = ktrow + static_cast<std::size_t>(kx) * d.out_c * ic;
                for (int co = 0; co < d.out_c; ++co) {
                    const T* __restrict__ kr = ktp + static_cast<std::size_t>(co) * ic;
                    for (int u = 0; u < TILE; ++u) {
                        const T dyv = dyp[static_cast<std::size_t>(u) * d.out_c + co];
                        for (int ci = 0; ci < ic; ++ci)
                            acc[u][ci] = std::fma(dyv, kr[ci], acc[u][ci]);
                    }
                }
            }
        }
        for (int u = 0; u < TILE; ++u) {
            T* __restrict__ dxp = dxrow + (static_cast<std::size_t>(ix) + u) * ic;
            for (int ci = 0; ci < ic; ++ci) dxp[ci] += acc[u][ci];
        }
    }
    for (; ix < x1; ++ix) {
        T acc[IC ? IC : kAccCap];
        for (int ci = 0; ci < ic; ++ci) acc[ci] = T(0);
        for (int ky = 0; ky < d.k_h; ++ky) {
            const int oy = iy + d.pad_top - ky;
            const T* __restrict__ dyrow = dyb + static_cast<std::size_t>(oy) * d.out_w * d.out_c;
            const T* __restrict__ ktrow = kt + static_cast<std::size_t>(ky) * d.k_w * d.out_c * ic;
            for (int kx = 0; kx < d.k_w; ++kx) {
                const T* __restrict__ dyp =
                    dyrow + static_cast<std::size_t>(ix + d.pad_left - kx) * d.out_c;
                const T* __restrict__ ktp = ktrow + static_cast<std::size_t>(kx) * d.out_c * ic;
                for (int co = 0; co < d.out_c; ++co) {
                    const T dyv = dyp[co];
                    const T* __restrict__ kr = ktp + static_cast<std::size_t>(co) * ic;
                    for (int ci = 0; ci < ic; ++ci) acc[ci] = std::fma(dyv, kr[ci], acc[ci]);
                }
            }
        }
        T* __restrict__ dxp = dxrow + static_cast<std::size_t>(ix) * ic;
        for (int ci = 0; ci < ic; ++ci) dxp[ci] += acc[ci];
    }
}

template <typename T, typename... A>
void conv_bwd_in_dispatch(int ic, A&&... a) {
    switch (ic) {
        case 4: conv_bwd_in_row<T, 4>(a...); break;
        case 8: conv_bwd_in_row<T, 8>(a...); break;
        case 32: conv_bwd_in_row<T, 32>(a...); break;
        case 64: conv_bwd_in_row<T, 64>(a...); break;
        case 128: conv_bwd_in_row<T, 128>(a...); break;
        default: conv_bwd_in_row<T, 0>(a...); break;
    }
}

}  // namespace

template <typename T>
void conv2d_fwd(const Conv2dDims& d, const T* x, const T* k, const T* bias, T* y) {
    const int nt = threads();
    const std::size_t xs = static_cast<std::size_t>(d.in_h) * d.in_w * d.in_c;
    const std::size_t ys = static_cast<std::size_t>(d.out_h) * d.out_w * d.out_c;
    const Band by = interior(d.out_h, d.in_h, d.k_h, d.stride_h, d.pad_top);
    const Band bx = interior(d.out_w, d.in_w, d.k_w, d.stride_w, d.pad_left);
    const bool small = d.out_c <= kAccCap;

#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
    for (int b = 0; b < d.batch; ++b)
        for (int oy = 0; oy < d.out_h; ++oy) {
            const T* __restrict__ xb = x + static_cast<std::size_t>(b) * xs;
            T* __restrict__ yrow = y + static_cast<std::size_t>(b) * ys +
                                   static_cast<std::size_t>(oy) * d.out_w * d.out_c;
            const int iy0 = oy * d.stride_h - d.pad_top;

            // checked path, used for every border pixel
            auto edge = [&](int ox) {
                T* __restrict__ yo = yrow + static_cast<std::size_t>(ox) * d.out_c;
                for (int co = 0; co < d.out_c; ++co) yo[co] = bias[co];
                const int ix0 = ox * d.stride_w - d.pad_left;
                for (int ky = 0; ky < d.k_h; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= d.in_h) continue;
                    for (int kx = 0; kx < d.k_w; ++kx) {
                        const int ix = ix0 + kx;
                        if (ix < 0 || ix >= d.in_w) continue;
                        const T* __restrict__ xp =
                            xb + (static_cast<std::size_t>(iy) * d.in_w + ix) * d.in_c;
                        const T* __restrict__ kp =
                            k + (static_cast<std::size_t>(ky) * d.k_w + kx) * d.in_c * d.out_c;
                        for (int ci = 0; ci < d.in_c; ++ci) {
                            const T xv = xp[ci];
                            const T* __restrict__ kr = kp + static_cast<std::size_t>(ci) * d.out_c;
                            for (int co = 0; co < d.out_c; ++co) yo[co] = std::fma(xv, kr[co], yo[co]);
                        }
                    }
                }
            };

            if (oy < by.lo || oy >= by.hi || !small) {
                for (int ox = 0; ox < d.out_w; ++ox) edge(ox);
                continue;
            }
            for (int ox = 0; ox < bx.lo; ++ox) edge(ox);
            conv_fwd_dispatch<T>(d.out_c, d, xb, k, bias, yrow, iy0, bx.lo, bx.hi);
            for (int ox = bx.hi; ox < d.out_w; ++ox) edge(ox);
        }
}

template <typename T>
void conv2d_bwd_input(const Conv2dDims& d, const T* dy, const T* k, T* dx) {
    const int nt = threads();
    const std::size_t xs = static_cast<std::size_t>(d.in_h) * d.in_w * d.in_c;
    const std::size_t ys = static_cast<std::size_t>(d.out_h) * d.out_w * d.out_c;
    // transpose the kernel to (ky,kx,co,ci) so the inner axpy runs along ci
    std::vector<T> kt(static_cast<std::size_t>(d.k_h) * d.k_w * d.out_c * d.in_c);
    for (int ky = 0; ky < d.k_h; ++ky)
        for (int kx = 0; kx < d.k_w; ++kx) {
            const std::size_t tap = static_cast<std::size_t>(ky) * d.k_w + kx;
            for (int ci = 0; ci < d.in_c; ++ci)
                for (int co = 0; co < d.out_c; ++co)
                    kt[(tap * d.out_c + co) * d.in_c + ci] =
                        k[(tap * d.in_c + ci) * d.out_c + co];
        }

    // input pixels whose taps all map to valid output rows/cols (stride 1)
    const bool unit = d.stride_h == 1 && d.stride_w == 1;
    const int iy_lo = unit ? std::max(0, d.k_h - 1 - d.pad_top) : 0;
    const int iy_hi = unit ? std::min(d.in_h, d.out_h - d.pad_top) : 0;
    const int ix_lo = unit ? std::max(0, d.k_w - 1 - d.pad_left) : 0;
    const int ix_hi = unit ? std::min(d.in_w, d.out_w - d.pad_left) : 0;
    const bool small = d.in_c <= kAccCap;

#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
    for (int b = 0; b < d.batch; ++b)
        for (int iy = 0; iy < d.in_h; ++iy) {
            const T* __restrict__ dyb = dy + static_cast<std::size_t>(b) * ys;
            T* __restrict__ dxrow = dx + static_cast<std::size_t>(b) * xs +
                                    static_cast<std::size_t>(iy) * d.in_w * d.in_c;
            T stack[kAccCap];
            std::vector<T> spill(small ? 0 : d.in_c);
            T* const buf = small ? stack : spill.data();

            // checked path; the local accumulator keeps each element's sum
            // bracketed exactly like the reference
            auto edge = [&](int ix, T* __restrict__ ap) {
                for (int ci = 0; ci < d.in_c; ++ci) ap[ci] = T(0);
                for (int ky = 0; ky < d.k_h; ++ky) {
                    const int ny = iy + d.pad_top - ky;
                    if (ny % d.stride_h != 0) continue;
                    const int oy = ny / d.stride_h;
                    if (oy < 0 || oy >= d.out_h) continue;
                    for (int kx = 0; kx < d.k_w; ++kx) {
                        const int nx = ix + d.pad_left - kx;
                        if (nx % d.stride_w != 0) continue;
                        const int ox = nx / d.stride_w;
                        if (ox < 0 || ox >= d.out_w) continue;
                        const T* __restrict__ dyp =
                            dyb + (static_cast<std::size_t>(oy) * d.out_w + ox) * d.out_c;
                        const T* __restrict__ ktp =
                            kt.data() +
                            (static_cast<std::size_t>(ky) * d.k_w + kx) * d.out_c * d.in_c;
                        for (int co = 0; co < d.out_c; ++co) {
                            const T dyv = dyp[co];
                            const T* __restrict__ kr = ktp + static_cast<std::size_t>(co) * d.in_c;
                            for (int ci = 0; ci < d.in_c; ++ci) ap[ci] = std::fma(dyv, kr[ci], ap[ci]);
                        }
                    }
                }
                T* __restrict__ dxp = dxrow + static_cast<std::size_t>(ix) * d.in_c;
                for (int ci = 0; ci < d.in_c; ++ci) dxp[ci] += ap[ci];
            };

            if (!unit || iy < iy_lo || iy >= iy_hi) {
                for (int ix = 0; ix < d.in_w; ++ix) edge(ix, buf);
                continue;
            }
            for (int ix = 0; ix < ix_lo; ++ix) edge(ix, buf);
            if (small)
                conv_bwd_in_dispatch<T>(d.in_c, d, dyb, kt.data(), dxrow, iy, ix_lo, ix_hi);
            else
                for (int ix = ix_lo; ix < ix_hi; ++ix) edge(ix, buf);
            for (int ix = ix_hi; ix < d.in_w; ++ix) edge(ix, buf);
        }
}

template <typename T>
void conv2d_bwd_kernel(const Conv2dDims& d, const T* x, const T* dy, T* dk) {
    const int nt = threads();
    const std::size_t xs = static_cast<std::size_t>(d.in_h) * d.in_w * d.in_c;
    const std::size_t ys = static_cast<std::size_t>(d.out_h) * d.out_w * d.out_c;
    const std::size_t ksz = static_cast<std::size_t>(d.k_h) * d.k_w * d.in_c * d.out_c;
    const int rows = d.batch * d.out_h;

    // capture by value so stores through `out` cannot alias the operands
    auto scatter_rows = [d, x, dy, xs, ys](int r0, int r1, T* __restrict__ out) {
        for (int r = r0; r < r1; ++r) {
            const int b = r / d.out_h, oy = r % d.out_h;
            const T* __restrict__ xb = x + static_cast<std::size_t>(b) * xs;
            const T* __restrict__ dyrow = dy + static_cast<std::size_t>(b) * ys +
                                          static_cast<std::size_t>(oy) * d.out_w * d.out_c;
            for (int ox = 0; ox < d.out_w; ++ox) {
                const T* __restrict__ dyp = dyrow + static_cast<std::size_t>(ox) * d.out_c;
                for (int ky = 0; ky < d.k_h; ++ky) {
                    const int iy = oy * d.stride_h - d.pad_top + ky;
                    if (iy < 0 || iy >= d.in_h) continue;
                    for (int kx = 0; kx < d.k_w; ++kx) {
                        const int ix = ox * d.stride_w - d.pad_left + kx;
                        if (ix < 0 || ix >= d.in_w) continue;
                        const T* __restrict__ xp =
                            xb + (static_cast<std::size_t>(iy) * d.in_w + ix) * d.in_c;
                        T* __restrict__ op =
                            out + (static_cast<std::size_t>(ky) * d.k_w + kx) * d.in_c * d.out_c;
                        if (d.out_c == 1) {
                            // single output channel: run the lanes along ci instead
                            const T dyv = dyp[0];
                            for (int ci = 0; ci < d.in_c; ++ci) op[ci] = std::fma(xp[ci], dyv, op[ci]);
                        } else {
                            for (int ci = 0; ci < d.in_c; ++ci) {
                                const T xv = xp[ci];
                                T* __restrict__ orow = op + static_cast<std::size_t>(ci) * d.out_c;
                                for (int co = 0; co < d.out_c; ++co)
                                    orow[co] = std::fma(xv, dyp[co], orow[co]);
                            }
                        }
                    }
                }
            }
        }
    };

    if (nt <= 1 || rows < 2) {
        serial::conv2d_bwd_kernel(d, x, dy, dk);  // degenerates to the reference
        return;
    }
    // one partial buffer per row chunk; chunk contents do not depend on
    // which thread runs them, so results are stable for a fixed nt
    const int chunks = std::min(nt, rows);
    const int per = (rows + chunks - 1) / chunks;
    std::vector<T> partial(static_cast<std::size_t>(chunks) * ksz, T(0));
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int c = 0; c < chunks; ++c)
        scatter_rows(c * per, std::min(rows, (c + 1) * per),
                     partial.data() + static_cast<std::size_t>(c) * ksz);
    for (std::size_t e = 0; e < ksz; ++e) {
        T acc = 0;
        for (int c = 0; c < chunks; ++c) acc += partial[static_cast<std::size_t>(c) * ksz + e];
        dk[e] += acc;
    }
}

template <typename T>
void conv2d_bwd_bias(const Conv2dDims& d, const T* dy, T* db) {
    const int nt = threads();
    const std::size_t cells = static_cast<std::size_t>(d.batch) * d.out_h * d.out_w;
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (int co = 0; co < d.out_c; ++co) {
        T acc = db[co];  // seed with the running value so the sum brackets like the reference
        for (std::size_t i = 0; i < cells; ++i) acc += dy[i * d.out_c + co];
        db[co] = acc;
    }
}

template <typename T>
void dense_fwd(int batch, int n, int m, const T* x, const T* w, const T* bias, T* y) {
    const int nt = threads();
    constexpr int JB = 64, IB = 64;
    const int jblocks = (m + JB - 1) / JB;
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (int jb = 0; jb < jblocks; ++jb) {
        const int j0 = jb * JB, width = std::min(m, j0 + JB) - j0;
        // accumulator tile for every batch row, so each weight block is
        // loaded once and reused across the batch
        std::vector<T> acc(static_cast<std::size_t>(batch) * JB);
        for (int b = 0; b < batch; ++b) {
            T* __restrict__ ar = acc.data() + static_cast<std::size_t>(b) * JB;
            for (int j = 0; j < width; ++j) ar[j] = bias[j0 + j];
        }
        for (int i0 = 0; i0 < n; i0 += IB) {
            const int i1 = std::min(n, i0 + IB);
            for (int b = 0; b < batch; ++b) {
                const T* __restrict__ xb = x + static_cast<std::size_t>(b) * n;
                T* __restrict__ ar = acc.data() + static_cast<std::size_t>(b) * JB;
                if (width == JB) {
                    // unroll the input dimension so the tile stays in registers
                    int i = i0;
                    for (; i + 4 <= i1; i += 4) {
                        const T x0 = xb[i], x1 = xb[i + 1], x2 = xb[i + 2], x3 = xb[i + 3];
                        const T* __restrict__ w0 = w + static_cast<std::size_t>(i) * m + j0;
                        const T* __restrict__ w1 = w0 + m;
                        const T* __restrict__ w2 = w1 + m;
                        const T* __restrict__ w3 = w2 + m;
                        for (int j = 0; j < JB; ++j) {
                            T t = ar[j];
                            t = std::fma(x0, w0[j], t);
                            t = std::fma(x1, w1[j], t);
                            t = std::fma(x2, w2[j], t);
                            t = std::fma(x3, w3[j], t);
                            ar[j] = t;
                        }
                    }
                    for (; i < i1; ++i) {
                        const T xv = xb[i];
                        const T* __restrict__ wr = w + static_cast<std::size_t>(i) * m + j0;
                        for (int j = 0; j < JB; ++j) ar[j] = std::fma(xv, wr[j], ar[j]);
                    }
                } else
                    for (int i = i0; i < i1; ++i) {
                        const T xv = xb[i];
                        const T* __restrict__ wr = w + static_cast<std::size_t>(i) * m + j0;
                        for (int j = 0; j < width; ++j) ar[j] = std::fma(xv, wr[j], ar[j]);
                    }
            }
        }
        for (int b = 0; b < batch; ++b) {
            const T* __restrict__ ar = acc.data() + static_cast<std::size_t>(b) * JB;
            T* __restrict__ yb = y + static_cast<std::size_t>(b) * m + j0;
            for (int j = 0; j < width; ++j) yb[j] = ar[j];
        }
    }
}

template <typename T>
void dense_bwd_input(int batch, int n, int m, const T* dy, const T* w, T* dx) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (int i = 0; i < n; ++i) {
        const T* wr = w + static_cast<std::size_t>(i) * m;
        for (int b = 0; b < batch; ++b)
            dx[static_cast<std::size_t>(b) * n + i] +=
                detail::dot_lanes(wr, dy + static_cast<std::size_t>(b) * m,
                                  static_cast<std::size_t>(m));
    }
}

template <typename T>
void dense_bwd_weights(int batch, int n, int m, const T* x, const T* dy, T* dw) {
    const int nt = threads();
    constexpr int JB = 64;
    const int jblocks = (m + JB - 1) / JB;
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (int jb = 0; jb < jblocks; ++jb) {
        const int j0 = jb * JB, width = std::min(m, j0 + JB) - j0;
        for (int i = 0; i < n; ++i) {
            T* __restrict__ dwr = dw + static_cast<std::size_t>(i) * m + j0;
            T acc[JB];
            for (int j = 0; j < width; ++j) acc[j] = dwr[j];
            for (int b = 0; b < batch; ++b) {
                const T xv = x[static_cast<std::size_t>(b) * n + i];
                if (xv == T(0)) continue;  // ReLU inputs are often sparse
                const T* __restrict__ dyb = dy + static_cast<std::size_t>(b) * m + j0;
                if (width == JB)
                    for (int j = 0; j < JB; ++j) acc[j] = std::fma(xv, dyb[j], acc[j]);
                else
                    for (int j = 0; j < width; ++j) acc[j] = std::fma(xv, dyb[j], acc[j]);
            }
            for (int j = 0; j < width; ++j) dwr[j] = acc[j];
        }
    }
}

template <typename T>
void dense_bwd_bias(int batch, int /*n*/, int m, const T* dy, T* db) {
    const int nt = threads();
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (int j = 0; j < m; ++j) {
        T acc = db[j];
        for (int b = 0; b < batch; ++b) acc += dy[static_cast<std::size_t>(b) * m + j];
        db[j] = acc;
    }
}

template <typename T>
void resize_nn_fwd(int batch, int h, int w, int c, int th, int tw, const T* x, T* y) {
    const int nt = threads();
    const std::size_t xs = static_cast<std::size_t>(h) * w * c;
    const std::size_t ys = static_cast<std::size_t>(th) * tw * c;
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
    for (int b = 0; b < batch; ++b)
        for (int i = 0; i < th; ++i) {
            const T* xb = x + static_cast<std::size_t>(b) * xs;
            T* yp = y + static_cast<std::size_t>(b) * ys + static_cast<std::size_t>(i) * tw * c;
            const int sy = static_cast<int>(static_cast<long long>(i) * h / th);
            for (int j = 0; j < tw; ++j) {
                const int sx = static_cast<int>(static_cast<long long>(j) * w / tw);
                const T* xp = xb + (static_cast<std::size_t>(sy) * w + sx) * c;
                for (int ch = 0; ch < c; ++ch) yp[static_cast<std::size_t>(j) * c + ch] = xp[ch];
            }
        }
}

template <typename T>
void resize_nn_bwd(int batch, int h, int w, int c, int th, int tw, const T* dy, T* dx) {
    const int nt = threads();
    const std::size_t xs = static_cast<std::size_t>(h) * w * c;
    const std::size_t ys = static_cast<std::size_t>(th) * tw * c;
    auto lo = [](int s, int tgt, int src) {
        return static_cast<int>((static_cast<long long>(s) * tgt + src - 1) / src);
    };
#pragma omp parallel for collapse(2) schedule(static) num_threads(nt) if (nt > 1)
    for (int b = 0; b < batch; ++b)
        for (int y0 = 0; y0 < h; ++y0) {
            const T* dyb = dy + static_cast<std::size_t>(b) * ys;
            T* dxrow = dx + static_cast<std::size_t>(b) * xs + static_cast<std::size_t>(y0) * w * c;
            const int i0 = lo(y0, th, h), i1 = std::min(th, lo(y0 + 1, th, h));
            for (int x0 = 0; x0 < w; ++x0) {
                const int j0 = lo(x0, tw, w), j1 = std::min(tw, lo(x0 + 1, tw, w));
                T* dxp = dxrow + static_cast<std::size_t>(x0) * c;
                for (int i = i0; i < i1; ++i)
                    for (int j = j0; j < j1; ++j) {
                        const T* dyp = dyb + (static_cast<std::size_t>(i) * tw + j) * c;
                        for (int ch = 0; ch < c; ++ch) dxp[ch] += dyp[ch];
                    }
            }
        }
}

template <typename T>
void lrelu_fwd(std::size_t n, T alpha, const T* x, T* y) {
    const int nt = threads();
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (long long i = 0; i < nn; ++i) y[i] = x[i] > T(0) ? x[i] : alpha * x[i];
}

template <typename T>
void lrelu_bwd(std::size_t n, T alpha, const T* x, const T* dy, T* dx) {
    const int nt = threads();
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (long long i = 0; i < nn; ++i)
        dx[i] = x[i] > T(0) ? dx[i] + dy[i] : std::fma(alpha, dy[i], dx[i]);
}

template <typename T>
void sigmoid_fwd(std::size_t n, const T* x, T* y) {
    const int nt = threads();
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (long long i = 0; i < nn; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_bwd(std::size_t n, const T* y, const T* dy, T* dx) {
    const int nt = threads();
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
    for (long long i = 0; i < nn; ++i) {
        const T t = dy[i] * y[i];
        dx[i] = std::fma(t, T(1) - y[i], dx[i]);
    }
}

#define DINN_INSTANTIATE(T)                                                              \
    template void conv2d_fwd<T>(const Conv2dDims&, const T*, const T*, const T*, T*);   \
    template void conv2d_bwd_input<T>(const Conv2dDims&, const T*, const T*, T*);       \
    template void conv2d_bwd_kernel<T>(const Conv2dDims&, const T*, const T*, T*);      \
    template void conv2d_bwd_bias<T>(const Conv2dDims&, const T*, T*);                  \
    template void dense_fwd<T>(int, int, int, const T*, const T*, const T*, T*);        \
    template void dense_bwd_input<T>(int, int, int, const T*, const T*, T*);            \
    template void dense_bwd_weights<T>(int, int, int, const T*, const T*, T*);          \
    template void dense_bwd_bias<T>(int, int, int, const T*, T*);                       \
    template void resize_nn_fwd<T>(int, int, int, int, int, int, const T*, T*);         \
    template void resize_nn_bwd<T>(int, int, int, int, int, int, const T*, T*);         \
    template void lrelu_fwd<T>(std::size_t, T, const T*, T*);                           \
    template void lrelu_bwd<T>(std::size_t, T, const T*, const T*, T*);                 \
    template void sigmoid_fwd<T>(std::size_t, const T*, T*);                            \
    template void sigmoid_bwd<T>(std::size_t, const T*, const T*, T*);

DINN_INSTANTIATE(float)
DINN_INSTANTIATE(double)
#undef DINN_INSTANTIATE

}  // namespace dinn::kern::omp
