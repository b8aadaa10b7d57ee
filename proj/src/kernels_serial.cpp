#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "dinn/common.hpp"
#include "dinn/kernels.hpp"
#include "dinn/kernels_detail.hpp"

namespace dinn::kern {

Conv2dDims conv2d_dims(int batch, int in_h, int in_w, int in_c, int k_h, int k_w,
                       int out_c, int stride_h, int stride_w) {
    if (batch < 1 || in_h < 1 || in_w < 1 || in_c < 1 || k_h < 1 || k_w < 1 ||
        out_c < 1 || stride_h < 1 || stride_w < 1)
        throw ShapeError("conv2d: all dimensions and strides must be >= 1");
    Conv2dDims d;
    d.batch = batch;
    d.in_h = in_h;
    d.in_w = in_w;
    d.in_c = in_c;
    d.k_h = k_h;
    d.k_w = k_w;
    d.out_c = out_c;
    d.stride_h = stride_h;
    d.stride_w = stride_w;
    // ceil-mode "same": out = ceil(in/stride), odd padding goes bottom/right
    d.out_h = (in_h + stride_h - 1) / stride_h;
    d.out_w = (in_w + stride_w - 1) / stride_w;
    const int pad_h = std::max((d.out_h - 1) * stride_h + k_h - in_h, 0);
    const int pad_w = std::max((d.out_w - 1) * stride_w + k_w - in_w, 0);
    d.pad_top = pad_h / 2;
    d.pad_left = pad_w / 2;
    return d;
}

namespace serial {

// Reference kernels: plain loops in a fixed order. The omp versions must
// accumulate every output element in the same order as these. Multiply-adds
// are spelled std::fma here and in the omp file so both sides round each
// step identically no matter how the optimizer contracts expressions.

template <typename T>
void conv2d_fwd(const Conv2dDims& d, const T* x, const T* k, const T* bias, T* y) {
    const std::size_t xs = static_cast<std::size_t>(d.in_h) * d.in_w * d.in_c;
    const std::size_t ys = static_cast<std::size_t>(d.out_h) * d.out_w * d.out_c;
    for (int b = 0; b < d.batch; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * xs;
        T* yb = y + static_cast<std::size_t>(b) * ys;
        for (int oy = 0; oy < d.out_h; ++oy)
            for (int ox = 0; ox < d.out_w; ++ox)
                for (int co = 0; co < d.out_c; ++co) {
                    T acc = bias[co];
                    for (int ky = 0; ky < d.k_h; ++ky) {
                        const int iy = oy * d.stride_h - d.pad_top + ky;
                        if (iy < 0 || iy >= d.in_h) continue;
                        for (int kx = 0; kx < d.k_w; ++kx) {
                            const int ix = ox * d.stride_w - d.pad_left + kx;
                            if (ix < 0 || ix >= d.in_w) continue;
                            const T* xp = xb + (static_cast<std::size_t>(iy) * d.in_w + ix) * d.in_c;
                            const T* kp = k + ((static_cast<std::size_t>(ky) * d.k_w + kx) * d.in_c) * d.out_c + co;
                            for (int ci = 0; ci < d.in_c; ++ci)
                                acc = std::fma(xp[ci], kp[static_cast<std::size_t>(ci) * d.out_c], acc);
                        }
                    }
                    yb[(static_cast<std::size_t>(oy) * d.out_w + ox) * d.out_c + co] = acc;
                }
    }
}

template <typename T>
void conv2d_bwd_input(const Conv2dDims& d, const T* dy, const T* k, T* dx) {
    const std::size_t xs = static_cast<std::size_t>(d.in_h) * d.in_w * d.in_c;
    const std::size_t ys = static_cast<std::size_t>(d.out_h) * d.out_w * d.out_c;
    for (int b = 0; b < d.batch; ++b) {
        const T* dyb = dy + static_cast<std::size_t>(b) * ys;
        T* dxb = dx + static_cast<std::size_t>(b) * xs;
        for (int iy = 0; iy < d.in_h; ++iy)
            for (int ix = 0; ix < d.in_w; ++ix)
                for (int ci = 0; ci < d.in_c; ++ci) {
                    T acc = 0;
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
                            const T* dyp = dyb + (static_cast<std::size_t>(oy) * d.out_w + ox) * d.out_c;
                            const T* kp = k + ((static_cast<std::size_t>(ky) * d.k_w + kx) * d.in_c + ci) * d.out_c;
                            for (int co = 0; co < d.out_c; ++co) acc = std::fma(kp[co], dyp[co], acc);
                        }
                    }
                    dxb[(static_cast<std::size_t>(iy) * d.in_w + ix) * d.in_c + ci] += acc;
                }
    }
}

template <typename T>
void conv2d_bwd_kernel(const Conv2dDims& d, const T* x, const T* dy, T* dk) {
    const std::size_t xs = static_cast<std::size_t>(d.in_h) * d.in_w * d.in_c;
    const std::size_t ys = static_cast<std::size_t>(d.out_h) * d.out_w * d.out_c;
    for (int b = 0; b < d.batch; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * xs;
        const T* dyb = dy + static_cast<std::size_t>(b) * ys;
        for (int oy = 0; oy < d.out_h; ++oy)
            for (int ox = 0; ox < d.out_w; ++ox) {
                const T* dyp = dyb + (static_cast<std::size_t>(oy) * d.out_w + ox) * d.out_c;
                for (int ky = 0; ky < d.k_h; ++ky) {
                    const int iy = oy * d.stride_h - d.pad_top + ky;
                    if (iy < 0 || iy >= d.in_h) continue;
                    for (int kx = 0; kx < d.k_w; ++kx) {
                        const int ix = ox * d.stride_w - d.pad_left + kx;
                        if (ix < 0 || ix >= d.in_w) continue;
                        const T* xp = xb + (static_cast<std::size_t>(iy) * d.in_w + ix) * d.in_c;
                        T* dkp = dk + ((static_cast<std::size_t>(ky) * d.k_w + kx) * d.in_c) * d.out_c;
                        for (int ci = 0; ci < d.in_c; ++ci) {
                            const T xv = xp[ci];
                            T* dkr = dkp + static_cast<std::size_t>(ci) * d.out_c;
                            for (int co = 0; co < d.out_c; ++co) dkr[co] = std::fma(xv, dyp[co], dkr[co]);
                        }
                    }
                }
            }
    }
}

template <typename T>
void conv2d_bwd_bias(const Conv2dDims& d, const T* dy, T* db) {
    const std::size_t cells = static_cast<std::size_t>(d.batch) * d.out_h * d.out_w;
    for (std::size_t i = 0; i < cells; ++i) {
        const T* dyp = dy + i * d.out_c;
        for (int co = 0; co < d.out_c; ++co) db[co] += dyp[co];
    }
}

template <typename T>
void dense_fwd(int batch, int n, int m, const T* x, const T* w, const T* bias, T* y) {
    for (int b = 0; b < batch; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * n;
        T* yb = y + static_cast<std::size_t>(b) * m;
        for (int j = 0; j < m; ++j) yb[j] = bias[j];
        for (int i = 0; i < n; ++i) {
            const T xv = xb[i];
            const T* wr = w + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) yb[j] = std::fma(xv, wr[j], yb[j]);
        }
    }
}

template <typename T>
void dense_bwd_input(int batch, int n, int m, const T* dy, const T* w, T* dx) {
    for (int b = 0; b < batch; ++b) {
        const T* dyb = dy + static_cast<std::size_t>(b) * m;
        T* dxb = dx + static_cast<std::size_t>(b) * n;
        for (int i = 0; i < n; ++i)
            dxb[i] += detail::dot_lanes(w + static_cast<std::size_t>(i) * m, dyb,
                                        static_cast<std::size_t>(m));
    }
}

template <typename T>
void dense_bwd_weights(int batch, int n, int m, const T* x, const T* dy, T* dw) {
    for (int b = 0; b < batch; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * n;
        const T* dyb = dy + static_cast<std::size_t>(b) * m;
        for (int i = 0; i < n; ++i) {
            const T xv = xb[i];
            if (xv == T(0)) continue;  // ReLU inputs are often sparse
            T* dwr = dw + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) dwr[j] = std::fma(xv, dyb[j], dwr[j]);
        }
    }
}

template <typename T>
void dense_bwd_bias(int batch, int /*n*/, int m, const T* dy, T* db) {
    for (int b = 0; b < batch; ++b) {
        const T* dyb = dy + static_cast<std::size_t>(b) * m;
        for (int j = 0; j < m; ++j) db[j] += dyb[j];
    }
}

template <typename T>
void resize_nn_fwd(int batch, int h, int w, int c, int th, int tw, const T* x, T* y) {
    const std::size_t xs = static_cast<std::size_t>(h) * w * c;
    const std::size_t ys = static_cast<std::size_t>(th) * tw * c;
    for (int b = 0; b < batch; ++b) {
        const T* xb = x + static_cast<std::size_t>(b) * xs;
        T* yb = y + static_cast<std::size_t>(b) * ys;
        for (int i = 0; i < th; ++i) {
            const int sy = static_cast<int>(static_cast<long long>(i) * h / th);
            for (int j = 0; j < tw; ++j) {
                const int sx = static_cast<int>(static_cast<long long>(j) * w / tw);
                const T* xp = xb + (static_cast<std::size_t>(sy) * w + sx) * c;
                T* yp = yb + (static_cast<std::size_t>(i) * tw + j) * c;
                for (int ch = 0; ch < c; ++ch) yp[ch] = xp[ch];
            }
        }
    }
}

template <typename T>
void resize_nn_bwd(int batch, int h, int w, int c, int th, int tw, const T* dy, T* dx) {
    const std::size_t xs = static_cast<std::size_t>(h) * w * c;
    const std::size_t ys = static_cast<std::size_t>(th) * tw * c;
    // gather: target rows i with floor(i*h/th) == y form the contiguous
    // range [ceil(y*th/h), ceil((y+1)*th/h))
    auto lo = [](int s, int tgt, int src) {
        return static_cast<int>((static_cast<long long>(s) * tgt + src - 1) / src);
    };
    for (int b = 0; b < batch; ++b) {
        const T* dyb = dy + static_cast<std::size_t>(b) * ys;
        T* dxb = dx + static_cast<std::size_t>(b) * xs;
        for (int y0 = 0; y0 < h; ++y0) {
            const int i0 = lo(y0, th, h), i1 = std::min(th, lo(y0 + 1, th, h));
            for (int x0 = 0; x0 < w; ++x0) {
                const int j0 = lo(x0, tw, w), j1 = std::min(tw, lo(x0 + 1, tw, w));
                T* dxp = dxb + (static_cast<std::size_t>(y0) * w + x0) * c;
                for (int i = i0; i < i1; ++i)
                    for (int j = j0; j < j1; ++j) {
                        const T* dyp = dyb + (static_cast<std::size_t>(i) * tw + j) * c;
                        for (int ch = 0; ch < c; ++ch) dxp[ch] += dyp[ch];
                    }
            }
        }
    }
}

template <typename T>
void lrelu_fwd(std::size_t n, T alpha, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : alpha * x[i];
}

template <typename T>
void lrelu_bwd(std::size_t n, T alpha, const T* x, const T* dy, T* dx) {
    // slope at exactly zero is alpha, matching the forward branch
    for (std::size_t i = 0; i < n; ++i)
        dx[i] = x[i] > T(0) ? dx[i] + dy[i] : std::fma(alpha, dy[i], dx[i]);
}

template <typename T>
void sigmoid_fwd(std::size_t n, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_bwd(std::size_t n, const T* y, const T* dy, T* dx) {
    for (std::size_t i = 0; i < n; ++i) {
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

}  // namespace serial
}  // namespace dinn::kern
