#pragma once

#include <cstddef>

namespace dinn::kern {

// Geometry of a 2-d convolution with ceil-mode "same" padding: the output
// spatial extent is ceil(in/stride) and any odd padding goes to the
// bottom/right edge.
struct Conv2dDims {
    int batch;
    int in_h, in_w, in_c;
    int k_h, k_w, out_c;
    int stride_h, stride_w;
    int out_h, out_w;
    int pad_top, pad_left;
};

Conv2dDims conv2d_dims(int batch, int in_h, int in_w, int in_c, int k_h, int k_w,
                       int out_c, int stride_h, int stride_w);

// All backward kernels accumulate (+=) into their output buffer so that a
// node feeding several consumers sums its incoming gradients. Callers
// zero-fill on allocation.
//
// serial:: holds the reference implementations, plain loops in a fixed
// order. omp:: holds the parallel versions. Forward ops, input gradients
// and weight-row gradients are gathers (each output cell owns its own
// serial sum), so they match the reference bitwise at any worker count.
// conv2d_bwd_kernel reduces per-thread partials and matches bitwise only
// at one worker; otherwise to rounding error.

#define DINN_KERNELS_DECL(ns)                                                           \
    namespace ns {                                                                      \
    template <typename T>                                                               \
    void conv2d_fwd(const Conv2dDims& d, const T* x, const T* k, const T* bias, T* y);  \
    template <typename T>                                                               \
    void conv2d_bwd_input(const Conv2dDims& d, const T* dy, const T* k, T* dx);         \
    template <typename T>                                                               \
    void conv2d_bwd_kernel(const Conv2dDims& d, const T* x, const T* dy, T* dk);        \
    template <typename T>                                                               \
    void conv2d_bwd_bias(const Conv2dDims& d, const T* dy, T* db);                      \
    template <typename T>                                                               \
    void dense_fwd(int batch, int n, int m, const T* x, const T* w, const T* bias,      \
                   T* y);                                                               \
    template <typename T>                                                               \
    void dense_bwd_input(int batch, int n, int m, const T* dy, const T* w, T* dx);      \
    template <typename T>                                                               \
    void dense_bwd_weights(int batch, int n, int m, const T* x, const T* dy, T* dw);    \
    template <typename T>                                                               \
    void dense_bwd_bias(int batch, int n, int m, const T* dy, T* db);                   \
    template <typename T>                                                               \
    void resize_nn_fwd(int batch, int h, int w, int c, int th, int tw, const T* x,      \
                       T* y);                                                           \
    template <typename T>                                                               \
    void resize_nn_bwd(int batch, int h, int w, int c, int th, int tw, const T* dy,     \
                       T* dx);                                                          \
    template <typename T>                                                               \
    void lrelu_fwd(std::size_t n, T alpha, const T* x, T* y);                           \
    template <typename T>                                                               \
    void lrelu_bwd(std::size_t n, T alpha, const T* x, const T* dy, T* dx);             \
    template <typename T>                                                               \
    void sigmoid_fwd(std::size_t n, const T* x, T* y);                                  \
    template <typename T>                                                               \
    void sigmoid_bwd(std::size_t n, const T* y, const T* dy, T* dx);                    \
    }

DINN_KERNELS_DECL(serial)
DINN_KERNELS_DECL(omp)

#undef DINN_KERNELS_DECL

// Dispatch: the omp kernels at the configured worker count (they skip the
// parallel region at one worker). serial:: stays available as the reference
// for tests and the kernel benchmark.
namespace dispatch {
template <typename T>
void conv2d_fwd(const Conv2dDims& d, const T* x, const T* k, const T* bias, T* y);
template <typename T>
void conv2d_bwd_input(const Conv2dDims& d, const T* dy, const T* k, T* dx);
template <typename T>
void conv2d_bwd_kernel(const Conv2dDims& d, const T* x, const T* dy, T* dk);
template <typename T>
void conv2d_bwd_bias(const Conv2dDims& d, const T* dy, T* db);
template <typename T>
void dense_fwd(int batch, int n, int m, const T* x, const T* w, const T* bias, T* y);
template <typename T>
void dense_bwd_input(int batch, int n, int m, const T* dy, const T* w, T* dx);
template <typename T>
void dense_bwd_weights(int batch, int n, int m, const T* x, const T* dy, T* dw);
template <typename T>
void dense_bwd_bias(int batch, int n, int m, const T* dy, T* db);
template <typename T>
void resize_nn_fwd(int batch, int h, int w, int c, int th, int tw, const T* x, T* y);
template <typename T>
void resize_nn_bwd(int batch, int h, int w, int c, int th, int tw, const T* dy, T* dx);
template <typename T>
void lrelu_fwd(std::size_t n, T alpha, const T* x, T* y);
template <typename T>
void lrelu_bwd(std::size_t n, T alpha, const T* x, const T* dy, T* dx);
template <typename T>
void sigmoid_fwd(std::size_t n, const T* x, T* y);
template <typename T>
void sigmoid_bwd(std::size_t n, const T* y, const T* dy, T* dx);
}  // namespace dispatch

}  // namespace dinn::kern
