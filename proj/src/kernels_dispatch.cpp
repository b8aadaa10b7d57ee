#include <cstddef>

#include "dinn/kernels.hpp"

namespace dinn::kern::dispatch {

// The omp kernels skip their parallel region at one worker and accumulate
// in the reference order, so they are safe to use unconditionally.

template <typename T>
void conv2d_fwd(const Conv2dDims& d, const T* x, const T* k, const T* bias, T* y) {
    omp::conv2d_fwd(d, x, k, bias, y);
}
template <typename T>
void conv2d_bwd_input(const Conv2dDims& d, const T* dy, const T* k, T* dx) {
    omp::conv2d_bwd_input(d, dy, k, dx);
}
template <typename T>
void conv2d_bwd_kernel(const Conv2dDims& d, const T* x, const T* dy, T* dk) {
    omp::conv2d_bwd_kernel(d, x, dy, dk);
}
template <typename T>
void conv2d_bwd_bias(const Conv2dDims& d, const T* dy, T* db) {
    omp::conv2d_bwd_bias(d, dy, db);
}
template <typename T>
void dense_fwd(int batch, int n, int m, const T* x, const T* w, const T* bias, T* y) {
    omp::dense_fwd(batch, n, m, x, w, bias, y);
}
template <typename T>
void dense_bwd_input(int batch, int n, int m, const T* dy, const T* w, T* dx) {
    omp::dense_bwd_input(batch, n, m, dy, w, dx);
}
template <typename T>
void dense_bwd_weights(int batch, int n, int m, const T* x, const T* dy, T* dw) {
    omp::dense_bwd_weights(batch, n, m, x, dy, dw);
}
template <typename T>
void dense_bwd_bias(int batch, int n, int m, const T* dy, T* db) {
    omp::dense_bwd_bias(batch, n, m, dy, db);
}
template <typename T>
void resize_nn_fwd(int batch, int h, int w, int c, int th, int tw, const T* x, T* y) {
    omp::resize_nn_fwd(batch, h, w, c, th, tw, x, y);
}
template <typename T>
void resize_nn_bwd(int batch, int h, int w, int c, int th, int tw, const T* dy, T* dx) {
    omp::resize_nn_bwd(batch, h, w, c, th, tw, dy, dx);
}
template <typename T>
void lrelu_fwd(std::size_t n, T alpha, const T* x, T* y) {
    omp::lrelu_fwd(n, alpha, x, y);
}
template <typename T>
void lrelu_bwd(std::size_t n, T alpha, const T* x, const T* dy, T* dx) {
    omp::lrelu_bwd(n, alpha, x, dy, dx);
}
template <typename T>
void sigmoid_fwd(std::size_t n, const T* x, T* y) {
    omp::sigmoid_fwd(n, x, y);
}
template <typename T>
void sigmoid_bwd(std::size_t n, const T* y, const T* dy, T* dx) {
    omp::sigmoid_bwd(n, y, dy, dx);
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

}  // namespace dinn::kern::dispatch
