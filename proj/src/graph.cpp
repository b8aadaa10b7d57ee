#include "dinn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "dinn/common.hpp"

namespace dinn {

namespace {

// image ops: (H,W,C) single sample or (B,H,W,C) batch
struct ImageDims {
    int batch, h, w, c;
    bool batched;
};

ImageDims image_dims(const Shape& s, const char* what) {
    if (s.size() == 3) return {1, s[0], s[1], s[2], false};
    if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
    throw ShapeError(std::string(what) + ": expected rank 3 (H,W,C) or rank 4 (B,H,W,C), got shape " +
                     shape_str(s));
}

}  // namespace

template <typename T>
typename Graph<T>::Node& Graph<T>::at(int id) {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw InvalidArgument("graph: node id " + std::to_string(id) + " out of range");
    return nodes_[static_cast<std::size_t>(id)];
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::at(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw InvalidArgument("graph: node id " + std::to_string(id) + " out of range");
    return nodes_[static_cast<std::size_t>(id)];
}

template <typename T>
int Graph<T>::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
const TensorT<T>& Graph<T>::val(int id) const {
    const Node& n = at(id);
    return n.kind == OpKind::Param ? *n.borrowed : n.value;
}

template <typename T>
int Graph<T>::input(TensorT<T> value) {
    Node n;
    n.kind = OpKind::Input;
    n.value = std::move(value);
    return push(std::move(n));
}

template <typename T>
int Graph<T>::param(TensorT<T>* value) {
    if (value == nullptr) throw InvalidArgument("graph: param tensor must not be null");
    Node n;
    n.kind = OpKind::Param;
    n.borrowed = value;
    n.needs_grad = true;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::conv2d(int x, int kernel, int bias, int stride_h, int stride_w) {
    const TensorT<T>& xv = val(x);
    const TensorT<T>& kv = val(kernel);
    const TensorT<T>& bv = val(bias);
    if (kv.rank() != 4)
        throw ShapeError("conv2d: kernel must have shape (kh,kw,in_c,out_c), got " + shape_str(kv.shape));
    const ImageDims im = image_dims(xv.shape, "conv2d");
    if (im.c != kv.shape[2])
        throw ShapeError("conv2d: input has " + std::to_string(im.c) + " channels but kernel expects " +
                         std::to_string(kv.shape[2]) + " (kernel " + shape_str(kv.shape) + ")");
    if (bv.rank() != 1 || bv.shape[0] != kv.shape[3])
        throw ShapeError("conv2d: bias shape " + shape_str(bv.shape) + " does not match out channels " +
                         std::to_string(kv.shape[3]));
    Node n;
    n.kind = OpKind::Conv2d;
    n.a = x;
    n.b = kernel;
    n.c = bias;
    n.conv = kern::conv2d_dims(im.batch, im.h, im.w, im.c, kv.shape[0], kv.shape[1], kv.shape[3],
                               stride_h, stride_w);
    Shape out = im.batched ? Shape{im.batch, n.conv.out_h, n.conv.out_w, n.conv.out_c}
                           : Shape{n.conv.out_h, n.conv.out_w, n.conv.out_c};
    n.value = TensorT<T>(out);
    kern::dispatch::conv2d_fwd(n.conv, xv.ptr(), kv.ptr(), bv.ptr(), n.value.ptr());
    n.needs_grad = at(x).needs_grad || at(kernel).needs_grad || at(bias).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::dense(int x, int w, int bias) {
    const TensorT<T>& xv = val(x);
    const TensorT<T>& wv = val(w);
    const TensorT<T>& bv = val(bias);
    if (wv.rank() != 2)
        throw ShapeError("dense: weights must have shape (in,out), got " + shape_str(wv.shape));
    const int in = wv.shape[0], out = wv.shape[1];
    if (bv.rank() != 1 || bv.shape[0] != out)
        throw ShapeError("dense: bias shape " + shape_str(bv.shape) + " does not match out size " +
                         std::to_string(out));
    int batch;
    bool batched;
    if (xv.numel() == static_cast<std::size_t>(in)) {
        batch = 1;
        batched = false;
    } else if (xv.rank() >= 2 &&
               xv.numel() == static_cast<std::size_t>(xv.shape[0]) * static_cast<std::size_t>(in)) {
        batch = xv.shape[0];
        batched = true;
    } else {
        throw ShapeError("dense: input shape " + shape_str(xv.shape) + " does not flatten to " +
                         std::to_string(in) + " features");
    }
    Node n;
    n.kind = OpKind::Dense;
    n.a = x;
    n.b = w;
    n.c = bias;
    n.i0 = batch;
    n.value = TensorT<T>(batched ? Shape{batch, out} : Shape{out});
    kern::dispatch::dense_fwd(batch, in, out, xv.ptr(), wv.ptr(), bv.ptr(), n.value.ptr());
    n.needs_grad = at(x).needs_grad || at(w).needs_grad || at(bias).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::resize_nearest(int x, int target_h, int target_w) {
    const TensorT<T>& xv = val(x);
    const ImageDims im = image_dims(xv.shape, "resize_nearest");
    if (target_h < im.h || target_w < im.w)
        throw ShapeError("resize_nearest: target " + std::to_string(target_h) + "x" +
                         std::to_string(target_w) + " would downscale input " + shape_str(xv.shape));
    Node n;
    n.kind = OpKind::ResizeNN;
    n.a = x;
    n.i0 = target_h;
    n.i1 = target_w;
    Shape out = im.batched ? Shape{im.batch, target_h, target_w, im.c}
                           : Shape{target_h, target_w, im.c};
    n.value = TensorT<T>(out);
    kern::dispatch::resize_nn_fwd(im.batch, im.h, im.w, im.c, target_h, target_w, xv.ptr(),
                                  n.value.ptr());
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::lrelu(int x, T alpha) {
    const TensorT<T>& xv = val(x);
    Node n;
    n.kind = OpKind::LRelu;
    n.a = x;
    n.alpha = alpha;
    n.value = TensorT<T>(xv.shape);
    kern::dispatch::lrelu_fwd(xv.numel(), alpha, xv.ptr(), n.value.ptr());
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::sigmoid(int x) {
    const TensorT<T>& xv = val(x);
    Node n;
    n.kind = OpKind::Sigmoid;
    n.a = x;
    n.value = TensorT<T>(xv.shape);
    kern::dispatch::sigmoid_fwd(xv.numel(), xv.ptr(), n.value.ptr());
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::softmax(int x) {
    const TensorT<T>& xv = val(x);
    int rows, cols;
    if (xv.rank() == 1) {
        rows = 1;
        cols = xv.shape[0];
    } else if (xv.rank() == 2) {
        rows = xv.shape[0];
        cols = xv.shape[1];
    } else {
        throw ShapeError("softmax: expected rank 1 or 2, got shape " + shape_str(xv.shape));
    }
    Node n;
    n.kind = OpKind::Softmax;
    n.a = x;
    n.i0 = rows;
    n.i1 = cols;
    n.value = TensorT<T>(xv.shape);
    for (int r = 0; r < rows; ++r) {
        const T* xr = xv.ptr() + static_cast<std::size_t>(r) * cols;
        T* yr = n.value.ptr() + static_cast<std::size_t>(r) * cols;
        T mx = xr[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
        T sum = 0;
        for (int j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        for (int j = 0; j < cols; ++j) yr[j] /= sum;
    }
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::global_avg_pool(int x) {
    const TensorT<T>& xv = val(x);
    const ImageDims im = image_dims(xv.shape, "global_avg_pool");
    Node n;
    n.kind = OpKind::Gap;
    n.a = x;
    n.value = TensorT<T>(im.batched ? Shape{im.batch, im.c} : Shape{im.c});
    const std::size_t cells = static_cast<std::size_t>(im.h) * im.w;
    for (int b = 0; b < im.batch; ++b) {
        const T* xb = xv.ptr() + static_cast<std::size_t>(b) * cells * im.c;
        T* yb = n.value.ptr() + static_cast<std::size_t>(b) * im.c;
        for (int c = 0; c < im.c; ++c) {
            T acc = 0;
            for (std::size_t i = 0; i < cells; ++i) acc += xb[i * im.c + c];
            yb[c] = acc / static_cast<T>(cells);
        }
    }
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::scale_channels(int x, int gate) {
    const TensorT<T>& xv = val(x);
    const TensorT<T>& gv = val(gate);
    const ImageDims im = image_dims(xv.shape, "scale_channels");
    const Shape want = im.batched ? Shape{im.batch, im.c} : Shape{im.c};
    if (gv.shape != want)
        throw ShapeError("scale_channels: gate shape " + shape_str(gv.shape) + " does not match " +
                         shape_str(want) + " for input " + shape_str(xv.shape));
    Node n;
    n.kind = OpKind::ScaleChannels;
    n.a = x;
    n.b = gate;
    n.value = TensorT<T>(xv.shape);
    const std::size_t cells = static_cast<std::size_t>(im.h) * im.w;
    for (int b = 0; b < im.batch; ++b) {
        const T* xb = xv.ptr() + static_cast<std::size_t>(b) * cells * im.c;
        const T* gb = gv.ptr() + static_cast<std::size_t>(b) * im.c;
        T* yb = n.value.ptr() + static_cast<std::size_t>(b) * cells * im.c;
        for (std::size_t i = 0; i < cells; ++i)
            for (int c = 0; c < im.c; ++c) yb[i * im.c + c] = xb[i * im.c + c] * gb[c];
    }
    n.needs_grad = at(x).needs_grad || at(gate).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::reshape(int x, Shape target) {
    const TensorT<T>& xv = val(x);
    if (shape_numel(target) != xv.numel())
        throw ShapeError("reshape: cannot view shape " + shape_str(xv.shape) + " as " +
                         shape_str(target));
    Node n;
    n.kind = OpKind::Reshape;
    n.a = x;
    n.in_shape = xv.shape;
    n.value = TensorT<T>(target, xv.data);
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

template <typename T>
int Graph<T>::bce_mean(int pred, int target, int m_batch, T clip) {
    const TensorT<T>& pv = val(pred);
    const TensorT<T>& tv = val(target);
    if (!pv.same_shape(tv))
        throw ShapeError("bce_mean: prediction shape " + shape_str(pv.shape) +
                         " does not match target shape " + shape_str(tv.shape));
    if (m_batch < 1) throw InvalidArgument("bce_mean: batch divisor must be >= 1");
    if (!(clip > T(0)) || !(clip < T(0.5)))
        throw InvalidArgument("bce_mean: clip must lie in (0, 0.5)");
    Node n;
    n.kind = OpKind::BceMean;
    n.a = pred;
    n.b = target;
    n.i0 = m_batch;
    n.alpha = clip;
    double acc = 0.0;  // fixed-order double accumulation keeps the loss stable
    const std::size_t cnt = pv.numel();
    for (std::size_t i = 0; i < cnt; ++i) {
        const T yc = std::min(std::max(pv.data[i], clip), T(1) - clip);
        const double y = static_cast<double>(yc);
        const double t = static_cast<double>(tv.data[i]);
        acc += t * -std::log(y) + (1.0 - t) * -std::log(1.0 - y);
    }
    n.value = TensorT<T>::scalar(static_cast<T>(acc / m_batch));
    n.needs_grad = at(pred).needs_grad;  // targets are constants
    return push(std::move(n));
}

template <typename T>
void Graph<T>::ensure_grad(int id) {
    Node& n = at(id);
    if (n.has_grad) return;
    const Shape& s = val(id).shape;
    if (n.grad.shape != s)
        n.grad = TensorT<T>(s);  // fresh tensors start zeroed
    else
        n.grad.fill(T(0));
    n.has_grad = true;
}

template <typename T>
const TensorT<T>& Graph<T>::grad(int id) {
    ensure_grad(id);  // zero if the last backward never reached this node
    return at(id).grad;
}

template <typename T>
void Graph<T>::backward(int loss) {
    const TensorT<T>& lv = val(loss);
    if (lv.numel() != 1)
        throw InvalidArgument("backward: loss must be a scalar, got shape " + shape_str(lv.shape));
    for (Node& n : nodes_) n.has_grad = false;
    ensure_grad(loss);
    at(loss).grad.data[0] = T(1);
    for (int id = loss; id >= 0; --id) {
        if (!at(id).has_grad) continue;
        backward_node(id);
    }
}

template <typename T>
void Graph<T>::backward_node(int id) {
    Node& n = at(id);
    const TensorT<T>& dy = n.grad;
    auto wants = [&](int in) { return in >= 0 && at(in).needs_grad; };
    switch (n.kind) {
        case OpKind::Input:
        case OpKind::Param:
            break;
        case OpKind::Conv2d:
            if (wants(n.a)) {
                ensure_grad(n.a);
                kern::dispatch::conv2d_bwd_input(n.conv, dy.ptr(), val(n.b).ptr(), at(n.a).grad.ptr());
            }
            if (wants(n.b)) {
                ensure_grad(n.b);
                kern::dispatch::conv2d_bwd_kernel(n.conv, val(n.a).ptr(), dy.ptr(), at(n.b).grad.ptr());
            }
            if (wants(n.c)) {
                ensure_grad(n.c);
                kern::dispatch::conv2d_bwd_bias(n.conv, dy.ptr(), at(n.c).grad.ptr());
            }
            break;
        case OpKind::Dense: {
            const int in = val(n.b).shape[0], out = val(n.b).shape[1];
            if (wants(n.a)) {
                ensure_grad(n.a);
                kern::dispatch::dense_bwd_input(n.i0, in, out, dy.ptr(), val(n.b).ptr(), at(n.a).grad.ptr());
            }
            if (wants(n.b)) {
                ensure_grad(n.b);
                kern::dispatch::dense_bwd_weights(n.i0, in, out, val(n.a).ptr(), dy.ptr(), at(n.b).grad.ptr());
            }
            if (wants(n.c)) {
                ensure_grad(n.c);
                kern::dispatch::dense_bwd_bias(n.i0, in, out, dy.ptr(), at(n.c).grad.ptr());
            }
            break;
        }
        case OpKind::ResizeNN:
            if (wants(n.a)) {
                ensure_grad(n.a);
                const ImageDims im = image_dims(val(n.a).shape, "resize_nearest");
                kern::dispatch::resize_nn_bwd(im.batch, im.h, im.w, im.c, n.i0, n.i1, dy.ptr(),
                                              at(n.a).grad.ptr());
            }
            break;
        case OpKind::LRelu:
            if (wants(n.a)) {
                ensure_grad(n.a);
                kern::dispatch::lrelu_bwd(dy.numel(), n.alpha, val(n.a).ptr(), dy.ptr(), at(n.a).grad.ptr());
            }
            break;
        case OpKind::Sigmoid:
            if (wants(n.a)) {
                ensure_grad(n.a);
                kern::dispatch::sigmoid_bwd(dy.numel(), n.value.ptr(), dy.ptr(), at(n.a).grad.ptr());
            }
            break;
        case OpKind::Softmax:
            if (wants(n.a)) {
                ensure_grad(n.a);
                T* dx = at(n.a).grad.ptr();
                const T* y = n.value.ptr();
                for (int r = 0; r < n.i0; ++r) {
                    const std::size_t off = static_cast<std::size_t>(r) * n.i1;
                    T dot = 0;
                    for (int j = 0; j < n.i1; ++j) dot += dy.data[off + j] * y[off + j];
                    for (int j = 0; j < n.i1; ++j)
                        dx[off + j] += y[off + j] * (dy.data[off + j] - dot);
                }
            }
            break;
        case OpKind::Gap:
            if (wants(n.a)) {
                ensure_grad(n.a);
                const ImageDims im = image_dims(val(n.a).shape, "global_avg_pool");
                const std::size_t cells = static_cast<std::size_t>(im.h) * im.w;
                T* dx = at(n.a).grad.ptr();
                for (int b = 0; b < im.batch; ++b) {
                    const T* dyb = dy.ptr() + static_cast<std::size_t>(b) * im.c;
                    T* dxb = dx + static_cast<std::size_t>(b) * cells * im.c;
                    for (int c = 0; c < im.c; ++c) {
                        const T g = dyb[c] / static_cast<T>(cells);
                        for (std::size_t i = 0; i < cells; ++i) dxb[i * im.c + c] += g;
                    }
                }
            }
            break;
        case OpKind::ScaleChannels: {
            const ImageDims im = image_dims(val(n.a).shape, "scale_channels");
            const std::size_t cells = static_cast<std::size_t>(im.h) * im.w;
            const T* x = val(n.a).ptr();
            const T* g = val(n.b).ptr();
            if (wants(n.a)) {
                ensure_grad(n.a);
                T* dx = at(n.a).grad.ptr();
                for (int b = 0; b < im.batch; ++b) {
                    const std::size_t xoff = static_cast<std::size_t>(b) * cells * im.c;
                    const T* gb = g + static_cast<std::size_t>(b) * im.c;
                    for (std::size_t i = 0; i < cells; ++i)
                        for (int c = 0; c < im.c; ++c)
                            dx[xoff + i * im.c + c] += dy.data[xoff + i * im.c + c] * gb[c];
                }
            }
            if (wants(n.b)) {
                ensure_grad(n.b);
                T* dg = at(n.b).grad.ptr();
                for (int b = 0; b < im.batch; ++b) {
                    const std::size_t xoff = static_cast<std::size_t>(b) * cells * im.c;
                    T* dgb = dg + static_cast<std::size_t>(b) * im.c;
                    for (int c = 0; c < im.c; ++c) {
                        T acc = 0;
                        for (std::size_t i = 0; i < cells; ++i)
                            acc += dy.data[xoff + i * im.c + c] * x[xoff + i * im.c + c];
                        dgb[c] += acc;
                    }
                }
            }
            break;
        }
        case OpKind::Reshape:
            if (wants(n.a)) {
                ensure_grad(n.a);
                add_grad(n.a, dy.ptr(), dy.numel());
            }
            break;
        case OpKind::BceMean:
            if (wants(n.a)) {
                ensure_grad(n.a);
                const TensorT<T>& pv = val(n.a);
                const TensorT<T>& tv = val(n.b);
                T* dp = at(n.a).grad.ptr();
                const T scale = dy.data[0] / static_cast<T>(n.i0);
                const T clip = n.alpha;
                const std::size_t cnt = pv.numel();
                for (std::size_t i = 0; i < cnt; ++i) {
                    const T y = pv.data[i];
                    if (y < clip || y > T(1) - clip) continue;  // clamped flat
                    const T t = tv.data[i];
                    dp[i] += scale * (-t / y + (T(1) - t) / (T(1) - y));
                }
            }
            break;
    }
}

template <typename T>
void Graph<T>::add_grad(int id, const T* src, std::size_t n) {
    T* dst = at(id).grad.ptr();
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

template class Graph<float>;
template class Graph<double>;

}  // namespace dinn
