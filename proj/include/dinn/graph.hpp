#pragma once

#include <vector>

#include "dinn/kernels.hpp"
#include "dinn/tensor.hpp"

namespace dinn {

// Reverse-mode autodiff over a flat tape. Ops evaluate eagerly when they are
// recorded; backward() replays the tape in reverse, accumulating gradients
// into every node that (transitively) depends on a param leaf.
//
// Batching convention: image ops accept rank-3 (H,W,C) single samples or
// rank-4 (B,H,W,C) batches; dense/softmax accept a single flattened sample
// or a batch whose first extent is B and whose remaining extents flatten to
// the feature size.

enum class OpKind {
    Input,
    Param,
    Conv2d,
    Dense,
    ResizeNN,
    LRelu,
    Sigmoid,
    Softmax,
    Gap,
    ScaleChannels,
    Reshape,
    BceMean,
};

template <typename T>
class Graph {
  public:
    // leaves
    int input(TensorT<T> value);      // constant, owned
    int param(TensorT<T>* value);     // borrowed, mutable, receives a gradient

    // ops
    int conv2d(int x, int kernel, int bias, int stride_h, int stride_w);
    int dense(int x, int w, int bias);
    int resize_nearest(int x, int target_h, int target_w);
    int relu(int x) { return lrelu(x, T(0)); }
    int lrelu(int x, T alpha);
    int sigmoid(int x);
    int softmax(int x);
    int global_avg_pool(int x);
    int scale_channels(int x, int gate);
    int reshape(int x, Shape target);
    // mean over m_batch of the summed elementwise cross entropy; predictions
    // are clamped to [clip, 1-clip] and targets are treated as constants
    int bce_mean(int pred, int target, int m_batch, T clip);

    const TensorT<T>& val(int id) const;
    // gradient of the last backward()'s loss w.r.t. node id; materializes
    // exact zeros for nodes the loss does not reach
    const TensorT<T>& grad(int id);

    void backward(int loss);

    int size() const { return static_cast<int>(nodes_.size()); }
    OpKind kind(int id) const { return at(id).kind; }

  private:
    struct Node {
        OpKind kind;
        int a = -1, b = -1, c = -1;      // input node ids
        TensorT<T> value;                // owned output (unused for Param)
        TensorT<T>* borrowed = nullptr;  // Param storage
        TensorT<T> grad;
        bool has_grad = false;
        bool needs_grad = false;
        kern::Conv2dDims conv{};  // Conv2d
        int i0 = 0, i1 = 0;       // ResizeNN target, BceMean batch
        T alpha{};                // LRelu slope, BceMean clip
        Shape in_shape;           // Reshape backward
    };

    Node& at(int id);
    const Node& at(int id) const;
    int push(Node n);
    void ensure_grad(int id);
    void add_grad(int id, const T* src, std::size_t n);
    void backward_node(int id);

    std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace dinn
