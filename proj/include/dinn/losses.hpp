#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "dinn/graph.hpp"
#include "dinn/tensor.hpp"

namespace dinn {

// Predictions are clamped to [clip, 1-clip] inside the cross entropy so a
// saturated sigmoid cannot produce log(0).
inline constexpr double kBceClip = 1e-7;

// Reconstruction loss: summed pixelwise binary cross entropy between the
// generated frame and the binary ground truth, averaged over the batch.
// Accepts (H,W,1) / (B,H,W,1) pairs; both operands must lie in [0,1].
template <typename T>
int generation_loss(Graph<T>& g, int pred, int target) {
    const TensorT<T>& p = g.val(pred);
    const TensorT<T>& t = g.val(target);
    if (!p.same_shape(t))
        throw ShapeError("generation loss: prediction shape " + shape_str(p.shape) +
                         " does not match target shape " + shape_str(t.shape));
    int m;
    if (p.rank() == 4)
        m = p.shape[0];
    else if (p.rank() == 3)
        m = 1;
    else
        throw ShapeError("generation loss: expected an (H,W,C) image or (B,H,W,C) batch, got " +
                         shape_str(p.shape));
    for (std::size_t i = 0; i < p.numel(); ++i)
        if (!(p.data[i] >= T(0) && p.data[i] <= T(1)))
            throw InvalidArgument("generation loss: prediction value " +
                                  std::to_string(static_cast<double>(p.data[i])) +
                                  " outside [0,1]");
    for (std::size_t i = 0; i < t.numel(); ++i)
        if (!(t.data[i] >= T(0) && t.data[i] <= T(1)))
            throw InvalidArgument("generation loss: target value " +
                                  std::to_string(static_cast<double>(t.data[i])) +
                                  " outside [0,1]");
    return g.bce_mean(pred, target, m, static_cast<T>(kBceClip));
}

// Domain classification loss: full cross entropy between the predicted
// class distribution and a one-hot label, summed over classes and averaged
// over the batch. Accepts (K) / (B,K) pairs.
template <typename T>
int domain_loss(Graph<T>& g, int pred, int target) {
    const TensorT<T>& p = g.val(pred);
    const TensorT<T>& t = g.val(target);
    if (!p.same_shape(t))
        throw ShapeError("domain loss: prediction shape " + shape_str(p.shape) +
                         " does not match target shape " + shape_str(t.shape));
    int m, k;
    if (p.rank() == 2) {
        m = p.shape[0];
        k = p.shape[1];
    } else if (p.rank() == 1) {
        m = 1;
        k = p.shape[0];
    } else {
        throw ShapeError("domain loss: expected a (K) row or (B,K) batch, got " + shape_str(p.shape));
    }
    for (int r = 0; r < m; ++r) {
        const T* pr = p.ptr() + static_cast<std::size_t>(r) * k;
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            if (!(pr[j] >= T(0) && pr[j] <= T(1)))
                throw InvalidArgument("domain loss: prediction row " + std::to_string(r) +
                                      " has value outside [0,1]");
            sum += static_cast<double>(pr[j]);
        }
        if (std::abs(sum - 1.0) > 1e-5)
            throw InvalidArgument("domain loss: prediction row " + std::to_string(r) +
                                  " sums to " + std::to_string(sum) + ", not 1");
        const T* tr = t.ptr() + static_cast<std::size_t>(r) * k;
        int ones = 0;
        for (int j = 0; j < k; ++j) {
            if (tr[j] == T(1))
                ++ones;
            else if (tr[j] != T(0))
                throw InvalidArgument("domain loss: target row " + std::to_string(r) +
                                      " is not one-hot");
        }
        if (ones != 1)
            throw InvalidArgument("domain loss: target row " + std::to_string(r) +
                                  " is not one-hot");
    }
    return g.bce_mean(pred, target, m, static_cast<T>(kBceClip));
}

// Plain evaluations for callers that do not hold a graph.
template <typename T>
double loss_generation(const TensorT<T>& pred, const TensorT<T>& target) {
    Graph<T> g;
    const int node = generation_loss(g, g.input(pred), g.input(target));
    return static_cast<double>(g.val(node).data[0]);
}

template <typename T>
double loss_domain(const TensorT<T>& pred, const TensorT<T>& target) {
    Graph<T> g;
    const int node = domain_loss(g, g.input(pred), g.input(target));
    return static_cast<double>(g.val(node).data[0]);
}

// Adversarial objective: reconstruction minus lambda times the domain loss.
inline double loss_joint(double loss_g, double loss_d, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("joint loss: lambda must be finite and non-negative, got " +
                              std::to_string(lambda));
    return loss_g - lambda * loss_d;
}

}  // namespace dinn
