#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dinn/tensor.hpp"

namespace dinn {

// Central finite differences: g_i = (f(x + e_i*eps) - f(x - e_i*eps)) / (2*eps).
// f is any callable mapping the perturbed tensor to a scalar. Results are
// returned in double regardless of the tensor scalar type.
template <typename T, typename F>
TensorT<double> finite_diff_grad(F f, const TensorT<T>& theta, double eps = 1e-5) {
    TensorT<T> x = theta;
    TensorT<double> g(theta.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T orig = x.data[i];
        x.data[i] = orig + static_cast<T>(eps);
        const double fp = static_cast<double>(f(x));
        x.data[i] = orig - static_cast<T>(eps);
        const double fm = static_cast<double>(f(x));
        x.data[i] = orig;
        g.data[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

// Same, but only for the listed flat coordinates (cheap spot checks on
// large parameter tensors).
template <typename T, typename F>
std::vector<double> finite_diff_grad_at(F f, const TensorT<T>& theta,
                                        const std::vector<std::size_t>& coords,
                                        double eps = 1e-5) {
    TensorT<T> x = theta;
    std::vector<double> g;
    g.reserve(coords.size());
    for (std::size_t i : coords) {
        const T orig = x.data[i];
        x.data[i] = orig + static_cast<T>(eps);
        const double fp = static_cast<double>(f(x));
        x.data[i] = orig - static_cast<T>(eps);
        const double fm = static_cast<double>(f(x));
        x.data[i] = orig;
        g.push_back((fp - fm) / (2.0 * eps));
    }
    return g;
}

inline double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Symmetric relative error between two gradient vectors:
// ||a-b|| / max(||a||, ||b||, floor). Zero when both vanish.
inline double grad_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                           double floor = 1e-12) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(std::max(na, nb)), floor);
    return std::sqrt(diff) / denom;
}

}  // namespace dinn
