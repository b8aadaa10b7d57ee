#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dinn/common.hpp"

namespace dinn {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ')';
    return os.str();
}

// Dense row-major tensor. T is double in verification mode and float in
// fast (training) mode.
template <typename T>
struct TensorT {
    Shape shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(Shape s) : shape(std::move(s)), data(checked_numel(shape), T(0)) {}
    TensorT(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != checked_numel(shape)) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        }
    }
    TensorT(Shape s, std::initializer_list<T> d)
        : TensorT(std::move(s), std::vector<T>(d)) {}

    static TensorT full(Shape s, T v) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static TensorT scalar(T v) { return TensorT({1}, {v}); }

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    // Row-major 3-d access (H, W, C).
    T& at3(int i, int j, int c) {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + c];
    }
    const T& at3(int i, int j, int c) const {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + c];
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

private:
    // validates before sizing so a bad extent cannot reach the allocator
    static std::size_t checked_numel(const Shape& s) {
        for (int d : s)
            if (d <= 0) throw ShapeError("non-positive extent in shape " + shape_str(s));
        return shape_numel(s);
    }
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

template <typename T>
void require_shape(const TensorT<T>& t, const Shape& want, const char* what) {
    if (t.shape != want) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_str(want) +
                         ", got " + shape_str(t.shape));
    }
}

}  // namespace dinn
