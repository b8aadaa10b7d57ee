#pragma once

#include <cmath>
#include <cstddef>

namespace dinn::kern::detail {

// Lane-wise dot product with a fixed summation bracketing. Both the serial
// and the parallel kernels reduce through this helper so their per-element
// results are bitwise identical. The 16 independent accumulators also let
// the compiler vectorize the loop without reassociation licenses, and the
// explicit std::fma keeps the rounding identical across inlining sites.
template <typename T>
inline T dot_lanes(const T* a, const T* b, std::size_t n) {
    constexpr std::size_t L = 16;
    T acc[L] = {};
    std::size_t i = 0;
    for (; i + L <= n; i += L)
        for (std::size_t l = 0; l < L; ++l) acc[l] = std::fma(a[i + l], b[i + l], acc[l]);
    for (; i < n; ++i) acc[i % L] = std::fma(a[i], b[i], acc[i % L]);
    // pairwise fold: (0+8)(1+9)... then (0+4)... fixed order
    for (std::size_t half = L / 2; half >= 1; half /= 2)
        for (std::size_t l = 0; l < half; ++l) acc[l] += acc[l + half];
    return acc[0];
}

}  // namespace dinn::kern::detail
