#pragma once

#include <string>

#include "dinn/tensor.hpp"

namespace dinn {

// Writes a (H,W) or (H,W,1) tensor as binary 8-bit PGM; values are clamped
// to [0,1] and scaled to 0..255.
template <typename T>
void write_pgm(const std::string& path, const TensorT<T>& img);

extern template void write_pgm<float>(const std::string&, const TensorT<float>&);
extern template void write_pgm<double>(const std::string&, const TensorT<double>&);

}  // namespace dinn
