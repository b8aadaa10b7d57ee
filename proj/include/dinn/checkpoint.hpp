#pragma once

#include <string>

#include "dinn/model.hpp"

namespace dinn {

// Binary "DINN" checkpoint: a self-describing header (architecture knobs)
// followed by one record per parameter tensor. Payloads are stored as
// little-endian f64 regardless of the in-memory scalar type, so float and
// double runs interchange checkpoints; records may appear in any order but
// the full parameter set must be present exactly once.
template <typename T>
void save_checkpoint(const std::string& path, const ModelParamsT<T>& params);

template <typename T>
ModelParamsT<T> load_checkpoint(const std::string& path);

extern template void save_checkpoint<float>(const std::string&, const ModelParamsT<float>&);
extern template void save_checkpoint<double>(const std::string&, const ModelParamsT<double>&);
extern template ModelParamsT<float> load_checkpoint<float>(const std::string&);
extern template ModelParamsT<double> load_checkpoint<double>(const std::string&);

}  // namespace dinn
