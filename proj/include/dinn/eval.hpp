#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dinn/dataset.hpp"
#include "dinn/model.hpp"
#include "dinn/pcs.hpp"

namespace dinn {

template <typename T>
using DumpHook = std::function<void(std::size_t pos, const Sample& sample, const TensorT<T>& pred)>;

struct EvalResult {
    std::vector<std::uint32_t> indices;  // evaluated samples, in the order given
    std::vector<int> subjects;
    std::vector<double> distances;  // binarized image distance per sample
    pcs::Report report;
};

// Held-out samples: source-domain test windows first, then the unseen
// target subject's windows.
std::vector<std::uint32_t> eval_indices(const Dataset& ds);

// Runs the extractor+generator over the given samples, binarizes prediction
// and ground truth, and aggregates per-subject construction scores over the
// standard threshold grid. The optional hook sees every raw prediction
// (e.g. for image dumps).
template <typename T>
EvalResult evaluate(ModelParamsT<T>& params, const Dataset& ds,
                    const std::vector<std::uint32_t>& indices, double tau = 0.5,
                    const DumpHook<T>& hook = nullptr);

// Per-sample distance table; `# tau = ...` comment line then subject,distance
// rows. read_distances recovers tau, subjects and distances.
void write_distances_csv(const std::string& path, double tau, const std::vector<int>& subjects,
                         const std::vector<double>& distances);
void read_distances_csv(const std::string& path, double& tau, std::vector<int>& subjects,
                        std::vector<double>& distances);

extern template EvalResult evaluate<float>(ModelParamsT<float>&, const Dataset&,
                                           const std::vector<std::uint32_t>&, double,
                                           const DumpHook<float>&);
extern template EvalResult evaluate<double>(ModelParamsT<double>&, const Dataset&,
                                            const std::vector<std::uint32_t>&, double,
                                            const DumpHook<double>&);

}  // namespace dinn
