#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dinn/model.hpp"

namespace dinn {

// One windowed measurement: a 30x20x4 radio tensor labelled with the
// subject it came from and the 120x160 binary silhouette of its final
// frame. Source subjects carry a one-hot domain label; the held-out target
// subject has an empty label.
struct Sample {
    std::uint32_t subject = 0;
    std::vector<float> onehot;             // width = source-domain count, or empty
    std::vector<float> csi;                // kCsiH*kCsiW*kCsiC
    std::vector<std::uint8_t> skeleton;    // kImgH*kImgW, values in {0,1}
};

// Index lists into Dataset::samples. Time-blocked per subject: the first
// 75% of each source subject's timeline trains, the rest tests; the target
// subject contributes only its final 25% for evaluation.
struct DatasetSplit {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> test_source;
    std::vector<std::uint32_t> test_target;
};

struct Dataset {
    std::uint32_t k_total = 0;  // subjects including the held-out target
    std::vector<Sample> samples;
    DatasetSplit split;

    int source_domains() const { return static_cast<int>(k_total) - 1; }
    int target_subject() const { return static_cast<int>(k_total) - 1; }
};

std::vector<float> one_hot(int cls, int k);

// Binary container, magic "DSET". The split ships in a sibling file with
// magic "DSPL" so tools can re-split without rewriting sample payloads.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);  // split left empty
void save_split(const std::string& path, const DatasetSplit& split);
DatasetSplit load_split(const std::string& path, std::size_t sample_count);

// "<dataset path>.split" convention used by the command-line tools.
std::string split_path_for(const std::string& dataset_path);

}  // namespace dinn
