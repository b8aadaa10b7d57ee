#pragma once

#include <cstdint>
#include <vector>

#include "dinn/dataset.hpp"

namespace dinn::synth {

inline constexpr int kJoints = 14;
inline constexpr int kBones = 13;
inline constexpr int kWindow = 20;              // frames per radio tensor (time axis)
inline constexpr int kPoseFeatures = 64;        // random Fourier lift width
inline constexpr int kCsiCells = kCsiH * kCsiC; // 120 values per time column

// Per-subject measurement channel: every subject mixes the same pose signal
// through its own linear channel (shared base + private perturbation) and
// adds a private constant offset per cell. Identity lives only in the
// channel; the motion process and the noise level are shared.
//
// The offsets of all subjects sit on a circle inside a two-pattern subspace
// (`modes`), and every window adds a random shift along the same two
// patterns. Identity is therefore learnable from the offset but windows of
// neighbouring subjects overlap: a domain classifier plateaus below 100%
// and its loss keeps carrying gradient instead of saturating to zero.
struct SubjectProfile {
    int subject_id = 0;
    bool is_target = false;
    double noise_sigma = 0.0;
    std::vector<double> mixing;  // kCsiCells x kPoseFeatures, row-major
    std::vector<double> offset;  // kCsiCells
    std::vector<double> modes;   // 2 x kCsiCells drift patterns, shared by all subjects
};

// Profiles are fully determined by (seed, k_total); the last subject is the
// held-out target.
std::vector<SubjectProfile> make_subjects(std::uint64_t seed, int k_total);

struct PoseSequence {
    int frames = 0;
    std::vector<double> joints;  // frames x kJoints x 2, (x,y) pixel coordinates

    const double* frame(int t) const { return joints.data() + static_cast<std::size_t>(t) * kJoints * 2; }
};

// Random but smooth articulated motion: a walking figure whose root, limb
// angles and apparent size all drift within bounds, at most a few pixels of
// joint motion per frame. The same generator drives every subject.
PoseSequence gen_pose_sequence(int frames, std::uint64_t seed);

// 1-pixel-wide line rendering of the bone tree onto a 120x160 {0,1} canvas.
std::vector<std::uint8_t> render_skeleton(const double* joints /* kJoints x 2 */);

// One 30x20x4 radio tensor from a 20-frame joint window: column t carries
// mixing * lift(joints_t) + offset + noise. The noise has a window-constant
// component along the drift modes plus an i.i.d. part, both scaled by
// noise_sigma (so sigma = 0 still means bit-identical repeats).
std::vector<float> synth_csi(const SubjectProfile& s,
                             const double* window /* kWindow x kJoints x 2 */,
                             std::uint64_t noise_seed);

// Full corpus: k_total subjects, frames_per_subject >= 40 frames each,
// windowed into frames-19 samples per subject, split 75/25 by time. Source
// subjects fill train/test_source; the target fills test_target.
Dataset build_dataset(std::uint64_t seed, int k_total, int frames_per_subject);

}  // namespace dinn::synth
