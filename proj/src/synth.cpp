#include "dinn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "dinn/common.hpp"
#include "dinn/rng.hpp"

namespace dinn::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Random Fourier features over the normalized joint coordinates. The lift
// is a fixed world constant (its own pinned seed), shared by every subject
// and every dataset seed.
struct PoseLift {
    std::vector<double> w;      // kPoseFeatures x (kJoints*2)
    std::vector<double> phase;  // kPoseFeatures
};

const PoseLift& pose_lift() {
    static const PoseLift lift = [] {
        PoseLift l;
        Rng rng(0x8c5f00d1u);
        const double omega = 2.5;  // bandwidth: moderate nonlinearity in pose
        l.w.resize(static_cast<std::size_t>(kPoseFeatures) * kJoints * 2);
        for (auto& v : l.w) v = rng.normal(0.0, omega);
        l.phase.resize(kPoseFeatures);
        for (auto& v : l.phase) v = rng.uniform(0.0, 2.0 * kPi);
        return l;
    }();
    return lift;
}

void lift_pose(const double* joints, double* out) {
    const PoseLift& l = pose_lift();
    double x[kJoints * 2];
    for (int j = 0; j < kJoints; ++j) {
        x[2 * j] = joints[2 * j] / (kImgW - 1);
        x[2 * j + 1] = joints[2 * j + 1] / (kImgH - 1);
    }
    const double amp = std::sqrt(2.0 / kPoseFeatures);
    for (int f = 0; f < kPoseFeatures; ++f) {
        const double* wf = l.w.data() + static_cast<std::size_t>(f) * kJoints * 2;
        double acc = l.phase[static_cast<std::size_t>(f)];
        for (int d = 0; d < kJoints * 2; ++d) acc += wf[d] * x[d];
        out[f] = amp * std::cos(acc);
    }
}

// How distinct each subject's mixing matrix is from the shared base. Kept
// near zero: a clean per-subject pose response is a noise-free domain cue
// the discriminator would drive to zero loss, killing the adversarial
// gradient. Identity is meant to live in the offsets below instead.
constexpr double kChannelSpread = 0.01;

// Offset geometry: subject offsets sit on a circle of this radius inside the
// span of two shared unit patterns, and each window drifts along the same
// patterns with std kDriftRatio * noise_sigma per axis. The ratio of circle
// spacing to drift fixes where the best possible domain classifier plateaus
// (high, but short of saturation, so its loss keeps carrying gradient).
constexpr double kOffsetRadius = 1.5;
constexpr double kDriftRatio = 15.0;

// shared by every subject: a per-subject level would itself identify the
// subject (sample variance is easy to read) and could never be trained away
constexpr double kNoiseSigma = 0.03;

// joints: 0 head, 1 neck, 2 chest, 3 pelvis, 4/5 L/R shoulder, 6/7 L/R
// elbow, 8/9 L/R wrist, 10/11 L/R hip, 12/13 L/R knee
constexpr int kBoneIdx[kBones][2] = {
    {0, 1}, {1, 2}, {2, 3},            // spine
    {1, 4}, {4, 6}, {6, 8},            // left arm
    {1, 5}, {5, 7}, {7, 9},            // right arm
    {3, 10}, {10, 12},                 // left leg
    {3, 11}, {11, 13},                 // right leg
};

// bounded-step random walk with reflecting bounds
struct Walk {
    double v, lo, hi, step;
    void init(Rng& rng) { v = rng.uniform(lo, hi); }
    void advance(Rng& rng) {
        v += rng.uniform(-step, step);
        if (v < lo) v = 2.0 * lo - v;
        if (v > hi) v = 2.0 * hi - v;
        v = std::clamp(v, lo, hi);
    }
};

}  // namespace

std::vector<SubjectProfile> make_subjects(std::uint64_t seed, int k_total) {
    if (k_total < 2)
        throw ConfigError("make_subjects: need at least 2 subjects (sources plus target), got " +
                          std::to_string(k_total));
    const std::size_t cells = static_cast<std::size_t>(kCsiCells) * kPoseFeatures;
    std::vector<double> base(cells);
    Rng base_rng(derive_seed(seed, 0xA0BA5E));
    for (auto& v : base) v = base_rng.normal();

    // two orthonormal drift patterns shared by the whole corpus
    std::vector<double> modes(2 * kCsiCells);
    for (auto& v : modes) v = base_rng.normal();
    double n1 = 0;
    for (int i = 0; i < kCsiCells; ++i) n1 += modes[i] * modes[i];
    n1 = std::sqrt(n1);
    for (int i = 0; i < kCsiCells; ++i) modes[i] /= n1;
    double dot = 0;
    for (int i = 0; i < kCsiCells; ++i) dot += modes[i] * modes[kCsiCells + i];
    for (int i = 0; i < kCsiCells; ++i) modes[kCsiCells + i] -= dot * modes[i];
    double n2 = 0;
    for (int i = 0; i < kCsiCells; ++i) n2 += modes[kCsiCells + i] * modes[kCsiCells + i];
    n2 = std::sqrt(n2);
    for (int i = 0; i < kCsiCells; ++i) modes[kCsiCells + i] /= n2;

    const double rot = base_rng.next_double();  // random phase for the circle

    std::vector<SubjectProfile> subjects;
    subjects.reserve(static_cast<std::size_t>(k_total));
    for (int k = 0; k < k_total; ++k) {
        SubjectProfile s;
        s.subject_id = k;
        s.is_target = (k == k_total - 1);
        Rng rng(derive_seed(seed, 0x5B00 + static_cast<std::uint64_t>(k)));
        s.mixing.resize(cells);
        for (std::size_t i = 0; i < cells; ++i)
            s.mixing[i] = base[i] + kChannelSpread * rng.normal();
        const double th = 2.0 * kPi * (k + rot) / k_total;
        const double a1 = kOffsetRadius * std::cos(th), a2 = kOffsetRadius * std::sin(th);
        s.offset.resize(kCsiCells);
        for (int i = 0; i < kCsiCells; ++i)
            s.offset[static_cast<std::size_t>(i)] = a1 * modes[i] + a2 * modes[kCsiCells + i];
        s.modes = modes;
        s.noise_sigma = kNoiseSigma;
        subjects.push_back(std::move(s));
    }
    return subjects;
}

PoseSequence gen_pose_sequence(int frames, std::uint64_t seed) {
    if (frames < kWindow)
        throw InvalidArgument("gen_pose_sequence: need at least " + std::to_string(kWindow) +
                              " frames, got " + std::to_string(frames));
    Rng rng(seed);
    // conservative step bounds keep worst-case joint motion under 5 px/frame
    Walk root_x{0, 55.0, 105.0, 1.0};
    Walk root_y{0, 52.0, 72.0, 1.0};
    Walk sway{0, -0.12, 0.12, 0.015};     // torso lean
    Walk scale{0, 0.85, 1.15, 0.015};     // apparent size (distance to sensor)
    Walk arm_l{0, -0.9, 0.9, 0.04};       // shoulder swing, 0 = hanging down
    Walk arm_r{0, -0.9, 0.9, 0.04};
    Walk elbow_l{0, -1.2, 1.2, 0.05};
    Walk elbow_r{0, -1.2, 1.2, 0.05};
    Walk leg_l{0, -0.5, 0.5, 0.03};
    Walk leg_r{0, -0.5, 0.5, 0.03};
    Walk* walks[] = {&root_x, &root_y, &sway,    &scale, &arm_l,
                     &arm_r,  &elbow_l, &elbow_r, &leg_l, &leg_r};
    for (Walk* w : walks) w->init(rng);

    PoseSequence seq;
    seq.frames = frames;
    seq.joints.resize(static_cast<std::size_t>(frames) * kJoints * 2);
    for (int t = 0; t < frames; ++t) {
        if (t > 0)
            for (Walk* w : walks) w->advance(rng);
        const double s = scale.v, th = sway.v;
        const double ux = std::sin(th), uy = -std::cos(th);  // torso "up", y grows downward
        const double px = std::cos(th), py = std::sin(th);   // lateral
        double j[kJoints][2];
        const double rx = root_x.v, ry = root_y.v;
        j[3][0] = rx;                         j[3][1] = ry;                          // pelvis
        j[2][0] = rx + 13 * s * ux;           j[2][1] = ry + 13 * s * uy;            // chest
        j[1][0] = j[2][0] + 13 * s * ux;      j[1][1] = j[2][1] + 13 * s * uy;       // neck
        j[0][0] = j[1][0] + 12 * s * ux;      j[0][1] = j[1][1] + 12 * s * uy;       // head
        j[4][0] = j[1][0] - 11 * s * px;      j[4][1] = j[1][1] - 11 * s * py;       // shoulders
        j[5][0] = j[1][0] + 11 * s * px;      j[5][1] = j[1][1] + 11 * s * py;
        auto hang = [&](double a) { return std::pair<double, double>{std::sin(a + th), std::cos(a + th)}; };
        auto [lx, ly] = hang(arm_l.v);
        j[6][0] = j[4][0] + 15 * s * lx;      j[6][1] = j[4][1] + 15 * s * ly;       // elbows
        auto [rxd, ryd] = hang(arm_r.v);
        j[7][0] = j[5][0] + 15 * s * rxd;     j[7][1] = j[5][1] + 15 * s * ryd;
        auto [wlx, wly] = hang(arm_l.v + elbow_l.v);
        j[8][0] = j[6][0] + 13 * s * wlx;     j[8][1] = j[6][1] + 13 * s * wly;      // wrists
        auto [wrx, wry] = hang(arm_r.v + elbow_r.v);
        j[9][0] = j[7][0] + 13 * s * wrx;     j[9][1] = j[7][1] + 13 * s * wry;
        j[10][0] = rx - 6 * s * px;           j[10][1] = ry - 6 * s * py;            // hips
        j[11][0] = rx + 6 * s * px;           j[11][1] = ry + 6 * s * py;
        auto [klx, kly] = hang(leg_l.v);
        j[12][0] = j[10][0] + 18 * s * klx;   j[12][1] = j[10][1] + 18 * s * kly;    // knees
        auto [krx, kry] = hang(leg_r.v);
        j[13][0] = j[11][0] + 18 * s * krx;   j[13][1] = j[11][1] + 18 * s * kry;
        double* out = seq.joints.data() + static_cast<std::size_t>(t) * kJoints * 2;
        for (int q = 0; q < kJoints; ++q) {
            out[2 * q] = j[q][0];
            out[2 * q + 1] = j[q][1];
        }
    }
    return seq;
}

namespace {

void draw_line(std::vector<std::uint8_t>& img, int x0, int y0, int x1, int y1) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (x0 >= 0 && x0 < kImgW && y0 >= 0 && y0 < kImgH)
            img[static_cast<std::size_t>(y0) * kImgW + x0] = 1;
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

std::vector<std::uint8_t> render_skeleton(const double* joints) {
    std::vector<std::uint8_t> img(static_cast<std::size_t>(kImgH) * kImgW, 0);
    for (const auto& bone : kBoneIdx) {
        const int x0 = static_cast<int>(std::llround(joints[2 * bone[0]]));
        const int y0 = static_cast<int>(std::llround(joints[2 * bone[0] + 1]));
        const int x1 = static_cast<int>(std::llround(joints[2 * bone[1]]));
        const int y1 = static_cast<int>(std::llround(joints[2 * bone[1] + 1]));
        draw_line(img, x0, y0, x1, y1);
    }
    return img;
}

std::vector<float> synth_csi(const SubjectProfile& s, const double* window,
                             std::uint64_t noise_seed) {
    if (s.mixing.size() != static_cast<std::size_t>(kCsiCells) * kPoseFeatures ||
        s.offset.size() != static_cast<std::size_t>(kCsiCells) ||
        s.modes.size() != static_cast<std::size_t>(2) * kCsiCells)
        throw InvalidArgument("synth_csi: malformed subject profile");
    Rng rng(noise_seed);
    // window-constant environmental drift along the shared patterns
    const double drift = kDriftRatio * s.noise_sigma;
    const double g1 = drift * rng.normal(), g2 = drift * rng.normal();
    std::vector<float> out(static_cast<std::size_t>(kCsiH) * kCsiW * kCsiC);
    double phi[kPoseFeatures];
    for (int t = 0; t < kWindow; ++t) {
        lift_pose(window + static_cast<std::size_t>(t) * kJoints * 2, phi);
        for (int cell = 0; cell < kCsiCells; ++cell) {
            const double* row = s.mixing.data() + static_cast<std::size_t>(cell) * kPoseFeatures;
            double acc = s.offset[static_cast<std::size_t>(cell)] + g1 * s.modes[static_cast<std::size_t>(cell)] +
                         g2 * s.modes[static_cast<std::size_t>(kCsiCells + cell)];
            for (int f = 0; f < kPoseFeatures; ++f) acc += row[f] * phi[f];
            acc += s.noise_sigma * rng.normal();
            const int i = cell / kCsiC, c = cell % kCsiC;
            out[(static_cast<std::size_t>(i) * kCsiW + t) * kCsiC + c] = static_cast<float>(acc);
        }
    }
    return out;
}

Dataset build_dataset(std::uint64_t seed, int k_total, int frames_per_subject) {
    if (k_total < 2)
        throw ConfigError("build_dataset: need at least 2 subjects, got " + std::to_string(k_total));
    if (frames_per_subject < 2 * kWindow)
        throw ConfigError("build_dataset: need at least " + std::to_string(2 * kWindow) +
                          " frames per subject, got " + std::to_string(frames_per_subject));
    const auto subjects = make_subjects(seed, k_total);
    Dataset ds;
    ds.k_total = static_cast<std::uint32_t>(k_total);
    const int per_subject = frames_per_subject - (kWindow - 1);
    const int n_train = per_subject * 3 / 4;  // time-blocked 75/25
    for (const SubjectProfile& prof : subjects) {
        const PoseSequence seq = gen_pose_sequence(
            frames_per_subject, derive_seed(seed, 0xC0DE00 + static_cast<std::uint64_t>(prof.subject_id)));
        const std::uint32_t first = static_cast<std::uint32_t>(ds.samples.size());
        for (int t = kWindow - 1; t < frames_per_subject; ++t) {
            Sample sm;
            sm.subject = static_cast<std::uint32_t>(prof.subject_id);
            if (!prof.is_target) sm.onehot = one_hot(prof.subject_id, k_total - 1);
            const std::uint64_t noise_stream =
                (static_cast<std::uint64_t>(prof.subject_id) << 32) | static_cast<std::uint64_t>(t);
            sm.csi = synth_csi(prof, seq.frame(t - (kWindow - 1)), derive_seed(seed, 0xD0000000ULL + noise_stream));
            sm.skeleton = render_skeleton(seq.frame(t));
            ds.samples.push_back(std::move(sm));
        }
        for (int p = 0; p < per_subject; ++p) {
            const std::uint32_t gi = first + static_cast<std::uint32_t>(p);
            if (prof.is_target) {
                if (p >= n_train) ds.split.test_target.push_back(gi);
            } else {
                (p < n_train ? ds.split.train : ds.split.test_source).push_back(gi);
            }
        }
    }
    return ds;
}

}  // namespace dinn::synth
