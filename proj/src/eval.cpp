#include "dinn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dinn/graph.hpp"
#include "dinn/train.hpp"

namespace dinn {

std::vector<std::uint32_t> eval_indices(const Dataset& ds) {
    std::vector<std::uint32_t> v = ds.split.test_source;
    v.insert(v.end(), ds.split.test_target.begin(), ds.split.test_target.end());
    return v;
}

namespace {

// One evaluated sample's prediction as a standalone (H,W,1) tensor.
template <typename T>
TensorT<T> slice_pred(const TensorT<T>& batch_out, std::size_t row) {
    const std::size_t n = static_cast<std::size_t>(kImgH) * kImgW;
    TensorT<T> out({kImgH, kImgW, 1});
    std::memcpy(out.data.data(), batch_out.data.data() + row * n, n * sizeof(T));
    return out;
}

Tensor gt_image(const Sample& s) {
    Tensor img({kImgH, kImgW, 1});
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = s.skeleton[i] ? 1.0 : 0.0;
    return img;
}

}  // namespace

template <typename T>
EvalResult evaluate(ModelParamsT<T>& params, const Dataset& ds,
                    const std::vector<std::uint32_t>& indices, double tau,
                    const DumpHook<T>& hook) {
    if (indices.empty()) throw InvalidArgument("evaluate needs at least one sample");
    EvalResult res;
    res.indices = indices;
    res.subjects.reserve(indices.size());
    res.distances.reserve(indices.size());

    const std::size_t chunk = 64;
    for (std::size_t at = 0; at < indices.size(); at += chunk) {
        const std::size_t count = std::min(chunk, indices.size() - at);
        // Targets are unlabelled, so assemble inputs directly (no one-hot).
        TensorT<T> x({static_cast<int>(count), kCsiH, kCsiW, kCsiC});
        const std::size_t nx = static_cast<std::size_t>(kCsiH) * kCsiW * kCsiC;
        for (std::size_t r = 0; r < count; ++r) {
            const std::uint32_t idx = indices[at + r];
            if (idx >= ds.samples.size()) throw InvalidArgument("sample index out of range");
            const Sample& s = ds.samples[idx];
            for (std::size_t e = 0; e < nx; ++e) x.data[r * nx + e] = static_cast<T>(s.csi[e]);
        }
        Graph<T> g;
        ParamNodes pn = bind_params(g, params);
        const int xin = g.input(std::move(x));
        const int z = feature_extractor(g, pn, xin, params.cfg);
        const int y = generator(g, pn, z, params.cfg);
        const TensorT<T>& pred = g.val(y);

        for (std::size_t r = 0; r < count; ++r) {
            const Sample& s = ds.samples[indices[at + r]];
            TensorT<T> p = slice_pred(pred, r);
            if (hook) hook(at + r, s, p);
            Tensor pd({kImgH, kImgW, 1});
            for (std::size_t e = 0; e < pd.data.size(); ++e)
                pd.data[e] = static_cast<double>(p.data[e]);
            const Tensor pb = pcs::binarize(pd, pcs::BinarizeMode::prediction, tau);
            const Tensor gb = pcs::binarize(gt_image(s), pcs::BinarizeMode::ground_truth);
            res.subjects.push_back(static_cast<int>(s.subject));
            res.distances.push_back(pcs::euclidean_distance(pb, gb));
        }
    }
    res.report = pcs::make_report_from_distances(res.distances, res.subjects,
                                                 static_cast<int>(ds.k_total), tau);
    return res;
}

void write_distances_csv(const std::string& path, double tau, const std::vector<int>& subjects,
                         const std::vector<double>& distances) {
    if (subjects.size() != distances.size())
        throw InvalidArgument("subject/distance column length mismatch");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open " + path + " for writing");
    std::fprintf(f, "# tau = %.12g\n", tau);
    std::fputs("subject,distance\n", f);
    for (std::size_t i = 0; i < subjects.size(); ++i)
        std::fprintf(f, "%d,%.12g\n", subjects[i], distances[i]);
    if (std::fclose(f) != 0) throw IoError("failed to flush " + path);
}

void read_distances_csv(const std::string& path, double& tau, std::vector<int>& subjects,
                        std::vector<double>& distances) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    subjects.clear();
    distances.clear();
    std::string line;
    if (!std::getline(is, line) || line.rfind("# tau =", 0) != 0)
        throw IoError(path + ": missing '# tau =' header line");
    tau = std::stod(line.substr(7));
    if (!std::getline(is, line) || line != "subject,distance")
        throw IoError(path + ": missing 'subject,distance' header");
    std::size_t lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected subject,distance");
        try {
            subjects.push_back(std::stoi(line.substr(0, comma)));
            distances.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(lineno) + ": malformed row");
        }
    }
    if (subjects.empty()) throw IoError(path + ": no distance rows");
}

template EvalResult evaluate<float>(ModelParamsT<float>&, const Dataset&,
                                    const std::vector<std::uint32_t>&, double,
                                    const DumpHook<float>&);
template EvalResult evaluate<double>(ModelParamsT<double>&, const Dataset&,
                                     const std::vector<std::uint32_t>&, double,
                                     const DumpHook<double>&);

}  // namespace dinn
