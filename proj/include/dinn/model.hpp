#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dinn/graph.hpp"
#include "dinn/tensor.hpp"

namespace dinn {

// Fixed data geometry: 30x20x4 radio feature maps in, 120x160 grayscale
// silhouette frames out, with a 4x3x128 shared bottleneck between the
// extractor and the two heads.
inline constexpr int kCsiH = 30, kCsiW = 20, kCsiC = 4;
inline constexpr int kImgH = 120, kImgW = 160;
inline constexpr int kBottleneckH = 4, kBottleneckW = 3, kBottleneckC = 128;
inline constexpr int kFeatureDim = kBottleneckH * kBottleneckW * kBottleneckC;  // 1536

struct ModelConfig {
    int domains = 4;         // source-domain count K (discriminator output width)
    double lrelu_alpha = 0.2;
    int se_ratio = 16;       // channel-attention squeeze ratio

    void validate() const;
    int se_hidden() const { return kBottleneckC / se_ratio; }
};

template <typename T>
struct ConvLayerP {
    TensorT<T> kernel;  // (kh,kw,in_c,out_c)
    TensorT<T> bias;    // (out_c)
};

template <typename T>
struct DenseLayerP {
    TensorT<T> w;  // (in,out)
    TensorT<T> b;  // (out)
};

template <typename T>
struct NamedParam {
    std::string name;
    TensorT<T>* tensor;
};

// All learnable state, grouped per network. Checkpoints, optimizers and the
// initializer all walk the canonical named() order.
template <typename T>
struct ModelParamsT {
    ModelConfig cfg;
    // extractor: six conv layers plus the channel-attention pair
    std::array<ConvLayerP<T>, 6> fe_conv;
    DenseLayerP<T> se_squeeze, se_expand;
    // generator: projection plus seven upsampling conv layers
    DenseLayerP<T> gen_fc;
    std::array<ConvLayerP<T>, 7> gen_conv;
    // discriminator: four dense layers
    std::array<DenseLayerP<T>, 4> disc_fc;

    std::vector<NamedParam<T>> named();
    std::vector<NamedParam<T>> named_fe();
    std::vector<NamedParam<T>> named_gen();
    std::vector<NamedParam<T>> named_disc();
    std::vector<NamedParam<T>> named_fe_gen();
    std::size_t count() const;
};

// Allocates zeroed parameters with the architecture's shapes.
template <typename T>
ModelParamsT<T> make_params(const ModelConfig& cfg);

// Gaussian fan-in initialization from one deterministic stream: variance
// 2/fan_in ahead of (L)ReLU, 1/fan_in ahead of sigmoid/softmax, zero biases.
// The stream is drawn in double and narrowed, so every scalar type sees the
// same values.
template <typename T>
ModelParamsT<T> init_params(std::uint64_t seed, const ModelConfig& cfg);

template <typename To, typename From>
ModelParamsT<To> convert_params(const ModelParamsT<From>& src) {
    ModelParamsT<To> dst = make_params<To>(src.cfg);
    auto a = dst.named();
    auto b = const_cast<ModelParamsT<From>&>(src).named();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b[i].tensor->numel(); ++j)
            a[i].tensor->data[j] = static_cast<To>(b[i].tensor->data[j]);
    return dst;
}

// Graph node ids of the bound parameters, laid out like ModelParamsT.
struct ParamNodes {
    struct Conv {
        int kernel, bias;
    };
    struct Fc {
        int w, b;
    };
    std::array<Conv, 6> fe_conv;
    Fc se_squeeze, se_expand;
    Fc gen_fc;
    std::array<Conv, 7> gen_conv;
    std::array<Fc, 4> disc_fc;

    // Node ids in the same order as the ModelParamsT named_* lists, so
    // optimizer slot i always refers to the tensor behind node list[i].
    std::vector<int> ordered_fe_gen() const {
        std::vector<int> v;
        for (const Conv& c : fe_conv) {
            v.push_back(c.kernel);
            v.push_back(c.bias);
        }
        v.insert(v.end(), {se_squeeze.w, se_squeeze.b, se_expand.w, se_expand.b});
        v.insert(v.end(), {gen_fc.w, gen_fc.b});
        for (const Conv& c : gen_conv) {
            v.push_back(c.kernel);
            v.push_back(c.bias);
        }
        return v;
    }
    std::vector<int> ordered_disc() const {
        std::vector<int> v;
        for (const Fc& f : disc_fc) {
            v.push_back(f.w);
            v.push_back(f.b);
        }
        return v;
    }
};

template <typename T>
ParamNodes bind_params(Graph<T>& g, ModelParamsT<T>& p);

struct LayerShape {
    std::string name;
    Shape shape;
};

// Forward builders. x/z are graph node ids; each returns the output node.
// Passing a trace records every layer's output shape.
template <typename T>
int feature_extractor(Graph<T>& g, const ParamNodes& pn, int x, const ModelConfig& cfg,
                      std::vector<LayerShape>* trace = nullptr);
template <typename T>
int generator(Graph<T>& g, const ParamNodes& pn, int z, const ModelConfig& cfg,
              std::vector<LayerShape>* trace = nullptr);
template <typename T>
int discriminator(Graph<T>& g, const ParamNodes& pn, int z, const ModelConfig& cfg,
                  std::vector<LayerShape>* trace = nullptr);

}  // namespace dinn
