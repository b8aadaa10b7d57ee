#include "dinn/model.hpp"

#include <cmath>
#include <string>

#include "dinn/common.hpp"
#include "dinn/rng.hpp"

namespace dinn {

namespace {

struct ConvSpec {
    int k, in_c, out_c, stride;
};
struct GenConvSpec {
    int k, in_c, out_c;
    int resize_h, resize_w;  // 0 = no resize ahead of this layer
};

// extractor ladder: 30x20x4 -> 15x10x8 -> 8x5x32 -> 4x3x128, alternating
// strided 3x3 and pointwise 1x1 layers
constexpr ConvSpec kFeConv[6] = {
    {3, kCsiC, 8, 2}, {1, 8, 8, 1},     {3, 8, 32, 2},
    {1, 32, 32, 1},   {3, 32, 128, 2},  {1, 128, 128, 1},
};

// generator ladder: 8x10x128 -> 15x20 -> 30x40 -> 60x80 -> 120x160
constexpr int kGenSeedH = 8, kGenSeedW = 10, kGenSeedC = 128;
constexpr GenConvSpec kGenConv[7] = {
    {1, 128, 64, 15, 20}, {1, 64, 64, 0, 0}, {3, 64, 32, 30, 40}, {3, 32, 32, 0, 0},
    {3, 32, 8, 60, 80},   {3, 8, 8, 0, 0},   {3, 8, 1, kImgH, kImgW},
};

constexpr int kDiscWidths[3] = {1024, 1024, 128};  // final width is cfg.domains

}  // namespace

void ModelConfig::validate() const {
    if (domains < 2)
        throw ConfigError("model: need at least 2 source domains, got " + std::to_string(domains));
    if (!(lrelu_alpha >= 0.0) || lrelu_alpha >= 1.0)
        throw ConfigError("model: leaky slope must lie in [0,1), got " + std::to_string(lrelu_alpha));
    if (se_ratio < 1 || kBottleneckC % se_ratio != 0)
        throw ConfigError("model: squeeze ratio must divide " + std::to_string(kBottleneckC) +
                          ", got " + std::to_string(se_ratio));
}

template <typename T>
ModelParamsT<T> make_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParamsT<T> p;
    p.cfg = cfg;
    for (int i = 0; i < 6; ++i) {
        const ConvSpec& s = kFeConv[i];
        p.fe_conv[i].kernel = TensorT<T>({s.k, s.k, s.in_c, s.out_c});
        p.fe_conv[i].bias = TensorT<T>({s.out_c});
    }
    const int hidden = cfg.se_hidden();
    p.se_squeeze.w = TensorT<T>({kBottleneckC, hidden});
    p.se_squeeze.b = TensorT<T>({hidden});
    p.se_expand.w = TensorT<T>({hidden, kBottleneckC});
    p.se_expand.b = TensorT<T>({kBottleneckC});

    p.gen_fc.w = TensorT<T>({kFeatureDim, kGenSeedH * kGenSeedW * kGenSeedC});
    p.gen_fc.b = TensorT<T>({kGenSeedH * kGenSeedW * kGenSeedC});
    for (int i = 0; i < 7; ++i) {
        const GenConvSpec& s = kGenConv[i];
        p.gen_conv[i].kernel = TensorT<T>({s.k, s.k, s.in_c, s.out_c});
        p.gen_conv[i].bias = TensorT<T>({s.out_c});
    }

    int in = kFeatureDim;
    for (int i = 0; i < 4; ++i) {
        const int out = i < 3 ? kDiscWidths[i] : cfg.domains;
        p.disc_fc[i].w = TensorT<T>({in, out});
        p.disc_fc[i].b = TensorT<T>({out});
        in = out;
    }
    return p;
}

template <typename T>
std::vector<NamedParam<T>> ModelParamsT<T>::named_fe() {
    std::vector<NamedParam<T>> v;
    for (int i = 0; i < 6; ++i) {
        const std::string base = "fe.conv" + std::to_string(i + 1);
        v.push_back({base + ".kernel", &fe_conv[i].kernel});
        v.push_back({base + ".bias", &fe_conv[i].bias});
    }
    v.push_back({"fe.se_squeeze.w", &se_squeeze.w});
    v.push_back({"fe.se_squeeze.b", &se_squeeze.b});
    v.push_back({"fe.se_expand.w", &se_expand.w});
    v.push_back({"fe.se_expand.b", &se_expand.b});
    return v;
}

template <typename T>
std::vector<NamedParam<T>> ModelParamsT<T>::named_gen() {
    std::vector<NamedParam<T>> v;
    v.push_back({"gen.fc.w", &gen_fc.w});
    v.push_back({"gen.fc.b", &gen_fc.b});
    for (int i = 0; i < 7; ++i) {
        const std::string base = "gen.conv" + std::to_string(i + 1);
        v.push_back({base + ".kernel", &gen_conv[i].kernel});
        v.push_back({base + ".bias", &gen_conv[i].bias});
    }
    return v;
}

template <typename T>
std::vector<NamedParam<T>> ModelParamsT<T>::named_disc() {
    std::vector<NamedParam<T>> v;
    for (int i = 0; i < 4; ++i) {
        const std::string base = "disc.fc" + std::to_string(i + 1);
        v.push_back({base + ".w", &disc_fc[i].w});
        v.push_back({base + ".b", &disc_fc[i].b});
    }
    return v;
}

template <typename T>
std::vector<NamedParam<T>> ModelParamsT<T>::named_fe_gen() {
    auto v = named_fe();
    auto g = named_gen();
    v.insert(v.end(), g.begin(), g.end());
    return v;
}

template <typename T>
std::vector<NamedParam<T>> ModelParamsT<T>::named() {
    auto v = named_fe_gen();
    auto d = named_disc();
    v.insert(v.end(), d.begin(), d.end());
    return v;
}

template <typename T>
std::size_t ModelParamsT<T>::count() const {
    std::size_t n = 0;
    auto v = const_cast<ModelParamsT<T>*>(this)->named();
    for (auto& np : v) n += np.tensor->numel();
    return n;
}

namespace {

// Output layers squashed by sigmoid/softmax use variance 1/fan_in; every
// (L)ReLU layer uses 2/fan_in.
bool squashed_output(const std::string& name) {
    return name == "gen.conv7.kernel" || name == "disc.fc4.w" || name == "fe.se_expand.w";
}

template <typename T>
int weight_fan_in(const NamedParam<T>& np) {
    const Shape& s = np.tensor->shape;
    if (s.size() == 4) return s[0] * s[1] * s[2];  // conv kernel
    return s[0];                                   // dense
}

}  // namespace

template <typename T>
ModelParamsT<T> init_params(std::uint64_t seed, const ModelConfig& cfg) {
    ModelParamsT<T> p = make_params<T>(cfg);
    Rng rng(derive_seed(seed, 0x1417));
    for (auto& np : p.named()) {
        const bool is_weight = np.tensor->rank() >= 2;
        if (!is_weight) continue;  // biases start at zero
        const double var = (squashed_output(np.name) ? 1.0 : 2.0) / weight_fan_in(np);
        const double sd = std::sqrt(var);
        for (auto& v : np.tensor->data) v = static_cast<T>(rng.normal(0.0, sd));
    }
    return p;
}

template <typename T>
ParamNodes bind_params(Graph<T>& g, ModelParamsT<T>& p) {
    ParamNodes n;
    for (int i = 0; i < 6; ++i)
        n.fe_conv[i] = {g.param(&p.fe_conv[i].kernel), g.param(&p.fe_conv[i].bias)};
    n.se_squeeze = {g.param(&p.se_squeeze.w), g.param(&p.se_squeeze.b)};
    n.se_expand = {g.param(&p.se_expand.w), g.param(&p.se_expand.b)};
    n.gen_fc = {g.param(&p.gen_fc.w), g.param(&p.gen_fc.b)};
    for (int i = 0; i < 7; ++i)
        n.gen_conv[i] = {g.param(&p.gen_conv[i].kernel), g.param(&p.gen_conv[i].bias)};
    for (int i = 0; i < 4; ++i)
        n.disc_fc[i] = {g.param(&p.disc_fc[i].w), g.param(&p.disc_fc[i].b)};
    return n;
}

namespace {

template <typename T>
void trace_push(Graph<T>& g, std::vector<LayerShape>* trace, const std::string& name, int id) {
    if (trace) trace->push_back({name, g.val(id).shape});
}

}  // namespace

template <typename T>
int feature_extractor(Graph<T>& g, const ParamNodes& pn, int x, const ModelConfig& cfg,
                      std::vector<LayerShape>* trace) {
    const Shape& s = g.val(x).shape;
    const bool ok = (s.size() == 3 && s[0] == kCsiH && s[1] == kCsiW && s[2] == kCsiC) ||
                    (s.size() == 4 && s[1] == kCsiH && s[2] == kCsiW && s[3] == kCsiC);
    if (!ok)
        throw ShapeError("feature_extractor: expected input (30x20x4) or (Bx30x20x4), got " +
                         shape_str(s));
    int h = x;
    for (int i = 0; i < 6; ++i) {
        h = g.relu(g.conv2d(h, pn.fe_conv[i].kernel, pn.fe_conv[i].bias, kFeConv[i].stride,
                            kFeConv[i].stride));
        trace_push(g, trace, "conv" + std::to_string(i + 1), h);
    }
    // channel attention: pooled descriptor -> bottleneck -> per-channel gate
    int gate = g.global_avg_pool(h);
    trace_push(g, trace, "se.pool", gate);
    gate = g.relu(g.dense(gate, pn.se_squeeze.w, pn.se_squeeze.b));
    trace_push(g, trace, "se.squeeze", gate);
    gate = g.sigmoid(g.dense(gate, pn.se_expand.w, pn.se_expand.b));
    trace_push(g, trace, "se.expand", gate);
    const int z = g.scale_channels(h, gate);
    trace_push(g, trace, "se.scale", z);
    (void)cfg;
    return z;
}

template <typename T>
int generator(Graph<T>& g, const ParamNodes& pn, int z, const ModelConfig& cfg,
              std::vector<LayerShape>* trace) {
    const Shape& s = g.val(z).shape;
    // rank 3 (4,3,128) or rank 1 (1536) = single sample; rank 4/2 = batch
    const bool batched = s.size() == 4 || s.size() == 2;
    int h = g.relu(g.dense(z, pn.gen_fc.w, pn.gen_fc.b));
    trace_push(g, trace, "fc", h);
    Shape seed = batched ? Shape{s[0], kGenSeedH, kGenSeedW, kGenSeedC}
                         : Shape{kGenSeedH, kGenSeedW, kGenSeedC};
    h = g.reshape(h, seed);
    trace_push(g, trace, "reshape", h);
    const T alpha = static_cast<T>(cfg.lrelu_alpha);
    for (int i = 0; i < 7; ++i) {
        const GenConvSpec& spec = kGenConv[i];
        if (spec.resize_h > 0) {
            h = g.resize_nearest(h, spec.resize_h, spec.resize_w);
            trace_push(g, trace, "resize" + std::to_string(i + 1), h);
        }
        h = g.conv2d(h, pn.gen_conv[i].kernel, pn.gen_conv[i].bias, 1, 1);
        h = i < 6 ? g.lrelu(h, alpha) : g.sigmoid(h);
        trace_push(g, trace, "conv" + std::to_string(i + 1), h);
    }
    return h;
}

template <typename T>
int discriminator(Graph<T>& g, const ParamNodes& pn, int z, const ModelConfig& cfg,
                  std::vector<LayerShape>* trace) {
    const T alpha = static_cast<T>(cfg.lrelu_alpha);
    int h = z;
    for (int i = 0; i < 3; ++i) {
        h = g.lrelu(g.dense(h, pn.disc_fc[i].w, pn.disc_fc[i].b), alpha);
        trace_push(g, trace, "fc" + std::to_string(i + 1), h);
    }
    h = g.dense(h, pn.disc_fc[3].w, pn.disc_fc[3].b);
    trace_push(g, trace, "fc4", h);
    h = g.softmax(h);
    trace_push(g, trace, "softmax", h);
    return h;
}

#define DINN_INSTANTIATE(T)                                                                   \
    template struct ModelParamsT<T>;                                                          \
    template ModelParamsT<T> make_params<T>(const ModelConfig&);                              \
    template ModelParamsT<T> init_params<T>(std::uint64_t, const ModelConfig&);               \
    template ParamNodes bind_params<T>(Graph<T>&, ModelParamsT<T>&);                          \
    template int feature_extractor<T>(Graph<T>&, const ParamNodes&, int, const ModelConfig&,  \
                                      std::vector<LayerShape>*);                              \
    template int generator<T>(Graph<T>&, const ParamNodes&, int, const ModelConfig&,          \
                              std::vector<LayerShape>*);                                      \
    template int discriminator<T>(Graph<T>&, const ParamNodes&, int, const ModelConfig&,      \
                                  std::vector<LayerShape>*);

DINN_INSTANTIATE(float)
DINN_INSTANTIATE(double)
#undef DINN_INSTANTIATE

}  // namespace dinn
