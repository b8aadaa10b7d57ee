#include "dinn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "dinn/graph.hpp"
#include "dinn/losses.hpp"
#include "dinn/rng.hpp"

namespace dinn {

void TrainConfig::validate() const {
    model.validate();
    if (!(lr1 > 0) || !std::isfinite(lr1)) throw ConfigError("lr1 must be positive and finite");
    if (!(lr2 > 0) || !std::isfinite(lr2)) throw ConfigError("lr2 must be positive and finite");
    if (!std::isfinite(lambda) || lambda < 0)
        throw ConfigError("lambda must be non-negative and finite");
    if (!ablation && epochs_adversarial > 0 && lambda == 0)
        throw ConfigError("lambda must be positive for adversarial training (use ablation to disable it)");
    if (batch < 1) throw ConfigError("batch size must be at least 1");
    if (epochs_pretrain < 0 || epochs_adversarial < 0)
        throw ConfigError("epoch counts must be non-negative");
    if (!(decay_factor > 0) || decay_factor > 1)
        throw ConfigError("decay factor must be in (0,1]");
    if (decay_period < 1) throw ConfigError("decay period must be at least 1");
}

namespace {

// Targets are reshaped to match whatever shape the network emitted so the
// loss sees identical ranks (a batch of one collapses to unbatched shapes).
template <typename T>
TensorT<T> with_shape(TensorT<T> t, const Shape& s) {
    if (shape_numel(s) != t.numel())
        throw ShapeError("target reshape changes element count: " + shape_str(t.shape) +
                         " vs " + shape_str(s));
    t.shape = s;
    return t;
}

template <typename T>
std::vector<TensorT<T>*> tensor_ptrs(const std::vector<NamedParam<T>>& named) {
    std::vector<TensorT<T>*> out;
    out.reserve(named.size());
    for (const auto& p : named) out.push_back(p.tensor);
    return out;
}

struct ForwardNodes {
    int x = -1, z = -1, y = -1, d = -1, loss_g = -1, loss_d = -1;
};

template <typename T>
ForwardNodes forward_losses(Graph<T>& g, ParamNodes& pn, const BatchT<T>& batch,
                            const ModelConfig& cfg) {
    ForwardNodes f;
    f.x = g.input(batch.x);
    f.z = feature_extractor(g, pn, f.x, cfg);
    f.y = generator(g, pn, f.z, cfg);
    f.d = discriminator(g, pn, f.z, cfg);
    const int yt = g.input(with_shape(batch.y, g.val(f.y).shape));
    const int dt = g.input(with_shape(batch.d, g.val(f.d).shape));
    f.loss_g = generation_loss(g, f.y, yt);
    f.loss_d = domain_loss(g, f.d, dt);
    return f;
}

}  // namespace

template <typename T>
TrainerT<T>::TrainerT(ModelParamsT<T> params, AdamConfig adam)
    : params_(std::move(params)),
      opt_fg_(tensor_ptrs(params_.named_fe_gen()), adam),
      opt_d_(tensor_ptrs(params_.named_disc()), adam),
      fe_slots_(params_.named_fe().size()) {}

template <typename T>
StepStats TrainerT<T>::pretrain_step(const BatchT<T>& batch, double lr1, double lr2) {
    return run_step(batch, false, 0.0, lr1, lr2);
}

template <typename T>
StepStats TrainerT<T>::adversarial_step(const BatchT<T>& batch, double lambda, double lr1,
                                        double lr2) {
    if (!std::isfinite(lambda) || lambda < 0)
        throw InvalidArgument("lambda must be non-negative and finite");
    return run_step(batch, true, lambda, lr1, lr2);
}

template <typename T>
StepStats TrainerT<T>::run_step(const BatchT<T>& batch, bool adversarial, double lambda,
                                double lr1, double lr2) {
    Graph<T> g;
    ParamNodes pn = bind_params(g, params_);
    const ForwardNodes f = forward_losses(g, pn, batch, params_.cfg);

    StepStats stats;
    stats.loss_g = static_cast<double>(g.val(f.loss_g).data[0]);
    stats.loss_d = static_cast<double>(g.val(f.loss_d).data[0]);

    std::vector<int> fe_gen_nodes = pn.ordered_fe_gen();
    std::vector<int> disc_nodes = pn.ordered_disc();

    // Reconstruction pass: grab the extractor gradients before they are
    // overwritten by the domain pass, and step the generator right away.
    g.backward(f.loss_g);
    std::vector<TensorT<T>> fe_grads;
    fe_grads.reserve(fe_slots_);
    for (std::size_t i = 0; i < fe_slots_; ++i) fe_grads.push_back(g.grad(fe_gen_nodes[i]));

    opt_fg_.begin_step(lr1);
    for (std::size_t i = fe_slots_; i < fe_gen_nodes.size(); ++i)
        opt_fg_.update(i, g.grad(fe_gen_nodes[i]));

    // Domain pass: the discriminator descends it; the extractor ascends it
    // (scaled by lambda) when adversarial feedback is on.
    g.backward(f.loss_d);
    opt_d_.begin_step(lr2);
    for (std::size_t j = 0; j < disc_nodes.size(); ++j) opt_d_.update(j, g.grad(disc_nodes[j]));

    if (adversarial) {
        const T lam = static_cast<T>(lambda);
        for (std::size_t i = 0; i < fe_slots_; ++i) {
            const TensorT<T>& gd = g.grad(fe_gen_nodes[i]);
            TensorT<T>& gl = fe_grads[i];
            for (std::size_t e = 0; e < gl.data.size(); ++e) gl.data[e] -= lam * gd.data[e];
        }
    }
    for (std::size_t i = 0; i < fe_slots_; ++i) opt_fg_.update(i, fe_grads[i]);
    return stats;
}

template <typename T>
BatchT<T> make_batch(const Dataset& ds, const std::vector<std::uint32_t>& order,
                     std::size_t begin, std::size_t count, int domains) {
    if (count < 1 || begin + count > order.size())
        throw InvalidArgument("batch range out of bounds");
    const int b = static_cast<int>(count);
    BatchT<T> out{TensorT<T>({b, kCsiH, kCsiW, kCsiC}), TensorT<T>({b, kImgH, kImgW, 1}),
                  TensorT<T>({b, domains})};
    const std::size_t nx = static_cast<std::size_t>(kCsiH) * kCsiW * kCsiC;
    const std::size_t ny = static_cast<std::size_t>(kImgH) * kImgW;
    for (std::size_t r = 0; r < count; ++r) {
        const std::uint32_t idx = order[begin + r];
        if (idx >= ds.samples.size()) throw InvalidArgument("sample index out of range");
        const Sample& s = ds.samples[idx];
        if (s.onehot.size() != static_cast<std::size_t>(domains))
            throw ConfigError("sample lacks a domain label of width " + std::to_string(domains) +
                              " (got " + std::to_string(s.onehot.size()) + ")");
        for (std::size_t e = 0; e < nx; ++e)
            out.x.data[r * nx + e] = static_cast<T>(s.csi[e]);
        for (std::size_t e = 0; e < ny; ++e)
            out.y.data[r * ny + e] = s.skeleton[e] ? T(1) : T(0);
        for (int k = 0; k < domains; ++k)
            out.d.data[r * domains + k] = static_cast<T>(s.onehot[k]);
    }
    return out;
}

template <typename T>
double discriminator_accuracy(ModelParamsT<T>& params, const Dataset& ds,
                              const std::vector<std::uint32_t>& indices) {
    if (indices.empty()) throw InvalidArgument("accuracy needs at least one sample");
    const int k = params.cfg.domains;
    std::size_t hits = 0;
    const std::size_t chunk = 64;
    for (std::size_t at = 0; at < indices.size(); at += chunk) {
        const std::size_t count = std::min(chunk, indices.size() - at);
        BatchT<T> batch = make_batch<T>(ds, indices, at, count, k);
        Graph<T> g;
        ParamNodes pn = bind_params(g, params);
        const int x = g.input(batch.x);
        const int z = feature_extractor(g, pn, x, params.cfg);
        const int d = discriminator(g, pn, z, params.cfg);
        const TensorT<T>& probs = g.val(d);
        for (std::size_t r = 0; r < count; ++r) {
            int best = 0;
            for (int c = 1; c < k; ++c)
                if (probs.data[r * k + c] > probs.data[r * k + best]) best = c;
            int truth = 0;
            for (int c = 1; c < k; ++c)
                if (batch.d.data[r * k + c] > batch.d.data[r * k + truth]) truth = c;
            if (best == truth) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

template <typename T>
TrainResultT<T> train(const Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (ds.k_total < 2) throw ConfigError("dataset must hold at least two subjects");
    if (cfg.model.domains != ds.source_domains())
        throw ConfigError("model expects " + std::to_string(cfg.model.domains) +
                          " source domains but the dataset provides " +
                          std::to_string(ds.source_domains()));
    if (ds.split.train.empty()) throw ConfigError("empty training split");
    if (ds.split.test_source.empty()) throw ConfigError("empty source-domain test split");

    TrainResultT<T> res;
    TrainerT<T> trainer(init_params<T>(cfg.seed, cfg.model));
    if (cfg.epochs_pretrain == 0) res.pretrain_params = trainer.snapshot();

    Rng shuffle_rng(derive_seed(cfg.seed, 0x50FF1EULL));
    std::vector<std::uint32_t> order = ds.split.train;
    res.history.reserve(cfg.total_epochs());

    for (int epoch = 0; epoch < cfg.total_epochs(); ++epoch) {
        const bool adversarial_stage = epoch >= cfg.epochs_pretrain;
        const bool use_adversarial = adversarial_stage && !cfg.ablation;
        const double lr1 = lr_schedule(cfg.lr1, epoch, cfg.decay_factor, cfg.decay_period);
        const double lr2 = lr_schedule(cfg.lr2, epoch, cfg.decay_factor, cfg.decay_period);

        shuffle_rng.shuffle(order);
        double sum_g = 0, sum_d = 0;
        std::size_t seen = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
            const std::size_t count = std::min<std::size_t>(cfg.batch, order.size() - at);
            BatchT<T> batch = make_batch<T>(ds, order, at, count, cfg.model.domains);
            const StepStats st =
                use_adversarial ? trainer.adversarial_step(batch, cfg.lambda, lr1, lr2)
                                : trainer.pretrain_step(batch, lr1, lr2);
            sum_g += st.loss_g * count;
            sum_d += st.loss_d * count;
            seen += count;
        }

        LossRecord rec;
        rec.epoch = epoch;
        rec.stage = adversarial_stage ? Stage::adversarial : Stage::pretrain;
        rec.loss_g = sum_g / static_cast<double>(seen);
        rec.loss_d = sum_d / static_cast<double>(seen);
        rec.loss_joint = loss_joint(rec.loss_g, rec.loss_d, cfg.lambda);
        rec.disc_acc = discriminator_accuracy(trainer.params(), ds, ds.split.test_source);
        res.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (epoch == cfg.epochs_pretrain - 1) res.pretrain_params = trainer.snapshot();
    }
    res.params = trainer.snapshot();
    return res;
}

void write_metrics_csv(const std::string& path, const std::vector<LossRecord>& history) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open " + path + " for writing");
    std::fputs("epoch,stage,loss_g,loss_d,loss_joint,disc_acc\n", f);
    for (const LossRecord& r : history)
        std::fprintf(f, "%d,%s,%.12g,%.12g,%.12g,%.12g\n", r.epoch, stage_name(r.stage), r.loss_g,
                     r.loss_d, r.loss_joint, r.disc_acc);
    if (std::fclose(f) != 0) throw IoError("failed to flush " + path);
}

template class TrainerT<float>;
template class TrainerT<double>;
template BatchT<float> make_batch<float>(const Dataset&, const std::vector<std::uint32_t>&,
                                         std::size_t, std::size_t, int);
template BatchT<double> make_batch<double>(const Dataset&, const std::vector<std::uint32_t>&,
                                           std::size_t, std::size_t, int);
template double discriminator_accuracy<float>(ModelParamsT<float>&, const Dataset&,
                                              const std::vector<std::uint32_t>&);
template double discriminator_accuracy<double>(ModelParamsT<double>&, const Dataset&,
                                               const std::vector<std::uint32_t>&);
template TrainResultT<float> train<float>(const Dataset&, const TrainConfig&,
                                          const EpochCallback&);
template TrainResultT<double> train<double>(const Dataset&, const TrainConfig&,
                                            const EpochCallback&);

}  // namespace dinn
