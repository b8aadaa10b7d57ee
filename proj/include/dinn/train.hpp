#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dinn/dataset.hpp"
#include "dinn/model.hpp"
#include "dinn/optim.hpp"

namespace dinn {

enum class Stage { pretrain, adversarial };

inline const char* stage_name(Stage s) {
    return s == Stage::pretrain ? "pretrain" : "adversarial";
}

struct TrainConfig {
    std::uint64_t seed = 0;
    double lr1 = 1e-3;   // extractor + generator
    double lr2 = 1e-4;   // discriminator
    double lambda = 0.1; // weight of the adversarial term
    int batch = 32;
    int epochs_pretrain = 6;
    int epochs_adversarial = 20;
    double decay_factor = 0.95;
    int decay_period = 5;  // epochs per decay step, counted globally
    bool ablation = false; // train both stages without adversarial feedback
    ModelConfig model;

    int total_epochs() const { return epochs_pretrain + epochs_adversarial; }
    void validate() const;
};

struct LossRecord {
    int epoch = 0;  // global, 0-based
    Stage stage = Stage::pretrain;
    double loss_g = 0, loss_d = 0, loss_joint = 0, disc_acc = 0;
};

struct StepStats {
    double loss_g = 0, loss_d = 0;
};

template <typename T>
struct BatchT {
    TensorT<T> x;  // (B,30,20,4)
    TensorT<T> y;  // (B,120,160,1), values in {0,1}
    TensorT<T> d;  // (B,K) one-hot domain labels
};

template <typename T>
BatchT<T> make_batch(const Dataset& ds, const std::vector<std::uint32_t>& order,
                     std::size_t begin, std::size_t count, int domains);

// Owns the parameters and the two optimizers (extractor+generator vs
// discriminator). Both step functions advance both optimizers once per
// batch: the generator descends the reconstruction loss, the discriminator
// descends the domain loss, and the extractor either follows the
// reconstruction gradient alone (pretrain) or the combined direction
// grad(L_g) - lambda * grad(L_d) (adversarial).
template <typename T>
class TrainerT {
  public:
    TrainerT(ModelParamsT<T> params, AdamConfig adam = {});

    StepStats pretrain_step(const BatchT<T>& batch, double lr1, double lr2);
    StepStats adversarial_step(const BatchT<T>& batch, double lambda, double lr1, double lr2);

    ModelParamsT<T>& params() { return params_; }
    ModelParamsT<T> snapshot() const { return params_; }

  private:
    StepStats run_step(const BatchT<T>& batch, bool adversarial, double lambda, double lr1,
                       double lr2);

    ModelParamsT<T> params_;
    AdamT<T> opt_fg_, opt_d_;
    std::size_t fe_slots_ = 0;
};

template <typename T>
struct TrainResultT {
    ModelParamsT<T> params;           // after the full schedule
    ModelParamsT<T> pretrain_params;  // snapshot when the pretrain stage ended
    std::vector<LossRecord> history;  // one record per epoch
};

using EpochCallback = std::function<void(const LossRecord&)>;

template <typename T>
TrainResultT<T> train(const Dataset& ds, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = nullptr);

// Fraction of correctly classified subjects over the given (labelled)
// samples; argmax ties resolve to the lowest class index.
template <typename T>
double discriminator_accuracy(ModelParamsT<T>& params, const Dataset& ds,
                              const std::vector<std::uint32_t>& indices);

void write_metrics_csv(const std::string& path, const std::vector<LossRecord>& history);

extern template class TrainerT<float>;
extern template class TrainerT<double>;

}  // namespace dinn
