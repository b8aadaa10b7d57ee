#pragma once

#include <cstdint>
#include <vector>

#include "dinn/tensor.hpp"

namespace dinn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction over a fixed set of borrowed parameter tensors.
// One step() (or begin_step() plus one update() per slot) advances the
// shared timestep once. Slots the caller skips in a step keep their moments.
template <typename T>
class AdamT {
  public:
    explicit AdamT(std::vector<TensorT<T>*> params, AdamConfig cfg = {});

    void begin_step(double lr);
    void update(std::size_t slot, const TensorT<T>& grad);
    void step(const std::vector<const TensorT<T>*>& grads, double lr);

    std::int64_t steps() const { return t_; }
    std::size_t slots() const { return params_.size(); }

  private:
    std::vector<TensorT<T>*> params_;
    std::vector<TensorT<T>> m_, v_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    T lr_ = 0, inv_bc1_ = 0, inv_bc2_ = 0;  // resolved by begin_step
    bool stepping_ = false;
};

extern template class AdamT<float>;
extern template class AdamT<double>;

// Stepped decay: initial * factor^(epoch / period) with integer division.
double lr_schedule(double initial, int epoch, double factor = 0.95, int period = 5);

}  // namespace dinn
