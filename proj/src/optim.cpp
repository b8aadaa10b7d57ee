#include "dinn/optim.hpp"

#include <cmath>
#include <string>

#include "dinn/common.hpp"

namespace dinn {

template <typename T>
AdamT<T>::AdamT(std::vector<TensorT<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    if (params_.empty()) throw InvalidArgument("adam: parameter list is empty");
    if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) || !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0))
        throw ConfigError("adam: betas must lie in [0,1)");
    if (!(cfg_.eps > 0.0)) throw ConfigError("adam: eps must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (TensorT<T>* p : params_) {
        if (p == nullptr) throw InvalidArgument("adam: null parameter tensor");
        m_.emplace_back(p->shape);
        v_.emplace_back(p->shape);
    }
}

template <typename T>
void AdamT<T>::begin_step(double lr) {
    if (!(lr > 0.0)) throw InvalidArgument("adam: learning rate must be positive, got " + std::to_string(lr));
    ++t_;
    lr_ = static_cast<T>(lr);
    inv_bc1_ = static_cast<T>(1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_))));
    inv_bc2_ = static_cast<T>(1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_))));
    stepping_ = true;
}

template <typename T>
void AdamT<T>::update(std::size_t slot, const TensorT<T>& grad) {
    if (!stepping_) throw InvalidArgument("adam: update() outside begin_step()");
    if (slot >= params_.size()) throw InvalidArgument("adam: slot out of range");
    TensorT<T>& p = *params_[slot];
    if (!grad.same_shape(p))
        throw ShapeError("adam: gradient shape " + shape_str(grad.shape) +
                         " does not match parameter shape " + shape_str(p.shape));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T one_b1 = T(1) - b1, one_b2 = T(1) - b2;
    const T eps = static_cast<T>(cfg_.eps);
    T* m = m_[slot].ptr();
    T* v = v_[slot].ptr();
    T* th = p.ptr();
    const T* g = grad.ptr();
    const std::size_t n = p.numel();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + one_b1 * g[i];
        v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
        const T mhat = m[i] * inv_bc1_;
        const T vhat = v[i] * inv_bc2_;
        th[i] -= lr_ * mhat / (std::sqrt(vhat) + eps);
    }
}

template <typename T>
void AdamT<T>::step(const std::vector<const TensorT<T>*>& grads, double lr) {
    if (grads.size() != params_.size())
        throw InvalidArgument("adam: expected " + std::to_string(params_.size()) +
                              " gradients, got " + std::to_string(grads.size()));
    begin_step(lr);
    for (std::size_t i = 0; i < grads.size(); ++i) update(i, *grads[i]);
    stepping_ = false;
}

template class AdamT<float>;
template class AdamT<double>;

double lr_schedule(double initial, int epoch, double factor, int period) {
    if (epoch < 0) throw InvalidArgument("lr_schedule: epoch must be >= 0");
    if (period < 1) throw ConfigError("lr_schedule: period must be >= 1");
    if (!(initial > 0.0)) throw ConfigError("lr_schedule: initial rate must be positive");
    if (!(factor > 0.0)) throw ConfigError("lr_schedule: decay factor must be positive");
    return initial * std::pow(factor, static_cast<double>(epoch / period));
}

}  // namespace dinn
