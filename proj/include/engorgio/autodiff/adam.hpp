#pragma once

#include "engorgio/autodiff/tensor.hpp"

#include <span>
#include <vector>

namespace engorgio::ad {

struct AdamConfig {
    double learning_rate = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. One optimizer instance owns the moment
// estimates for a fixed list of parameter tensors.
class Adam {
public:
    explicit Adam(AdamConfig config) : config_(config) {}

    void step(std::span<Tensor> params, std::span<const Tensor> grads);
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    const AdamConfig& config() const { return config_; }
    std::size_t steps_taken() const { return t_; }

private:
    AdamConfig config_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

} // namespace engorgio::ad
