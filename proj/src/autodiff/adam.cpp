#include "engorgio/autodiff/adam.hpp"

#include "engorgio/error.hpp"

#include <cmath>

namespace engorgio::ad {

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) {
        throw ContractError("adam: parameter / gradient count mismatch");
    }
    if (m_.empty()) {
        for (const Tensor& p : params) {
            m_.push_back(Tensor::zeros(p.shape()));
            v_.push_back(Tensor::zeros(p.shape()));
        }
    }
    if (m_.size() != params.size()) {
        throw ContractError("adam: parameter list changed between steps");
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape() != grads[i].shape()) {
            throw ShapeError("adam: gradient shape " + shape_str(grads[i].shape()) + " != parameter shape " +
                             shape_str(params[i].shape()));
        }
        auto p = params[i].data();
        const auto g = grads[i].data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            p[j] -= config_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
        }
    }
}

} // namespace engorgio::ad
