#include "engorgio/cost/flops.hpp"

#include "engorgio/error.hpp"

#include <string>

namespace engorgio::cost {

namespace {

Flops dense_per_token(const ModelDims& d) {
    const Flops h = d.hidden;
    return 2 * (4 * h * h + 2 * h * d.mlp_hidden());
}

void check_dims(const ModelDims& dims) {
    dims.validate();
}

} // namespace

Flops forward_flops(const ModelDims& dims, std::size_t n) {
    check_dims(dims);
    if (n < 1 || n > dims.max_context) {
        throw ContractError("forward_flops: n=" + std::to_string(n) + " outside [1, " +
                            std::to_string(dims.max_context) + "]");
    }
    const Flops nn = n;
    const Flops per_layer = nn * dense_per_token(dims) + 2 * nn * nn * dims.hidden;
    return dims.layers * per_layer + 2 * nn * dims.hidden * dims.vocab;
}

Flops attention_flops(const ModelDims& dims, std::size_t n) {
    check_dims(dims);
    if (n < 1 || n > dims.max_context) {
        throw ContractError("attention_flops: n=" + std::to_string(n) + " outside [1, " +
                            std::to_string(dims.max_context) + "]");
    }
    const Flops nn = n;
    return dims.layers * 2 * nn * nn * dims.hidden;
}

Flops kv_step_flops(const ModelDims& dims, std::size_t c) {
    check_dims(dims);
    if (c < 1 || c > dims.max_context) {
        throw ContractError("kv_step_flops: c=" + std::to_string(c) + " outside [1, " +
                            std::to_string(dims.max_context) + "]");
    }
    const Flops cc = c;
    return dims.layers * (dense_per_token(dims) + 4 * cc * dims.hidden) + 2 * Flops{dims.hidden} * dims.vocab;
}

GenerationCost generation_flops(const ModelDims& dims, std::size_t prompt_len, std::size_t out_len, CacheMode mode) {
    check_dims(dims);
    if (prompt_len < 1 || prompt_len + out_len > dims.max_context) {
        throw ContractError("generation_flops: need 1 <= prompt_len and prompt_len + out_len <= " +
                            std::to_string(dims.max_context));
    }
    GenerationCost cost;
    cost.prompt = forward_flops(dims, prompt_len);
    for (std::size_t j = 1; j <= out_len; ++j) {
        const std::size_t c = prompt_len + j;
        cost.output += mode == CacheMode::KvCache ? kv_step_flops(dims, c) : forward_flops(dims, c);
    }
    return cost;
}

std::vector<FlopsPoint> flops_curve(const ModelDims& dims, std::size_t prompt_len, std::span<const std::size_t> out_lens,
                                    CacheMode mode) {
    std::vector<FlopsPoint> out;
    out.reserve(out_lens.size());
    for (std::size_t m : out_lens) {
        out.push_back({m, generation_flops(dims, prompt_len, m, mode)});
    }
    return out;
}

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ContractError("linear_fit_r2: need two equal-length series of >= 2 points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw ContractError("linear_fit_r2: x has zero variance");
    }
    if (syy == 0.0) {
        return 1.0;
    }
    return (sxy * sxy) / (sxx * syy);
}

} // namespace engorgio::cost
