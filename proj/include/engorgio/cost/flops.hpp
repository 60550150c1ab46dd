#pragma once

#include "engorgio/dims.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace engorgio::cost {

using Flops = std::uint64_t;

// Dense decoder estimate for one full pass over n tokens:
//   L * (2n(4H^2 + 2HM) + 2n^2 H) + 2nHV
// with M the MLP width. The 2n(4H^2 + 2HM) term covers the QKV/output
// projections and both MLP matmuls; 2n^2 H is the causal attention
// (half of QK^T plus AV); 2nHV is the output head.
Flops forward_flops(const ModelDims& dims, std::size_t n);

// Attention-score share of forward_flops: L * 2n^2 H.
Flops attention_flops(const ModelDims& dims, std::size_t n);

// One incremental pass for a new token at context length c (the token
// itself included) with cached keys/values:
//   L * (2(4H^2 + 2HM) + 4cH) + 2HV
Flops kv_step_flops(const ModelDims& dims, std::size_t c);

enum class CacheMode { KvCache, NoCache };

struct GenerationCost {
    Flops prompt = 0;  // prefill over the prompt
    Flops output = 0;  // one pass per generated token at its running context
    Flops total() const { return prompt + output; }
};

// Generated token j (1-based) is fed back at context prompt_len + j.
// KvCache sums kv_step_flops; NoCache re-runs forward_flops over the whole
// running context for every token.
GenerationCost generation_flops(const ModelDims& dims, std::size_t prompt_len, std::size_t out_len,
                                CacheMode mode = CacheMode::KvCache);

struct FlopsPoint {
    std::size_t out_len;
    GenerationCost cost;
};

std::vector<FlopsPoint> flops_curve(const ModelDims& dims, std::size_t prompt_len, std::span<const std::size_t> out_lens,
                                    CacheMode mode = CacheMode::KvCache);

// Coefficient of determination of the least-squares line through (x, y).
double linear_fit_r2(std::span<const double> x, std::span<const double> y);

} // namespace engorgio::cost
