#pragma once

#include "engorgio/attack/template.hpp"
#include "engorgio/autodiff/graph.hpp"
#include "engorgio/autodiff/tensor.hpp"
#include "engorgio/rng.hpp"

#include <vector>

namespace engorgio::attack {

// Logit value written into banned columns; exp() of it underflows to 0.
inline constexpr double kMaskedLogit = -1e9;

// Trainable token distribution over the free context rows.
struct ProxyDistribution {
    ad::Tensor theta;          // [(s - m) x V]
    std::vector<Token> mask;   // banned columns (EOS, PAD, BOS)

    // Noise-free normalized view softmax(theta) row-wise.
    ad::Tensor weights() const;
    // Rewrites banned columns to kMaskedLogit.
    void apply_mask();
};

// Default ban list: the vocabulary's control tokens.
std::vector<Token> default_mask(const lm::Vocab& vocab);

// Each free row starts as a one-hot 1.0 on a uniformly drawn unmasked token
// plus N(0, sigma^2) noise; banned columns are set to kMaskedLogit.
ProxyDistribution init_proxy(const PromptTemplate& tmpl, std::size_t vocab_size, std::vector<Token> mask, Rng& rng,
                             double sigma = 0.01);

// Gumbel(0, 1) noise g = -log(-log(u)), u ~ U(0, 1).
ad::Tensor sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng);

// w = softmax((theta + g) / tau) row-wise; noise is a constant of the graph.
// Pass a zero tensor to disable the noise. Throws ConfigError for tau <= 0.
ad::Var gumbel_softmax_rows(ad::Var theta, const ad::Tensor& noise, double tau);

// Testing stage: per-row argmax of softmax(theta) over the first t free rows,
// banned columns excluded, ties to the lowest index.
TokenSeq extract_prompt(const ProxyDistribution& proxy, const PromptTemplate& tmpl);

// Same argmax rule over every free row (prompt and output part).
TokenSeq extract_all_rows(const ProxyDistribution& proxy);

} // namespace engorgio::attack
