#pragma once

#include "engorgio/attack/proxy.hpp"
#include "engorgio/attack/template.hpp"
#include "engorgio/autodiff/graph.hpp"
#include "engorgio/lm/model.hpp"

namespace engorgio::attack {

// Soft tokens: row i = sum_j w[i, j] * e(j).
ad::Var soft_embed(ad::Var weights, ad::Var embedding_table);

// Interleaves hard prefix/infix embeddings with the soft rows following the
// template layout. soft_rows must have s - m rows.
ad::Var assemble_context(const PromptTemplate& tmpl, const lm::BoundModel& bound, ad::Var soft_rows);

// Per-position weight rows aligned with the assembled context: one-hot rows
// at hard positions, the proxy weights at free positions.
ad::Var assemble_weights(const PromptTemplate& tmpl, ad::Var free_weights, std::size_t vocab_size);

// Sum over every position of the softmax probability of EOS.
ad::Var esc_loss(ad::Var logits, Token eos);

// Sum over i = 1..s-1 of CE(w_{i+1}, softmax(logits_i)).
ad::Var self_mentor_loss(ad::Var logits, ad::Var full_weights);

enum class LossMode { EscOnly, EscSelfMentor };

struct ObjectiveTerms {
    ad::Var esc;
    ad::Var self_mentor;
    ad::Var combined;
    ad::Var logits;
    // max over positions of P(EOS)
    double max_eos_probability = 0.0;
};

// Builds L_esc + lambda * L_sm for normalized free-row weights inside an
// existing graph whose model is already bound.
ObjectiveTerms build_objective(const PromptTemplate& tmpl, const lm::BoundModel& bound, ad::Var free_weights,
                               LossMode mode, double lambda);

struct ObjectiveValue {
    double esc = 0.0;
    double self_mentor = 0.0;
    double combined = 0.0;
    double max_eos_probability = 0.0;
};

// Evaluates the objective for fixed free-row weights (soft or one-hot).
ObjectiveValue evaluate_objective(const lm::Model& model, const PromptTemplate& tmpl, const ad::Tensor& free_weights,
                                  LossMode mode, double lambda);

// One-hot weight rows for a token sequence.
ad::Tensor one_hot_rows(std::span<const Token> tokens, std::size_t vocab_size);

} // namespace engorgio::attack
