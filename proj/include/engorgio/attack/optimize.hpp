#pragma once

#include "engorgio/attack/objective.hpp"
#include "engorgio/attack/proxy.hpp"
#include "engorgio/attack/template.hpp"
#include "engorgio/lm/model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace engorgio::attack {

struct AttackConfig {
    std::size_t steps = 300;
    double learning_rate = 0.1;
    double tau = 1.0;
    double lambda = 1.0;
    std::size_t prompt_length = 32;
    // 0 means the model's full context window.
    std::size_t context_length = 0;
    std::uint64_t seed = 0;
    LossMode loss = LossMode::EscSelfMentor;
    // Optional semantic text fused in front of the prompt (and an optional
    // infix after it) in both the generation and the testing stage.
    std::string prefix_text;
    std::string infix_text;
    double init_sigma = 0.01;

    void validate() const;
};

std::string loss_mode_name(LossMode mode);
LossMode parse_loss_mode(const std::string& name);

struct AttackTrace {
    std::vector<double> esc;
    std::vector<double> self_mentor;
    std::vector<double> combined;
    std::vector<double> max_eos_probability;
};

struct StepObservation {
    std::size_t step;
    const ad::Tensor& weights;  // Gumbel-softmax rows used at this step
    double esc;
    double self_mentor;
    double combined;
    double max_eos_probability;
};

using StepObserver = std::function<void(const StepObservation&)>;

struct AttackResult {
    PromptTemplate tmpl;
    ProxyDistribution proxy;
    AttackTrace trace;
    TokenSeq prompt;        // extracted, length t
    TokenSeq input_tokens;  // prefix + prompt + infix
};

PromptTemplate make_template(const lm::Model& model, const AttackConfig& config);

struct ObjectiveGradient {
    double combined = 0.0;
    double esc = 0.0;
    double self_mentor = 0.0;
    double max_eos_probability = 0.0;
    ad::Tensor weights;
    ad::Tensor grad_theta;
};

// Objective value and d objective / d theta for fixed Gumbel noise.
ObjectiveGradient objective_gradient(const lm::Model& model, const PromptTemplate& tmpl, const ad::Tensor& theta,
                                     const ad::Tensor& noise, double tau, LossMode mode, double lambda);

// Generation stage: `steps` rounds of {fresh Gumbel noise -> normalize ->
// soft-embed -> assemble -> L_esc + lambda * L_sm -> gradient -> Adam on
// theta}. Throws NumericError naming the step if the loss goes non-finite.
AttackResult optimize(const lm::Model& model, const PromptTemplate& tmpl, const AttackConfig& config,
                      const StepObserver& observer = {});

// make_template + optimize.
AttackResult run_attack(const lm::Model& model, const AttackConfig& config, const StepObserver& observer = {});

} // namespace engorgio::attack
