#include "engorgio/attack/optimize.hpp"

#include "engorgio/autodiff/adam.hpp"
#include "engorgio/error.hpp"
#include "engorgio/rng.hpp"

#include <cmath>

namespace engorgio::attack {

void AttackConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("attack: tau must be > 0");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("attack: lambda must be >= 0");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("attack: learning_rate must be > 0");
    }
    if (prompt_length < 1) {
        throw ConfigError("attack: prompt_length must be >= 1");
    }
    if (init_sigma < 0.0) {
        throw ConfigError("attack: init_sigma must be >= 0");
    }
}

std::string loss_mode_name(LossMode mode) { return mode == LossMode::EscOnly ? "esc" : "esc+self-mentor"; }

LossMode parse_loss_mode(const std::string& name) {
    if (name == "esc") {
        return LossMode::EscOnly;
    }
    if (name == "esc+self-mentor") {
        return LossMode::EscSelfMentor;
    }
    throw ConfigError("attack: field 'loss' must be \"esc\" or \"esc+self-mentor\", got \"" + name + "\"");
}

PromptTemplate make_template(const lm::Model& model, const AttackConfig& config) {
    const std::size_t s = config.context_length == 0 ? model.dims().max_context : config.context_length;
    PromptTemplate tmpl =
        PromptTemplate::from_text(model.vocab(), config.prefix_text, config.infix_text, config.prompt_length, s);
    tmpl.validate(model.dims());
    return tmpl;
}

ObjectiveGradient objective_gradient(const lm::Model& model, const PromptTemplate& tmpl, const ad::Tensor& theta,
                                     const ad::Tensor& noise, double tau, LossMode mode, double lambda) {
    ad::Graph g;
    const lm::BoundModel bound = lm::bind(g, model, false);
    ad::Var theta_var = g.leaf(theta);
    ad::Var w = gumbel_softmax_rows(theta_var, noise, tau);
    ObjectiveGradient out;
    const ObjectiveTerms terms = build_objective(tmpl, bound, w, mode, lambda);
    out.combined = terms.combined.value().item();
    out.esc = terms.esc.value().item();
    out.self_mentor = terms.self_mentor.value().item();
    out.max_eos_probability = terms.max_eos_probability;
    out.weights = w.value();
    const ad::Var wrt[] = {theta_var};
    out.grad_theta = std::move(g.gradient(terms.combined, wrt)[0]);
    return out;
}

AttackResult optimize(const lm::Model& model, const PromptTemplate& tmpl, const AttackConfig& config,
                      const StepObserver& observer) {
    config.validate();
    tmpl.validate(model.dims());
    Rng rng(config.seed);

    AttackResult result;
    result.tmpl = tmpl;
    result.proxy = init_proxy(tmpl, model.dims().vocab, default_mask(model.vocab()), rng, config.init_sigma);
    ad::Adam adam(ad::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});

    AttackTrace& trace = result.trace;
    trace.esc.reserve(config.steps);
    trace.self_mentor.reserve(config.steps);
    trace.combined.reserve(config.steps);
    trace.max_eos_probability.reserve(config.steps);

    const std::size_t rows = result.proxy.theta.rows();
    const std::size_t cols = result.proxy.theta.cols();
    for (std::size_t step = 0; step < config.steps; ++step) {
        const ad::Tensor noise = sample_gumbel(rows, cols, rng);
        ObjectiveGradient og;
        try {
            og = objective_gradient(model, tmpl, result.proxy.theta, noise, config.tau, config.loss, config.lambda);
        } catch (const NumericError& e) {
            throw NumericError("attack step " + std::to_string(step) + ": " + e.what());
        }
        if (!std::isfinite(og.combined)) {
            throw NumericError("attack step " + std::to_string(step) + ": non-finite loss");
        }
        const double mu = og.max_eos_probability;
        trace.esc.push_back(og.esc);
        trace.self_mentor.push_back(og.self_mentor);
        trace.combined.push_back(og.combined);
        trace.max_eos_probability.push_back(mu);
        if (observer) {
            observer(StepObservation{step, og.weights, og.esc, og.self_mentor, og.combined, mu});
        }
        std::span<ad::Tensor> params(&result.proxy.theta, 1);
        adam.step(params, std::span<const ad::Tensor>(&og.grad_theta, 1));
        result.proxy.apply_mask();
    }

    result.prompt = extract_prompt(result.proxy, tmpl);
    result.input_tokens = tmpl.wrap(result.prompt);
    return result;
}

AttackResult run_attack(const lm::Model& model, const AttackConfig& config, const StepObserver& observer) {
    return optimize(model, make_template(model, config), config, observer);
}

} // namespace engorgio::attack
