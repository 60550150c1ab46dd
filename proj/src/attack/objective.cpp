#include "engorgio/attack/objective.hpp"

#include "engorgio/autodiff/ops.hpp"
#include "engorgio/error.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace engorgio::attack {

ad::Var soft_embed(ad::Var weights, ad::Var embedding_table) { return ad::matmul(weights, embedding_table); }

ad::Var assemble_context(const PromptTemplate& tmpl, const lm::BoundModel& bound, ad::Var soft_rows) {
    const std::size_t free = tmpl.free_count();
    if (soft_rows.shape().at(0) != free) {
        throw ContractError("assemble_context: " + std::to_string(soft_rows.shape()[0]) +
                            " soft rows, template has " + std::to_string(free) + " free positions");
    }
    const std::size_t t = tmpl.prompt_length;
    std::vector<ad::Var> parts;
    if (!tmpl.prefix.empty()) {
        parts.push_back(lm::embed_tokens(bound, tmpl.prefix));
    }
    parts.push_back(ad::slice_rows(soft_rows, 0, t));
    if (!tmpl.infix.empty()) {
        parts.push_back(lm::embed_tokens(bound, tmpl.infix));
    }
    if (free > t) {
        parts.push_back(ad::slice_rows(soft_rows, t, free - t));
    }
    return ad::concat_rows(parts);
}

ad::Tensor one_hot_rows(std::span<const Token> tokens, std::size_t vocab_size) {
    ad::Tensor out = ad::Tensor::zeros({tokens.size(), vocab_size});
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.at(i, static_cast<std::size_t>(tokens[i])) = 1.0;
    }
    return out;
}

ad::Var assemble_weights(const PromptTemplate& tmpl, ad::Var free_weights, std::size_t vocab_size) {
    const std::size_t free = tmpl.free_count();
    const std::size_t t = tmpl.prompt_length;
    ad::Graph& g = free_weights.graph();
    std::vector<ad::Var> parts;
    if (!tmpl.prefix.empty()) {
        parts.push_back(g.constant(one_hot_rows(tmpl.prefix, vocab_size)));
    }
    parts.push_back(ad::slice_rows(free_weights, 0, t));
    if (!tmpl.infix.empty()) {
        parts.push_back(g.constant(one_hot_rows(tmpl.infix, vocab_size)));
    }
    if (free > t) {
        parts.push_back(ad::slice_rows(free_weights, t, free - t));
    }
    return ad::concat_rows(parts);
}

namespace {

ad::Var eos_column(ad::Var logits, Token eos) {
    return ad::select_column(ad::softmax_rows(logits), static_cast<std::size_t>(eos));
}

} // namespace

ad::Var esc_loss(ad::Var logits, Token eos) { return ad::sum(eos_column(logits, eos)); }

ad::Var self_mentor_loss(ad::Var logits, ad::Var full_weights) {
    if (logits.shape() != full_weights.shape()) {
        throw ShapeError("self_mentor_loss: logits " + ad::shape_str(logits.shape()) + " vs weights " +
                         ad::shape_str(full_weights.shape()));
    }
    const std::size_t s = logits.shape()[0];
    if (s < 2) {
        return ad::scale(ad::sum(logits), 0.0);
    }
    ad::Var logp = ad::log_softmax_rows(logits);
    ad::Var pred = ad::slice_rows(logp, 0, s - 1);
    ad::Var target = ad::slice_rows(full_weights, 1, s - 1);
    return ad::scale(ad::dot(target, pred), -1.0);
}

ObjectiveTerms build_objective(const PromptTemplate& tmpl, const lm::BoundModel& bound, ad::Var free_weights,
                               LossMode mode, double lambda) {
    const lm::Model& model = *bound.model;
    ad::Var table = bound.params[model.token_embedding_index()];
    ad::Var context = assemble_context(tmpl, bound, soft_embed(free_weights, table));

    ObjectiveTerms terms;
    terms.logits = lm::forward_embeddings(bound, context, 0);
    ad::Var eos_p = eos_column(terms.logits, model.eos());
    const auto probs = eos_p.value().data();
    terms.max_eos_probability = *std::max_element(probs.begin(), probs.end());
    terms.esc = ad::sum(eos_p);
    // Self-mentor is always recorded; it only enters the objective in EscSelfMentor mode.
    ad::Var full = assemble_weights(tmpl, free_weights, model.dims().vocab);
    terms.self_mentor = self_mentor_loss(terms.logits, full);
    terms.combined =
        mode == LossMode::EscSelfMentor ? ad::add(terms.esc, ad::scale(terms.self_mentor, lambda)) : terms.esc;
    return terms;
}

ObjectiveValue evaluate_objective(const lm::Model& model, const PromptTemplate& tmpl, const ad::Tensor& free_weights,
                                  LossMode mode, double lambda) {
    tmpl.validate(model.dims());
    ad::Graph g;
    const lm::BoundModel bound = lm::bind(g, model, false);
    const ObjectiveTerms terms = build_objective(tmpl, bound, g.constant(free_weights), mode, lambda);
    ObjectiveValue v;
    v.esc = terms.esc.value().item();
    v.self_mentor = terms.self_mentor.value().item();
    v.combined = terms.combined.value().item();
    v.max_eos_probability = terms.max_eos_probability;
    return v;
}

} // namespace engorgio::attack
