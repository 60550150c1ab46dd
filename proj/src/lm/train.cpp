#include "engorgio/lm/train.hpp"

#include "engorgio/autodiff/adam.hpp"
#include "engorgio/autodiff/ops.hpp"
#include "engorgio/error.hpp"
#include "engorgio/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace engorgio::lm {

void TrainConfig::validate() const {
    if (steps == 0) {
        throw ConfigError("train: steps must be >= 1");
    }
    if (batch_size == 0) {
        throw ConfigError("train: batch_size must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("train: learning_rate must be > 0");
    }
    if (min_lr_ratio < 0.0 || min_lr_ratio > 1.0) {
        throw ConfigError("train: min_lr_ratio must lie in [0, 1]");
    }
    if (grad_clip < 0.0) {
        throw ConfigError("train: grad_clip must be >= 0");
    }
}

namespace {

void check_corpus(const Model& model, std::span<const TokenSeq> corpus) {
    if (corpus.empty()) {
        throw ConfigError("train: empty corpus");
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const TokenSeq& s = corpus[i];
        if (s.size() < 2 || s.back() != model.eos()) {
            throw ConfigError("train: corpus sequence " + std::to_string(i) + " must have >= 2 tokens and end with EOS");
        }
        if (s.size() > model.dims().max_context) {
            throw ConfigError("train: corpus sequence " + std::to_string(i) + " longer than the context window");
        }
    }
}

// Sum of target negative log-likelihoods for one sequence.
ad::Var sequence_nll(const BoundModel& bound, const TokenSeq& seq, std::size_t offset) {
    const std::span<const Token> all(seq);
    const auto inputs = all.first(seq.size() - 1);
    const auto targets = all.subspan(1);
    ad::Var logits = forward_embeddings(bound, embed_tokens(bound, inputs), offset);
    return ad::scale(ad::sum(ad::pick_rows(ad::log_softmax_rows(logits), targets)), -1.0);
}

double schedule(const TrainConfig& c, std::size_t step) {
    if (step < c.warmup_steps) {
        return c.learning_rate * static_cast<double>(step + 1) / static_cast<double>(c.warmup_steps);
    }
    const double span = static_cast<double>(std::max<std::size_t>(1, c.steps - c.warmup_steps));
    const double progress = std::min(1.0, static_cast<double>(step - c.warmup_steps) / span);
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return c.learning_rate * (c.min_lr_ratio + (1.0 - c.min_lr_ratio) * cosine);
}

} // namespace

std::vector<double> train(Model& model, std::span<const TokenSeq> corpus, const TrainConfig& config,
                          const TrainCallback& on_step) {
    config.validate();
    check_corpus(model, corpus);
    Rng rng(config.seed);
    ad::Adam adam(ad::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
    const std::size_t ctx = model.dims().max_context;

    std::vector<double> curve;
    curve.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
        ad::Graph g;
        const BoundModel bound = bind(g, model, true);
        ad::Var total;
        std::size_t n_targets = 0;
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            if (config.pack_sequences) {
                TokenSeq window;
                while (window.size() < ctx + 1) {
                    const TokenSeq& s = corpus[rng.index(corpus.size())];
                    window.insert(window.end(), s.begin(), s.end());
                }
                window.resize(ctx + 1);
                ad::Var nll = sequence_nll(bound, window, 0);
                total = total.valid() ? ad::add(total, nll) : nll;
                n_targets += ctx;
                continue;
            }
            const TokenSeq& seq = corpus[rng.index(corpus.size())];
            const std::size_t len = seq.size() - 1;
            const std::size_t offset = config.position_offset_augment ? rng.index(ctx - len + 1) : 0;
            ad::Var nll = sequence_nll(bound, seq, offset);
            total = total.valid() ? ad::add(total, nll) : nll;
            n_targets += len;
        }
        ad::Var loss = ad::scale(total, 1.0 / static_cast<double>(n_targets));
        std::vector<ad::Tensor> grads = g.gradient(loss, bound.params);

        if (config.grad_clip > 0.0) {
            double sq = 0.0;
            for (const ad::Tensor& t : grads) {
                for (double v : t.data()) {
                    sq += v * v;
                }
            }
            const double norm = std::sqrt(sq);
            if (norm > config.grad_clip) {
                const double f = config.grad_clip / norm;
                for (ad::Tensor& t : grads) {
                    for (double& v : t.data()) {
                        v *= f;
                    }
                }
            }
        }
        adam.set_learning_rate(schedule(config, step));
        adam.step(model.mutable_parameters(), grads);

        const double value = loss.value().item();
        curve.push_back(value);
        if (on_step) {
            on_step(step, value);
        }
    }
    return curve;
}

double corpus_loss(const Model& model, std::span<const TokenSeq> corpus) {
    check_corpus(model, corpus);
    double nll = 0.0;
    std::size_t count = 0;
    for (const TokenSeq& seq : corpus) {
        ad::Graph g;
        const BoundModel bound = bind(g, model, false);
        nll += sequence_nll(bound, seq, 0).value().item();
        count += seq.size() - 1;
    }
    return nll / static_cast<double>(count);
}

} // namespace engorgio::lm
