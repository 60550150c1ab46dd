#include "engorgio/lm/inference.hpp"

#include "engorgio/autodiff/kernels.hpp"
#include "engorgio/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace engorgio::lm {

namespace k = ad::kernels;

Decoder::Decoder(const Model& model) : model_(&model) {
    const ModelDims& d = model.dims();
    qkv_cache_.assign(d.layers, std::vector<double>(d.max_context * 3 * d.hidden, 0.0));
    x_.resize(d.hidden);
    h_.resize(d.hidden);
    tmp_.resize(std::max(3 * d.hidden, d.mlp_hidden()));
    att_.resize(d.hidden);
    fc_.resize(d.mlp_hidden());
    logits_.resize(d.vocab);
    xhat_.resize(d.hidden);
    probs_.resize(d.max_context);
}

std::span<const double> Decoder::push(Token token) {
    const Model& m = *model_;
    const ModelDims& d = m.dims();
    if (pos_ >= d.max_context) {
        throw ContextOverflowError("decoder: context window of " + std::to_string(d.max_context) + " is full");
    }
    if (token < 0 || static_cast<std::size_t>(token) >= d.vocab) {
        throw ContractError("decoder: token " + std::to_string(token) + " out of range");
    }
    const std::size_t hd = d.head_dim();
    const std::size_t hidden = d.hidden;
    const std::size_t f = d.mlp_hidden();

    const auto emb = m.token_embedding().row(static_cast<std::size_t>(token));
    const auto pos = m.param(m.position_embedding_index()).row(pos_);
    for (std::size_t j = 0; j < hidden; ++j) {
        x_[j] = emb[j] + pos[j];
    }

    auto linear = [&](std::span<const double> in, std::size_t w_idx, std::size_t b_idx, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        k::matmul_acc(in, m.param(w_idx).data(), out, 1, in.size(), out.size());
        const auto b = m.param(b_idx).data();
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += b[j];
        }
    };

    for (std::size_t l = 0; l < d.layers; ++l) {
        auto idx = [&](LayerParam s) { return m.layer_index(l, s); };
        k::layer_norm_row(x_, m.param(idx(LayerParam::Ln1Gain)).data(), m.param(idx(LayerParam::Ln1Bias)).data(),
                          xhat_, h_);
        std::span<double> cache(qkv_cache_[l]);
        linear(h_, idx(LayerParam::QkvWeight), idx(LayerParam::QkvBias), cache.subspan(pos_ * 3 * hidden, 3 * hidden));
        for (std::size_t h = 0; h < d.heads; ++h) {
            k::attend_row(cache, hidden, h, hd, pos_, std::span<double>(probs_).first(pos_ + 1),
                          std::span<double>(att_).subspan(h * hd, hd));
        }
        std::span<double> proj(tmp_.data(), hidden);
        linear(att_, idx(LayerParam::OutWeight), idx(LayerParam::OutBias), proj);
        for (std::size_t j = 0; j < hidden; ++j) {
            x_[j] += proj[j];
        }
        k::layer_norm_row(x_, m.param(idx(LayerParam::Ln2Gain)).data(), m.param(idx(LayerParam::Ln2Bias)).data(),
                          xhat_, h_);
        linear(h_, idx(LayerParam::FcWeight), idx(LayerParam::FcBias), std::span<double>(fc_.data(), f));
        for (double& v : fc_) {
            v = k::gelu(v);
        }
        linear(fc_, idx(LayerParam::ProjWeight), idx(LayerParam::ProjBias), proj);
        for (std::size_t j = 0; j < hidden; ++j) {
            x_[j] += proj[j];
        }
    }
    k::layer_norm_row(x_, m.param(m.final_gain_index()).data(), m.param(m.final_bias_index()).data(), xhat_, h_);
    std::fill(logits_.begin(), logits_.end(), 0.0);
    k::matmul_nt_acc(h_, m.token_embedding().data(), logits_, 1, hidden, d.vocab);
    const auto ob = m.param(m.output_bias_index()).data();
    for (std::size_t j = 0; j < d.vocab; ++j) {
        logits_[j] += ob[j];
    }
    ++pos_;
    return logits_;
}

void DecodeConfig::validate() const {
    if (mode == DecodeMode::Sample && !(temperature > 0.0 && std::isfinite(temperature))) {
        throw ConfigError("decode: temperature must be > 0 in sample mode");
    }
}

std::string_view stop_reason_name(StopReason r) { return r == StopReason::Eos ? "eos" : "max_length"; }

Token argmax_token(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j) {
        if (logits[j] > logits[best]) {
            best = j;
        }
    }
    return static_cast<Token>(best);
}

Token sample_token(std::span<const double> logits, double temperature, Rng& rng) {
    std::vector<double> scaled(logits.begin(), logits.end());
    for (double& v : scaled) {
        v /= temperature;
    }
    std::vector<double> probs(scaled.size());
    k::softmax_row(scaled, probs);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        if (u < acc) {
            return static_cast<Token>(j);
        }
    }
    // Rounding left u above the running total; take the last token with mass.
    for (std::size_t j = probs.size(); j-- > 0;) {
        if (probs[j] > 0.0) {
            return static_cast<Token>(j);
        }
    }
    return 0;
}

GenerationTrace generate(const Model& model, std::span<const Token> prompt, const DecodeConfig& config) {
    config.validate();
    const std::size_t ctx = model.dims().max_context;
    if (prompt.empty()) {
        throw ContractError("generate: prompt must contain at least one token");
    }
    if (prompt.size() >= ctx) {
        throw ContextOverflowError("generate: prompt of " + std::to_string(prompt.size()) +
                                   " tokens leaves no room in context " + std::to_string(ctx));
    }
    GenerationTrace trace;
    trace.prompt.assign(prompt.begin(), prompt.end());
    Rng rng(config.seed);
    Decoder dec(model);
    std::span<const double> logits;
    for (Token t : prompt) {
        logits = dec.push(t);
    }
    const Token eos = model.eos();
    std::vector<double> probs(model.dims().vocab);
    while (trace.generated.size() < config.max_new_tokens && trace.total_length() < ctx) {
        k::softmax_row(logits, probs);
        trace.eos_probability.push_back(probs[static_cast<std::size_t>(eos)]);
        const Token next =
            config.mode == DecodeMode::Greedy ? argmax_token(logits) : sample_token(logits, config.temperature, rng);
        trace.generated.push_back(next);
        if (next == eos) {
            trace.stop_reason = StopReason::Eos;
            return trace;
        }
        if (trace.total_length() < ctx && trace.generated.size() < config.max_new_tokens) {
            logits = dec.push(next);
        }
    }
    trace.stop_reason = StopReason::MaxLength;
    return trace;
}

double perplexity(const Model& model, std::span<const Token> tokens) {
    TokenSeq kept;
    kept.reserve(tokens.size());
    for (Token t : tokens) {
        if (t != model.vocab().pad()) {
            kept.push_back(t);
        }
    }
    if (kept.size() < 2) {
        throw ContractError("perplexity: need at least 2 non-pad tokens, got " + std::to_string(kept.size()));
    }
    if (kept.size() > model.dims().max_context) {
        throw ContextOverflowError("perplexity: " + std::to_string(kept.size()) + " tokens exceed context");
    }
    Decoder dec(model);
    std::vector<double> logp(model.dims().vocab);
    double nll = 0.0;
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
        const auto logits = dec.push(kept[i]);
        k::log_softmax_row(logits, logp);
        nll -= logp[static_cast<std::size_t>(kept[i + 1])];
    }
    return std::exp(nll / static_cast<double>(kept.size() - 1));
}

} // namespace engorgio::lm
