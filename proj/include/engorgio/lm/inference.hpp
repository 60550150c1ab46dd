#pragma once

#include "engorgio/lm/model.hpp"
#include "engorgio/rng.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace engorgio::lm {

// Incremental decoder with a per-layer Q|K|V cache. Produces logits that are
// bit-identical to lm::forward on the same prefix.
class Decoder {
public:
    explicit Decoder(const Model& model);

    // Feeds the token at the next position and returns its logits row.
    std::span<const double> push(Token token);
    std::size_t position() const { return pos_; }
    void reset() { pos_ = 0; }

private:
    const Model* model_;
    std::size_t pos_ = 0;
    std::vector<std::vector<double>> qkv_cache_;  // per layer, [S x 3H]
    std::vector<double> x_, h_, tmp_, att_, fc_, logits_, xhat_, probs_;
};

enum class DecodeMode { Greedy, Sample };

struct DecodeConfig {
    DecodeMode mode = DecodeMode::Sample;
    double temperature = 0.1;
    std::size_t max_new_tokens = std::numeric_limits<std::size_t>::max();
    std::uint64_t seed = 0;

    void validate() const;
};

enum class StopReason { Eos, MaxLength };

std::string_view stop_reason_name(StopReason r);

struct GenerationTrace {
    TokenSeq prompt;
    TokenSeq generated;
    StopReason stop_reason = StopReason::MaxLength;
    // Untempered probability of EOS at each decoding step.
    std::vector<double> eos_probability;

    std::size_t total_length() const { return prompt.size() + generated.size(); }
};

// Argmax with ties broken toward the lowest index.
Token argmax_token(std::span<const double> logits);
// Draws from softmax(logits / temperature).
Token sample_token(std::span<const double> logits, double temperature, Rng& rng);

// Auto-regressive decoding that halts on EOS, on max_new_tokens, or when
// prompt + generated reaches the context window.
GenerationTrace generate(const Model& model, std::span<const Token> prompt, const DecodeConfig& config);

// exp(mean NLL of tokens 2..n given their prefixes). PAD tokens are removed
// before scoring; at least two tokens must remain.
double perplexity(const Model& model, std::span<const Token> tokens);

} // namespace engorgio::lm
