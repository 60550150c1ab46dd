#pragma once

#include "engorgio/autodiff/graph.hpp"
#include "engorgio/autodiff/tensor.hpp"
#include "engorgio/dims.hpp"
#include "engorgio/lm/vocab.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace engorgio::lm {

// Per-layer parameter slots, in checkpoint declaration order.
enum class LayerParam : std::size_t {
    Ln1Gain,
    Ln1Bias,
    QkvWeight,
    QkvBias,
    OutWeight,
    OutBias,
    Ln2Gain,
    Ln2Bias,
    FcWeight,
    FcBias,
    ProjWeight,
    ProjBias,
    Count,
};

// Pre-LayerNorm decoder-only transformer with learned positions and an
// output head tied to the token embedding table (plus an untied bias).
class Model {
public:
    Model(Vocab vocab, ModelDims dims, std::uint64_t seed);
    Model(Vocab vocab, ModelDims dims, std::vector<ad::Tensor> parameters);

    const Vocab& vocab() const { return vocab_; }
    const ModelDims& dims() const { return dims_; }
    Token eos() const { return vocab_.eos(); }

    std::span<const ad::Tensor> parameters() const { return params_; }
    std::vector<ad::Tensor>& mutable_parameters() { return params_; }
    std::vector<std::string> parameter_names() const;
    static std::vector<ad::Shape> parameter_shapes(const ModelDims& dims);

    std::size_t token_embedding_index() const { return 0; }
    std::size_t position_embedding_index() const { return 1; }
    std::size_t layer_index(std::size_t layer, LayerParam p) const;
    std::size_t final_gain_index() const;
    std::size_t final_bias_index() const;
    std::size_t output_bias_index() const;

    const ad::Tensor& token_embedding() const { return params_[0]; }
    const ad::Tensor& param(std::size_t i) const { return params_[i]; }

    // Zeroes the final norm affine and output bias so every logit is 0.
    void zero_head();
    // Adds a constant to one vocabulary logit at every position.
    void set_output_bias(Token token, double value);

private:
    Vocab vocab_;
    ModelDims dims_;
    std::vector<ad::Tensor> params_;
};

// The model's parameters as nodes of one graph. trainable=false binds them
// as constants so no weight gradients are computed (attack path).
struct BoundModel {
    const Model* model = nullptr;
    std::vector<ad::Var> params;
};

BoundModel bind(ad::Graph& graph, const Model& model, bool trainable);

// Token embedding rows for a hard token sequence, [n x H].
ad::Var embed_tokens(const BoundModel& bound, std::span<const Token> tokens);

// Next-token logits [n x V] for an input embedding sequence [n x H]. Row i
// only depends on rows 0..i. position_offset shifts the learned position
// table (used for training augmentation; inference uses 0).
ad::Var forward_embeddings(const BoundModel& bound, ad::Var inputs, std::size_t position_offset = 0);

// Plain (non-differentiable) forward over hard tokens. Throws
// ContextOverflowError if the sequence is longer than the context window.
ad::Tensor forward(const Model& model, std::span<const Token> tokens);

} // namespace engorgio::lm
