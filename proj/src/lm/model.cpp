#include "engorgio/lm/model.hpp"

#include "engorgio/autodiff/ops.hpp"
#include "engorgio/error.hpp"
#include "engorgio/rng.hpp"

#include <cmath>
#include <string>

namespace engorgio::lm {

namespace {

constexpr std::size_t kLayerSlots = static_cast<std::size_t>(LayerParam::Count);
constexpr double kInitStd = 0.02;

const char* layer_param_name(std::size_t slot) {
    static const char* names[] = {"ln1.gain", "ln1.bias", "attn.qkv.weight", "attn.qkv.bias",
                                  "attn.out.weight", "attn.out.bias", "ln2.gain", "ln2.bias",
                                  "mlp.fc.weight", "mlp.fc.bias", "mlp.proj.weight", "mlp.proj.bias"};
    return names[slot];
}

} // namespace

std::vector<ad::Shape> Model::parameter_shapes(const ModelDims& d) {
    const std::size_t h = d.hidden;
    const std::size_t f = d.mlp_hidden();
    std::vector<ad::Shape> shapes = {{d.vocab, h}, {d.max_context, h}};
    for (std::size_t l = 0; l < d.layers; ++l) {
        shapes.push_back({h});
        shapes.push_back({h});
        shapes.push_back({h, 3 * h});
        shapes.push_back({3 * h});
        shapes.push_back({h, h});
        shapes.push_back({h});
        shapes.push_back({h});
        shapes.push_back({h});
        shapes.push_back({h, f});
        shapes.push_back({f});
        shapes.push_back({f, h});
        shapes.push_back({h});
    }
    shapes.push_back({h});
    shapes.push_back({h});
    shapes.push_back({d.vocab});
    return shapes;
}

Model::Model(Vocab vocab, ModelDims dims, std::uint64_t seed) : vocab_(std::move(vocab)), dims_(dims) {
    dims_.validate();
    if (vocab_.size() != dims_.vocab) {
        throw ConfigError("model dims: vocab " + std::to_string(dims_.vocab) + " != vocabulary size " +
                          std::to_string(vocab_.size()));
    }
    Rng rng(seed);
    const double proj_std = kInitStd / std::sqrt(2.0 * static_cast<double>(dims_.layers));
    const auto shapes = parameter_shapes(dims_);
    params_.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        ad::Tensor t = ad::Tensor::zeros(shapes[i]);
        const bool is_layer = i >= 2 && i < 2 + dims_.layers * kLayerSlots;
        const std::size_t slot = is_layer ? (i - 2) % kLayerSlots : 0;
        const bool is_gain = (is_layer && (slot == static_cast<std::size_t>(LayerParam::Ln1Gain) ||
                                           slot == static_cast<std::size_t>(LayerParam::Ln2Gain))) ||
                             i == 2 + dims_.layers * kLayerSlots;
        if (is_gain) {
            for (double& v : t.data()) {
                v = 1.0;
            }
        } else if (t.rank() == 2) {
            const bool residual_out = is_layer && (slot == static_cast<std::size_t>(LayerParam::OutWeight) ||
                                                   slot == static_cast<std::size_t>(LayerParam::ProjWeight));
            const double sd = residual_out ? proj_std : kInitStd;
            for (double& v : t.data()) {
                v = rng.normal(0.0, sd);
            }
        }
        params_.push_back(std::move(t));
    }
}

Model::Model(Vocab vocab, ModelDims dims, std::vector<ad::Tensor> parameters)
    : vocab_(std::move(vocab)), dims_(dims), params_(std::move(parameters)) {
    dims_.validate();
    if (vocab_.size() != dims_.vocab) {
        throw ConfigError("model dims: vocab " + std::to_string(dims_.vocab) + " != vocabulary size " +
                          std::to_string(vocab_.size()));
    }
    const auto shapes = parameter_shapes(dims_);
    if (shapes.size() != params_.size()) {
        throw ShapeError("model: expected " + std::to_string(shapes.size()) + " parameter tensors, got " +
                         std::to_string(params_.size()));
    }
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (params_[i].shape() != shapes[i]) {
            throw ShapeError("model: parameter " + std::to_string(i) + " has shape " +
                             ad::shape_str(params_[i].shape()) + ", expected " + ad::shape_str(shapes[i]));
        }
    }
}

std::vector<std::string> Model::parameter_names() const {
    std::vector<std::string> names = {"tok_emb", "pos_emb"};
    for (std::size_t l = 0; l < dims_.layers; ++l) {
        for (std::size_t s = 0; s < kLayerSlots; ++s) {
            names.push_back("layer" + std::to_string(l) + "." + layer_param_name(s));
        }
    }
    names.push_back("ln_f.gain");
    names.push_back("ln_f.bias");
    names.push_back("head.bias");
    return names;
}

std::size_t Model::layer_index(std::size_t layer, LayerParam p) const {
    return 2 + layer * kLayerSlots + static_cast<std::size_t>(p);
}

std::size_t Model::final_gain_index() const { return 2 + dims_.layers * kLayerSlots; }
std::size_t Model::final_bias_index() const { return final_gain_index() + 1; }
std::size_t Model::output_bias_index() const { return final_gain_index() + 2; }

void Model::zero_head() {
    for (std::size_t i : {final_gain_index(), final_bias_index(), output_bias_index()}) {
        for (double& v : params_[i].data()) {
            v = 0.0;
        }
    }
}

void Model::set_output_bias(Token token, double value) {
    if (token < 0 || static_cast<std::size_t>(token) >= dims_.vocab) {
        throw ContractError("set_output_bias: token out of range");
    }
    params_[output_bias_index()][static_cast<std::size_t>(token)] = value;
}

BoundModel bind(ad::Graph& graph, const Model& model, bool trainable) {
    BoundModel bound{&model, {}};
    bound.params.reserve(model.parameters().size());
    for (const ad::Tensor& p : model.parameters()) {
        bound.params.push_back(trainable ? graph.leaf(p) : graph.constant(p));
    }
    return bound;
}

ad::Var embed_tokens(const BoundModel& bound, std::span<const Token> tokens) {
    return ad::gather_rows(bound.params[bound.model->token_embedding_index()], tokens);
}

ad::Var forward_embeddings(const BoundModel& bound, ad::Var inputs, std::size_t position_offset) {
    const Model& m = *bound.model;
    const ModelDims& d = m.dims();
    const std::size_t n = inputs.shape().at(0);
    if (n == 0) {
        throw ContractError("forward: empty input");
    }
    if (position_offset + n > d.max_context) {
        throw ContextOverflowError("forward: " + std::to_string(n) + " positions from offset " +
                                   std::to_string(position_offset) + " exceed context " +
                                   std::to_string(d.max_context));
    }
    const auto& p = bound.params;
    ad::Var x = ad::add(inputs, ad::slice_rows(p[m.position_embedding_index()], position_offset, n));
    for (std::size_t l = 0; l < d.layers; ++l) {
        auto w = [&](LayerParam slot) { return p[m.layer_index(l, slot)]; };
        ad::Var h = ad::layer_norm_rows(x, w(LayerParam::Ln1Gain), w(LayerParam::Ln1Bias));
        ad::Var qkv = ad::add_row(ad::matmul(h, w(LayerParam::QkvWeight)), w(LayerParam::QkvBias));
        ad::Var att = ad::causal_attention(qkv, d.heads);
        x = ad::add(x, ad::add_row(ad::matmul(att, w(LayerParam::OutWeight)), w(LayerParam::OutBias)));
        ad::Var h2 = ad::layer_norm_rows(x, w(LayerParam::Ln2Gain), w(LayerParam::Ln2Bias));
        ad::Var f = ad::gelu(ad::add_row(ad::matmul(h2, w(LayerParam::FcWeight)), w(LayerParam::FcBias)));
        x = ad::add(x, ad::add_row(ad::matmul(f, w(LayerParam::ProjWeight)), w(LayerParam::ProjBias)));
    }
    ad::Var hf = ad::layer_norm_rows(x, p[m.final_gain_index()], p[m.final_bias_index()]);
    return ad::add_row(ad::matmul_nt(hf, p[m.token_embedding_index()]), p[m.output_bias_index()]);
}

ad::Tensor forward(const Model& model, std::span<const Token> tokens) {
    if (tokens.size() > model.dims().max_context) {
        throw ContextOverflowError("forward: " + std::to_string(tokens.size()) + " tokens exceed context " +
                                   std::to_string(model.dims().max_context));
    }
    ad::Graph g;
    const BoundModel bound = bind(g, model, false);
    return forward_embeddings(bound, embed_tokens(bound, tokens)).value();
}

} // namespace engorgio::lm
