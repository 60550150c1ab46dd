#include "engorgio/autodiff/graph.hpp"

#include "engorgio/error.hpp"

#include <string>

namespace engorgio::ad {

const char* op_name(OpKind kind) {
    switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::AddRow: return "add_row";
    case OpKind::MulRow: return "mul_row";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::LogSoftmaxRows: return "log_softmax_rows";
    case OpKind::LayerNormRows: return "layer_norm_rows";
    case OpKind::Gelu: return "gelu";
    case OpKind::CausalAttention: return "causal_attention";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::SelectColumn: return "select_column";
    case OpKind::PickRows: return "pick_rows";
    case OpKind::Sum: return "sum";
    case OpKind::Dot: return "dot";
    }
    return "unknown";
}

const Tensor& Var::value() const { return graph_->value(*this); }

Var Graph::leaf(Tensor value) {
    if (!value.all_finite()) {
        throw NumericError("leaf value is not finite");
    }
    nodes_.push_back(Node{std::move(value), {}, OpKind::Leaf, {}, true});
    return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
    if (!value.all_finite()) {
        throw NumericError("constant value is not finite");
    }
    nodes_.push_back(Node{std::move(value), {}, OpKind::Constant, {}, false});
    return Var(this, nodes_.size() - 1);
}

void Graph::check_owned(Var v) const {
    if (v.graph_ != this || v.id_ >= nodes_.size()) {
        throw ContractError("variable does not belong to this graph");
    }
}

Var Graph::record(OpKind kind, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    if (!value.all_finite()) {
        throw NumericError(std::string("non-finite output from ") + op_name(kind));
    }
    bool needs = false;
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    for (const Var& in : inputs) {
        check_owned(in);
        ids.push_back(in.id_);
        needs = needs || nodes_[in.id_].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), std::move(ids), kind, needs ? std::move(backward) : BackwardFn{}, needs});
    return Var(this, nodes_.size() - 1);
}

std::vector<Tensor> Graph::gradient(Var loss, std::span<const Var> wrt) const {
    check_owned(loss);
    if (nodes_[loss.id_].value.size() != 1) {
        throw ContractError("gradient: loss must be scalar, got shape " + shape_str(nodes_[loss.id_].value.shape()));
    }
    for (const Var& w : wrt) {
        check_owned(w);
        if (nodes_[w.id_].kind != OpKind::Leaf) {
            throw ContractError("gradient: requested node is not a leaf");
        }
    }

    std::vector<Tensor> grads(loss.id_ + 1);
    std::vector<bool> have(loss.id_ + 1, false);
    grads[loss.id_] = Tensor::full(nodes_[loss.id_].value.shape(), 1.0);
    have[loss.id_] = true;

    std::vector<const Tensor*> in_values;
    std::vector<Tensor*> in_grads;
    for (std::size_t id = loss.id_ + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!have[id] || !node.requires_grad || !node.backward) {
            continue;
        }
        in_values.clear();
        in_grads.clear();
        for (std::size_t p : node.inputs) {
            in_values.push_back(&nodes_[p].value);
            if (nodes_[p].requires_grad) {
                if (!have[p]) {
                    grads[p] = Tensor::zeros(nodes_[p].value.shape());
                    have[p] = true;
                }
                in_grads.push_back(&grads[p]);
            } else {
                in_grads.push_back(nullptr);
            }
        }
        node.backward(BackwardContext{node.value, grads[id], in_values, in_grads});
        // Interior gradients are no longer needed once propagated.
        if (node.kind != OpKind::Leaf) {
            grads[id] = Tensor();
        }
    }

    std::vector<Tensor> out;
    out.reserve(wrt.size());
    for (const Var& w : wrt) {
        if (w.id_ <= loss.id_ && have[w.id_]) {
            out.push_back(grads[w.id_]);
        } else {
            out.push_back(Tensor::zeros(nodes_[w.id_].value.shape()));
        }
    }
    return out;
}

} // namespace engorgio::ad
