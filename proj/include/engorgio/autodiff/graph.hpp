#pragma once

#include "engorgio/autodiff/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace engorgio::ad {

// Local-gradient rule carried by each node; used for diagnostics.
enum class OpKind : std::uint8_t {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Scale,
    AddScalar,
    AddRow,
    MulRow,
    MatMul,
    MatMulNT,
    SoftmaxRows,
    LogSoftmaxRows,
    LayerNormRows,
    Gelu,
    CausalAttention,
    GatherRows,
    SliceRows,
    ConcatRows,
    SelectColumn,
    PickRows,
    Sum,
    Dot,
};

const char* op_name(OpKind kind);

class Graph;

// Lightweight handle to a node of a Graph. Copyable; valid as long as the
// owning Graph is alive.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Graph& graph() const { return *graph_; }
    std::size_t id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

private:
    friend class Graph;
    Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

struct BackwardContext {
    const Tensor& out;
    const Tensor& grad_out;
    std::span<const Tensor* const> inputs;
    // Null where the input does not require a gradient. Rules accumulate.
    std::span<Tensor* const> input_grads;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Tape of an acyclic computation. Nodes are appended in creation order,
// which is a topological order; backward walks it in reverse and visits
// each node once, so gradient accumulation order is fixed and results are
// bitwise reproducible.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Differentiable input.
    Var leaf(Tensor value);
    // Input that never receives a gradient (frozen weights, fixed noise).
    Var constant(Tensor value);

    // Used by op implementations. Throws NumericError if value is not finite.
    Var record(OpKind kind, Tensor value, std::vector<Var> inputs, BackwardFn backward);

    const Tensor& value(Var v) const { return nodes_[v.id_].value; }
    bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
    OpKind kind(Var v) const { return nodes_[v.id_].kind; }
    std::size_t size() const { return nodes_.size(); }

    // d loss / d leaf for each requested leaf. loss must hold exactly one
    // element and every wrt node must be a Leaf of this graph.
    std::vector<Tensor> gradient(Var loss, std::span<const Var> wrt) const;

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        OpKind kind;
        BackwardFn backward;
        bool requires_grad;
    };

    void check_owned(Var v) const;

    std::vector<Node> nodes_;
};

} // namespace engorgio::ad
