#include "engorgio/autodiff/ops.hpp"

#include "engorgio/autodiff/kernels.hpp"
#include "engorgio/error.hpp"

#include <cmath>
#include <string>

namespace engorgio::ad {

namespace {

void require_same_shape(const char* op, Var a, Var b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    if (&a.graph() != &b.graph()) {
        throw ContractError(std::string(op) + ": operands from different graphs");
    }
}

void require_matrix(const char* op, Var a) {
    if (a.value().rank() != 2) {
        throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " + shape_str(a.shape()));
    }
}

void require_row_vector(const char* op, Var a, Var b) {
    require_matrix(op, a);
    if (b.value().rank() != 1 || b.shape()[0] != a.shape()[1]) {
        throw ShapeError(std::string(op) + ": row operand " + shape_str(b.shape()) + " does not match " +
                         shape_str(a.shape()));
    }
}

void accumulate(Tensor* dst, std::span<const double> src, double factor = 1.0) {
    if (dst == nullptr) {
        return;
    }
    auto d = dst->data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += factor * src[i];
    }
}

} // namespace

Var add(Var a, Var b) {
    require_same_shape("add", a, b);
    Tensor out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] += bv[i];
    }
    return a.graph().record(OpKind::Add, std::move(out), {a, b}, [](const BackwardContext& ctx) {
        accumulate(ctx.input_grads[0], ctx.grad_out.data());
        accumulate(ctx.input_grads[1], ctx.grad_out.data());
    });
}

Var sub(Var a, Var b) {
    require_same_shape("sub", a, b);
    Tensor out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] -= bv[i];
    }
    return a.graph().record(OpKind::Sub, std::move(out), {a, b}, [](const BackwardContext& ctx) {
        accumulate(ctx.input_grads[0], ctx.grad_out.data());
        accumulate(ctx.input_grads[1], ctx.grad_out.data(), -1.0);
    });
}

Var mul(Var a, Var b) {
    require_same_shape("mul", a, b);
    Tensor out = a.value();
    auto o = out.data();
    auto bv = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] *= bv[i];
    }
    return a.graph().record(OpKind::Mul, std::move(out), {a, b}, [](const BackwardContext& ctx) {
        const auto g = ctx.grad_out.data();
        const auto av = ctx.inputs[0]->data();
        const auto bv = ctx.inputs[1]->data();
        if (Tensor* ga = ctx.input_grads[0]) {
            auto d = ga->data();
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] += g[i] * bv[i];
            }
        }
        if (Tensor* gb = ctx.input_grads[1]) {
            auto d = gb->data();
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] += g[i] * av[i];
            }
        }
    });
}

Var scale(Var a, double s) {
    Tensor out = a.value();
    for (double& v : out.data()) {
        v *= s;
    }
    return a.graph().record(OpKind::Scale, std::move(out), {a}, [s](const BackwardContext& ctx) {
        accumulate(ctx.input_grads[0], ctx.grad_out.data(), s);
    });
}

Var add_scalar(Var a, double s) {
    Tensor out = a.value();
    for (double& v : out.data()) {
        v += s;
    }
    return a.graph().record(OpKind::AddScalar, std::move(out), {a}, [](const BackwardContext& ctx) {
        accumulate(ctx.input_grads[0], ctx.grad_out.data());
    });
}

Var add_row(Var a, Var b) {
    require_row_vector("add_row", a, b);
    Tensor out = a.value();
    const std::size_t rows = out.rows();
    const std::size_t cols = out.cols();
    const auto bv = b.value().data();
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] += bv[c];
        }
    }
    return a.graph().record(OpKind::AddRow, std::move(out), {a, b}, [](const BackwardContext& ctx) {
        accumulate(ctx.input_grads[0], ctx.grad_out.data());
        if (Tensor* gb = ctx.input_grads[1]) {
            auto d = gb->data();
            for (std::size_t r = 0; r < ctx.grad_out.rows(); ++r) {
                const auto g = ctx.grad_out.row(r);
                for (std::size_t c = 0; c < d.size(); ++c) {
                    d[c] += g[c];
                }
            }
        }
    });
}

Var mul_row(Var a, Var b) {
    require_row_vector("mul_row", a, b);
    Tensor out = a.value();
    const std::size_t rows = out.rows();
    const std::size_t cols = out.cols();
    const auto bv = b.value().data();
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] *= bv[c];
        }
    }
    return a.graph().record(OpKind::MulRow, std::move(out), {a, b}, [](const BackwardContext& ctx) {
        const Tensor& av = *ctx.inputs[0];
        const auto bv = ctx.inputs[1]->data();
        const std::size_t rows = av.rows();
        const std::size_t cols = av.cols();
        if (Tensor* ga = ctx.input_grads[0]) {
            for (std::size_t r = 0; r < rows; ++r) {
                auto d = ga->row(r);
                const auto g = ctx.grad_out.row(r);
                for (std::size_t c = 0; c < cols; ++c) {
                    d[c] += g[c] * bv[c];
                }
            }
        }
        if (Tensor* gb = ctx.input_grads[1]) {
            auto d = gb->data();
            for (std::size_t r = 0; r < rows; ++r) {
                const auto g = ctx.grad_out.row(r);
                const auto x = av.row(r);
                for (std::size_t c = 0; c < cols; ++c) {
                    d[c] += g[c] * x[c];
                }
            }
        }
    });
}

Var matmul(Var a, Var b) {
    require_matrix("matmul", a);
    require_matrix("matmul", b);
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
    }
    Tensor out = Tensor::zeros({m, n});
    kernels::matmul_acc(a.value().data(), b.value().data(), out.data(), m, k, n);
    return a.graph().record(OpKind::MatMul, std::move(out), {a, b}, [m, k, n](const BackwardContext& ctx) {
        // dA = dC * B^T, dB = A^T * dC
        if (Tensor* ga = ctx.input_grads[0]) {
            kernels::matmul_nt_acc(ctx.grad_out.data(), ctx.inputs[1]->data(), ga->data(), m, n, k);
        }
        if (Tensor* gb = ctx.input_grads[1]) {
            kernels::matmul_tn_acc(ctx.inputs[0]->data(), ctx.grad_out.data(), gb->data(), m, k, n);
        }
    });
}

Var matmul_nt(Var a, Var b) {
    require_matrix("matmul_nt", a);
    require_matrix("matmul_nt", b);
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = b.shape()[0];
    if (b.shape()[1] != k) {
        throw ShapeError("matmul_nt: inner dimensions differ " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()) + "^T");
    }
    Tensor out = Tensor::zeros({m, n});
    kernels::matmul_nt_acc(a.value().data(), b.value().data(), out.data(), m, k, n);
    return a.graph().record(OpKind::MatMulNT, std::move(out), {a, b}, [m, k, n](const BackwardContext& ctx) {
        // dA = dC * B, dB = dC^T * A
        if (Tensor* ga = ctx.input_grads[0]) {
            kernels::matmul_acc(ctx.grad_out.data(), ctx.inputs[1]->data(), ga->data(), m, n, k);
        }
        if (Tensor* gb = ctx.input_grads[1]) {
            kernels::matmul_tn_acc(ctx.grad_out.data(), ctx.inputs[0]->data(), gb->data(), m, n, k);
        }
    });
}

Var softmax_rows(Var x) {
    require_matrix("softmax_rows", x);
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        kernels::softmax_row(x.value().row(r), out.row(r));
    }
    return x.graph().record(OpKind::SoftmaxRows, std::move(out), {x}, [](const BackwardContext& ctx) {
        Tensor* gx = ctx.input_grads[0];
        for (std::size_t r = 0; r < ctx.out.rows(); ++r) {
            const auto y = ctx.out.row(r);
            const auto g = ctx.grad_out.row(r);
            double inner = 0.0;
            for (std::size_t c = 0; c < y.size(); ++c) {
                inner += g[c] * y[c];
            }
            auto d = gx->row(r);
            for (std::size_t c = 0; c < y.size(); ++c) {
                d[c] += y[c] * (g[c] - inner);
            }
        }
    });
}

Var log_softmax_rows(Var x) {
    require_matrix("log_softmax_rows", x);
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        kernels::log_softmax_row(x.value().row(r), out.row(r));
    }
    return x.graph().record(OpKind::LogSoftmaxRows, std::move(out), {x}, [](const BackwardContext& ctx) {
        Tensor* gx = ctx.input_grads[0];
        for (std::size_t r = 0; r < ctx.out.rows(); ++r) {
            const auto y = ctx.out.row(r);
            const auto g = ctx.grad_out.row(r);
            double gsum = 0.0;
            for (double v : g) {
                gsum += v;
            }
            auto d = gx->row(r);
            for (std::size_t c = 0; c < y.size(); ++c) {
                d[c] += g[c] - std::exp(y[c]) * gsum;
            }
        }
    });
}

Var layer_norm_rows(Var x, Var gain, Var bias) {
    require_row_vector("layer_norm_rows", x, gain);
    require_row_vector("layer_norm_rows", x, bias);
    const std::size_t rows = x.shape()[0];
    const std::size_t cols = x.shape()[1];
    Tensor out = Tensor::zeros(x.shape());
    Tensor xhat = Tensor::zeros(x.shape());
    std::vector<double> rstd(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        rstd[r] = kernels::layer_norm_row(x.value().row(r), gain.value().data(), bias.value().data(), xhat.row(r),
                                          out.row(r));
    }
    return x.graph().record(
        OpKind::LayerNormRows, std::move(out), {x, gain, bias},
        [xhat = std::move(xhat), rstd = std::move(rstd), rows, cols](const BackwardContext& ctx) {
            const auto gv = ctx.inputs[1]->data();
            Tensor* gx = ctx.input_grads[0];
            Tensor* gg = ctx.input_grads[1];
            Tensor* gb = ctx.input_grads[2];
            const double inv_n = 1.0 / static_cast<double>(cols);
            for (std::size_t r = 0; r < rows; ++r) {
                const auto g = ctx.grad_out.row(r);
                const auto xh = xhat.row(r);
                if (gg != nullptr) {
                    auto d = gg->data();
                    for (std::size_t c = 0; c < cols; ++c) {
                        d[c] += g[c] * xh[c];
                    }
                }
                if (gb != nullptr) {
                    auto d = gb->data();
                    for (std::size_t c = 0; c < cols; ++c) {
                        d[c] += g[c];
                    }
                }
                if (gx != nullptr) {
                    double mean_dxh = 0.0;
                    double mean_dxh_xh = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double dxh = g[c] * gv[c];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh[c];
                    }
                    mean_dxh *= inv_n;
                    mean_dxh_xh *= inv_n;
                    auto d = gx->row(r);
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double dxh = g[c] * gv[c];
                        d[c] += rstd[r] * (dxh - mean_dxh - xh[c] * mean_dxh_xh);
                    }
                }
            }
        });
}

Var gelu(Var x) {
    Tensor out = x.value();
    for (double& v : out.data()) {
        v = kernels::gelu(v);
    }
    return x.graph().record(OpKind::Gelu, std::move(out), {x}, [](const BackwardContext& ctx) {
        const auto xv = ctx.inputs[0]->data();
        const auto g = ctx.grad_out.data();
        auto d = ctx.input_grads[0]->data();
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] += g[i] * kernels::gelu_grad(xv[i]);
        }
    });
}

Var causal_attention(Var qkv, std::size_t heads) {
    require_matrix("causal_attention", qkv);
    const std::size_t n = qkv.shape()[0];
    if (heads == 0 || qkv.shape()[1] % (3 * heads) != 0) {
        throw ShapeError("causal_attention: width " + std::to_string(qkv.shape()[1]) +
                         " is not 3 * heads * head_dim");
    }
    const std::size_t hidden = qkv.shape()[1] / 3;
    const std::size_t hd = hidden / heads;

    Tensor out = Tensor::zeros({n, hidden});
    // Lower-triangular attention weights, per head: probs[h][i*n + j], j <= i.
    std::vector<double> probs(heads * n * n, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            std::span<double> p(probs.data() + (h * n + i) * n, i + 1);
            kernels::attend_row(qkv.value().data(), hidden, h, hd, i, p, out.row(i).subspan(h * hd, hd));
        }
    }
    return qkv.graph().record(
        OpKind::CausalAttention, std::move(out), {qkv},
        [probs = std::move(probs), n, heads, hidden, hd](const BackwardContext& ctx) {
            const auto x = ctx.inputs[0]->data();
            auto dx = ctx.input_grads[0]->data();
            const std::size_t stride = 3 * hidden;
            const double sc = 1.0 / std::sqrt(static_cast<double>(hd));
            std::vector<double> dp(n);
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t off = h * hd;
                for (std::size_t i = 0; i < n; ++i) {
                    const double* p = probs.data() + (h * n + i) * n;
                    const auto go = ctx.grad_out.row(i).subspan(off, hd);
                    double inner = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) {
                        const double* vj = x.data() + j * stride + 2 * hidden + off;
                        double s = 0.0;
                        for (std::size_t d = 0; d < hd; ++d) {
                            s += go[d] * vj[d];
                        }
                        dp[j] = s;
                        inner += p[j] * s;
                        double* dvj = dx.data() + j * stride + 2 * hidden + off;
                        for (std::size_t d = 0; d < hd; ++d) {
                            dvj[d] += p[j] * go[d];
                        }
                    }
                    const double* qi = x.data() + i * stride + off;
                    double* dqi = dx.data() + i * stride + off;
                    for (std::size_t j = 0; j <= i; ++j) {
                        const double ds = p[j] * (dp[j] - inner) * sc;
                        const double* kj = x.data() + j * stride + hidden + off;
                        double* dkj = dx.data() + j * stride + hidden + off;
                        for (std::size_t d = 0; d < hd; ++d) {
                            dqi[d] += ds * kj[d];
                            dkj[d] += ds * qi[d];
                        }
                    }
                }
            }
        });
}

Var gather_rows(Var table, std::span<const Token> rows) {
    require_matrix("gather_rows", table);
    const std::size_t n_rows = table.shape()[0];
    const std::size_t cols = table.shape()[1];
    Tensor out = Tensor::zeros({rows.size(), cols});
    std::vector<Token> idx(rows.begin(), rows.end());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= n_rows) {
            throw ShapeError("gather_rows: index " + std::to_string(idx[i]) + " out of range " +
                             std::to_string(n_rows));
        }
        const auto src = table.value().row(static_cast<std::size_t>(idx[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return table.graph().record(OpKind::GatherRows, std::move(out), {table},
                                [idx = std::move(idx)](const BackwardContext& ctx) {
                                    Tensor* gt = ctx.input_grads[0];
                                    for (std::size_t i = 0; i < idx.size(); ++i) {
                                        auto d = gt->row(static_cast<std::size_t>(idx[i]));
                                        const auto g = ctx.grad_out.row(i);
                                        for (std::size_t c = 0; c < d.size(); ++c) {
                                            d[c] += g[c];
                                        }
                                    }
                                });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    require_matrix("slice_rows", a);
    const std::size_t cols = a.shape()[1];
    if (begin + count > a.shape()[0]) {
        throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") exceed " + shape_str(a.shape()));
    }
    const auto src = a.value().data().subspan(begin * cols, count * cols);
    Tensor out({count, cols}, std::vector<double>(src.begin(), src.end()));
    return a.graph().record(OpKind::SliceRows, std::move(out), {a}, [begin, cols](const BackwardContext& ctx) {
        auto d = ctx.input_grads[0]->data().subspan(begin * cols, ctx.grad_out.size());
        const auto g = ctx.grad_out.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] += g[i];
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) {
        throw ShapeError("concat_rows: no inputs");
    }
    std::size_t cols = 0;
    std::size_t rows = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        require_matrix("concat_rows", parts[i]);
        if (i == 0) {
            cols = parts[i].shape()[1];
        } else if (parts[i].shape()[1] != cols) {
            throw ShapeError("concat_rows: column mismatch " + shape_str(parts[i].shape()));
        }
        rows += parts[i].shape()[0];
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    std::vector<std::size_t> sizes;
    for (const Var& p : parts) {
        const auto v = p.value().data();
        data.insert(data.end(), v.begin(), v.end());
        sizes.push_back(v.size());
    }
    return parts[0].graph().record(OpKind::ConcatRows, Tensor({rows, cols}, std::move(data)),
                                   std::vector<Var>(parts.begin(), parts.end()),
                                   [sizes = std::move(sizes)](const BackwardContext& ctx) {
                                       std::size_t off = 0;
                                       const auto g = ctx.grad_out.data();
                                       for (std::size_t i = 0; i < sizes.size(); ++i) {
                                           accumulate(ctx.input_grads[i], g.subspan(off, sizes[i]));
                                           off += sizes[i];
                                       }
                                   });
}

Var select_column(Var a, std::size_t col) {
    require_matrix("select_column", a);
    const std::size_t rows = a.shape()[0];
    const std::size_t cols = a.shape()[1];
    if (col >= cols) {
        throw ShapeError("select_column: column " + std::to_string(col) + " out of range " + shape_str(a.shape()));
    }
    Tensor out = Tensor::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = a.value().at(r, col);
    }
    return a.graph().record(OpKind::SelectColumn, std::move(out), {a}, [col](const BackwardContext& ctx) {
        Tensor* ga = ctx.input_grads[0];
        for (std::size_t r = 0; r < ctx.grad_out.size(); ++r) {
            ga->at(r, col) += ctx.grad_out[r];
        }
    });
}

Var pick_rows(Var a, std::span<const Token> columns) {
    require_matrix("pick_rows", a);
    const std::size_t rows = a.shape()[0];
    const std::size_t cols = a.shape()[1];
    if (columns.size() != rows) {
        throw ShapeError("pick_rows: " + std::to_string(columns.size()) + " indices for " + std::to_string(rows) +
                         " rows");
    }
    std::vector<Token> idx(columns.begin(), columns.end());
    Tensor out = Tensor::zeros({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= cols) {
            throw ShapeError("pick_rows: index " + std::to_string(idx[r]) + " out of range");
        }
        out[r] = a.value().at(r, static_cast<std::size_t>(idx[r]));
    }
    return a.graph().record(OpKind::PickRows, std::move(out), {a}, [idx = std::move(idx)](const BackwardContext& ctx) {
        Tensor* ga = ctx.input_grads[0];
        for (std::size_t r = 0; r < idx.size(); ++r) {
            ga->at(r, static_cast<std::size_t>(idx[r])) += ctx.grad_out[r];
        }
    });
}

Var sum(Var a) {
    double s = 0.0;
    for (double v : a.value().data()) {
        s += v;
    }
    return a.graph().record(OpKind::Sum, Tensor::scalar(s), {a}, [](const BackwardContext& ctx) {
        const double g = ctx.grad_out.item();
        for (double& d : ctx.input_grads[0]->data()) {
            d += g;
        }
    });
}

Var dot(Var a, Var b) {
    require_same_shape("dot", a, b);
    double s = 0.0;
    const auto av = a.value().data();
    const auto bv = b.value().data();
    for (std::size_t i = 0; i < av.size(); ++i) {
        s += av[i] * bv[i];
    }
    return a.graph().record(OpKind::Dot, Tensor::scalar(s), {a, b}, [](const BackwardContext& ctx) {
        const double g = ctx.grad_out.item();
        accumulate(ctx.input_grads[0], ctx.inputs[1]->data(), g);
        accumulate(ctx.input_grads[1], ctx.inputs[0]->data(), g);
    });
}

} // namespace engorgio::ad
