#include "engorgio/autodiff/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace engorgio::ad::kernels {

void matmul_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.data() + i * n;
        const double* ai = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

void matmul_nt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.data() + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += ai[p] * bj[p];
            }
            c[i * n + j] += acc;
        }
    }
}

void matmul_tn_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t k, std::size_t m, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a.data() + p * m;
        const double* bp = b.data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ap[i];
            if (av == 0.0) {
                continue;
            }
            double* ci = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

void softmax_row(std::span<const double> in, std::span<double> out) {
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
        out[j] = std::exp(in[j] - mx);
        sum += out[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < in.size(); ++j) {
        out[j] *= inv;
    }
}

void log_softmax_row(std::span<const double> in, std::span<double> out) {
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) {
        sum += std::exp(v - mx);
    }
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < in.size(); ++j) {
        out[j] = in[j] - lse;
    }
}

double layer_norm_row(std::span<const double> x, std::span<const double> gain, std::span<const double> bias,
                      std::span<double> xhat, std::span<double> y) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(n);
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (x[j] - mean) * rstd;
        y[j] = xhat[j] * gain[j] + bias[j];
    }
    return rstd;
}

namespace {
constexpr double kSqrt2OverPi = 0.7978845608028654;
constexpr double kGeluCubic = 0.044715;
} // namespace

double gelu(double x) {
    const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
    const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
    const double th = std::tanh(u);
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

void attend_row(std::span<const double> qkv, std::size_t hidden, std::size_t head, std::size_t head_dim,
                std::size_t pos, std::span<double> probs, std::span<double> out) {
    const std::size_t stride = 3 * hidden;
    const std::size_t off = head * head_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const double* q = qkv.data() + pos * stride + off;
    double mx = -INFINITY;
    for (std::size_t j = 0; j <= pos; ++j) {
        const double* kj = qkv.data() + j * stride + hidden + off;
        double s = 0.0;
        for (std::size_t d = 0; d < head_dim; ++d) {
            s += q[d] * kj[d];
        }
        s *= scale;
        probs[j] = s;
        mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j <= pos; ++j) {
        probs[j] = std::exp(probs[j] - mx);
        sum += probs[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j <= pos; ++j) {
        probs[j] *= inv;
    }
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(head_dim), 0.0);
    for (std::size_t j = 0; j <= pos; ++j) {
        const double* vj = qkv.data() + j * stride + 2 * hidden + off;
        const double p = probs[j];
        for (std::size_t d = 0; d < head_dim; ++d) {
            out[d] += p * vj[d];
        }
    }
}

} // namespace engorgio::ad::kernels
