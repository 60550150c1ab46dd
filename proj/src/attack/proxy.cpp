#include "engorgio/attack/proxy.hpp"

#include "engorgio/autodiff/kernels.hpp"
#include "engorgio/autodiff/ops.hpp"
#include "engorgio/error.hpp"

#include <algorithm>
#include <cmath>

namespace engorgio::attack {

ad::Tensor ProxyDistribution::weights() const {
    ad::Tensor w = ad::Tensor::zeros(theta.shape());
    for (std::size_t r = 0; r < theta.rows(); ++r) {
        ad::kernels::softmax_row(theta.row(r), w.row(r));
    }
    return w;
}

void ProxyDistribution::apply_mask() {
    for (std::size_t r = 0; r < theta.rows(); ++r) {
        for (Token t : mask) {
            theta.at(r, static_cast<std::size_t>(t)) = kMaskedLogit;
        }
    }
}

std::vector<Token> default_mask(const lm::Vocab& vocab) { return {vocab.pad(), vocab.bos(), vocab.eos()}; }

ProxyDistribution init_proxy(const PromptTemplate& tmpl, std::size_t vocab_size, std::vector<Token> mask, Rng& rng,
                             double sigma) {
    for (Token t : mask) {
        if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
            throw ConfigError("proxy: mask token out of range");
        }
    }
    std::vector<Token> allowed;
    for (std::size_t j = 0; j < vocab_size; ++j) {
        if (std::find(mask.begin(), mask.end(), static_cast<Token>(j)) == mask.end()) {
            allowed.push_back(static_cast<Token>(j));
        }
    }
    if (allowed.empty()) {
        throw ConfigError("proxy: every token is masked");
    }
    const std::size_t rows = tmpl.free_count();
    ProxyDistribution proxy{ad::Tensor::zeros({rows, vocab_size}), std::move(mask)};
    for (std::size_t r = 0; r < rows; ++r) {
        const Token pick = allowed[rng.index(allowed.size())];
        auto row = proxy.theta.row(r);
        row[static_cast<std::size_t>(pick)] = 1.0;
        if (sigma > 0.0) {
            for (double& v : row) {
                v += rng.normal(0.0, sigma);
            }
        }
    }
    proxy.apply_mask();
    return proxy;
}

ad::Tensor sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng) {
    ad::Tensor g = ad::Tensor::zeros({rows, cols});
    for (double& v : g.data()) {
        v = -std::log(-std::log(rng.uniform_open()));
    }
    return g;
}

ad::Var gumbel_softmax_rows(ad::Var theta, const ad::Tensor& noise, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError("gumbel_softmax: tau must be > 0");
    }
    ad::Var perturbed = ad::add(theta, theta.graph().constant(noise));
    return ad::softmax_rows(ad::scale(perturbed, 1.0 / tau));
}

namespace {

TokenSeq argmax_rows(const ProxyDistribution& proxy, std::size_t rows) {
    const ad::Tensor w = proxy.weights();
    TokenSeq out;
    out.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = w.row(r);
        Token best = -1;
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto tok = static_cast<Token>(j);
            if (std::find(proxy.mask.begin(), proxy.mask.end(), tok) != proxy.mask.end()) {
                continue;
            }
            if (best < 0 || row[j] > row[static_cast<std::size_t>(best)]) {
                best = tok;
            }
        }
        out.push_back(best);
    }
    return out;
}

} // namespace

TokenSeq extract_prompt(const ProxyDistribution& proxy, const PromptTemplate& tmpl) {
    if (proxy.theta.rows() != tmpl.free_count()) {
        throw ContractError("extract_prompt: proxy has " + std::to_string(proxy.theta.rows()) +
                            " rows, template expects " + std::to_string(tmpl.free_count()));
    }
    return argmax_rows(proxy, tmpl.prompt_length);
}

TokenSeq extract_all_rows(const ProxyDistribution& proxy) { return argmax_rows(proxy, proxy.theta.rows()); }

} // namespace engorgio::attack
