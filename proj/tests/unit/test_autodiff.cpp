#include "doctest.h"
#include "gradcheck.hpp"

#include "engorgio/autodiff/adam.hpp"
#include "engorgio/autodiff/kernels.hpp"
#include "engorgio/autodiff/ops.hpp"
#include "engorgio/error.hpp"

#include <cmath>
#include <vector>

using namespace engorgio;
using namespace engorgio::ad;
using engorgio::testing::max_relative_error;
using engorgio::testing::random_tensor;

TEST_CASE("softmax examples") {
    Graph g;
    Var x = g.constant(Tensor::matrix({{std::log(2.0), std::log(1.0)}}));
    const Tensor s = softmax_rows(x).value();
    CHECK(s.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Var big = g.constant(Tensor::matrix({{1000.0, 1000.0, -1000.0}}));
    const Tensor b = softmax_rows(big).value();
    CHECK(b.all_finite());
    CHECK(b.at(0, 0) == doctest::Approx(0.5));
    CHECK(b.at(0, 2) == 0.0);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
    Rng rng(3);
    const Tensor x = random_tensor({5, 9}, rng, 4.0);
    Tensor shifted = x;
    for (std::size_t r = 0; r < 5; ++r) {
        for (double& v : shifted.row(r)) {
            v += 17.5 * static_cast<double>(r + 1);
        }
    }
    Graph g;
    const Tensor a = softmax_rows(g.constant(x)).value();
    const Tensor b = softmax_rows(g.constant(shifted)).value();
    for (std::size_t r = 0; r < 5; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 9; ++c) {
            sum += a.at(r, c);
            CHECK(a.at(r, c) >= 0.0);
            CHECK(std::abs(a.at(r, c) - b.at(r, c)) < 1e-12);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("sum gradient is all ones") {
    Graph g;
    Var x = g.leaf(Tensor::matrix({{1.0, -2.0, 3.0}, {4.0, 5.0, 6.0}}));
    const std::vector<Tensor> grads = g.gradient(sum(x), std::vector<Var>{x});
    CHECK(grads[0] == Tensor::full({2, 3}, 1.0));
}

TEST_CASE("gradient contract errors") {
    Graph g;
    Var x = g.leaf(Tensor::vector({1.0, 2.0}));
    Var y = scale(x, 2.0);
    CHECK_THROWS_AS(g.gradient(y, std::vector<Var>{x}), ContractError);
    CHECK_THROWS_AS(g.gradient(sum(y), std::vector<Var>{y}), ContractError);
}

TEST_CASE("non-finite values are rejected") {
    Graph g;
    Var x = g.leaf(Tensor::vector({1e308, 1e308}));
    CHECK_THROWS_AS(scale(x, 10.0), NumericError);
}

TEST_CASE("shape errors") {
    Graph g;
    Var a = g.leaf(Tensor::zeros({2, 3}));
    Var b = g.leaf(Tensor::zeros({2, 2}));
    CHECK_THROWS_AS(add(a, b), ShapeError);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("elementwise and matmul gradients match finite differences") {
    Rng rng(11);
    const std::vector<Tensor> in = {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng), random_tensor({4, 5}, rng),
                                    random_tensor({4}, rng)};
    auto build = [](Graph&, std::span<const Var> v) {
        Var e = add(mul(v[0], v[1]), sub(scale(v[0], 0.5), add_scalar(v[1], 2.0)));
        Var r = mul_row(add_row(e, v[3]), v[3]);
        Var m = matmul(r, v[2]);
        Var n = matmul_nt(m, m);
        return add(sum(mul(n, n)), dot(v[3], v[3]));
    };
    CHECK(max_relative_error(in, build) < 1e-6);
}

TEST_CASE("softmax family and layer norm gradients match finite differences") {
    Rng rng(12);
    const std::vector<Tensor> in = {random_tensor({4, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng),
                                    random_tensor({4, 6}, rng)};
    auto build = [](Graph&, std::span<const Var> v) {
        Var ln = layer_norm_rows(v[0], v[1], v[2]);
        Var s = softmax_rows(mul(ln, v[3]));
        Var ls = log_softmax_rows(add(v[0], v[3]));
        return add(sum(mul(s, v[3])), sum(mul(ls, s)));
    };
    CHECK(max_relative_error(in, build) < 1e-6);
}

TEST_CASE("gelu gradient matches finite differences") {
    Rng rng(13);
    const std::vector<Tensor> in = {random_tensor({3, 5}, rng, 2.0), random_tensor({3, 5}, rng)};
    auto build = [](Graph&, std::span<const Var> v) { return sum(mul(gelu(v[0]), v[1])); };
    CHECK(max_relative_error(in, build) < 1e-6);
}

TEST_CASE("causal attention gradient matches finite differences") {
    Rng rng(14);
    const std::vector<Tensor> in = {random_tensor({5, 12}, rng), random_tensor({5, 4}, rng)};
    auto build = [](Graph&, std::span<const Var> v) { return sum(mul(causal_attention(v[0], 2), v[1])); };
    CHECK(max_relative_error(in, build) < 1e-6);
}

TEST_CASE("row plumbing gradients match finite differences") {
    Rng rng(15);
    const std::vector<Tensor> in = {random_tensor({6, 4}, rng), random_tensor({2, 4}, rng)};
    const std::vector<Token> rows = {0, 3, 3, 5};
    const std::vector<Token> cols = {1, 0, 3, 2, 2};
    auto build = [&](Graph&, std::span<const Var> v) {
        Var gathered = gather_rows(v[0], rows);
        Var sliced = slice_rows(v[0], 1, 3);
        const std::vector<Var> parts = {gathered, v[1], sliced};
        Var cat = concat_rows(parts);
        Var cat_sq = mul(cat, cat);
        Var picked = pick_rows(slice_rows(cat_sq, 0, 5), cols);
        return add(sum(picked), sum(mul(select_column(cat, 2), select_column(cat, 1))));
    };
    CHECK(max_relative_error(in, build) < 1e-6);
}

TEST_CASE("gradients accumulate over reused nodes") {
    Graph g;
    Var x = g.leaf(Tensor::scalar(3.0));
    Var y = mul(x, x);
    Var z = add(y, y);
    CHECK(g.gradient(z, std::vector<Var>{x})[0].item() == doctest::Approx(12.0));
}

TEST_CASE("backward is bitwise reproducible") {
    Rng rng(16);
    const Tensor a = random_tensor({4, 12}, rng);
    auto grad = [&] {
        Graph g;
        Var x = g.leaf(a);
        return g.gradient(sum(mul(causal_attention(x, 2), causal_attention(x, 2))), std::vector<Var>{x})[0];
    };
    CHECK(grad() == grad());
}

TEST_CASE("gelu kernel values") {
    CHECK(kernels::gelu(0.0) == 0.0);
    CHECK(kernels::gelu(10.0) == doctest::Approx(10.0));
    CHECK(std::abs(kernels::gelu(-10.0)) < 1e-12);
}

TEST_CASE("adam takes a learning-rate sized first step") {
    std::vector<Tensor> params = {Tensor::vector({1.0, -1.0})};
    const std::vector<Tensor> grads = {Tensor::vector({0.5, -2.0})};
    Adam adam(AdamConfig{0.1, 0.9, 0.999, 1e-8});
    adam.step(params, grads);
    CHECK(params[0][0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(params[0][1] == doctest::Approx(-0.9).epsilon(1e-6));
}
