#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "tmsc/rng.hpp"
#include "tmsc/special.hpp"
#include "tmsc/tensor.hpp"

using namespace tmsc;

namespace {

Tensor random_tensor(Rng& rng, const std::vector<int>& shape, double lo, double hi,
                     bool requires_grad = true) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<float> data(n);
    for (auto& v : data) v = static_cast<float>(lo + (hi - lo) * rng.uniform());
    return Tensor::from_data(shape, std::move(data), requires_grad);
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite differences (h = 1e-3) against the recorded gradients for
// every entry of every leaf.
void check_gradients(std::vector<Tensor> leaves, const std::function<Tensor()>& make_loss,
                     double tol = 1e-3) {
    for (auto& leaf : leaves) leaf.zero_grad();
    Tensor loss = make_loss();
    loss.backward();
    std::vector<std::vector<float>> analytic;
    for (auto& leaf : leaves) {
        REQUIRE(leaf.has_grad());
        analytic.push_back(leaf.grad());
    }

    const float h = 1e-3f;
    for (size_t l = 0; l < leaves.size(); ++l) {
        auto& data = leaves[l].mutable_data();
        for (size_t i = 0; i < data.size(); ++i) {
            const float saved = data[i];
            data[i] = saved + h;
            const double up = make_loss().value();
            data[i] = saved - h;
            const double down = make_loss().value();
            data[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            CHECK_MESSAGE(rel_err(analytic[l][i], fd) < tol,
                          "leaf ", l, " entry ", i, ": analytic ", analytic[l][i], " vs fd ", fd);
        }
    }
}

}  // namespace

TEST_CASE("matmul by identity is identity") {
    Rng rng(7);
    Tensor m = random_tensor(rng, {3, 3}, -2.0, 2.0, false);
    Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor out = matmul(eye, m);
    for (int i = 0; i < 9; ++i) CHECK(out.at(i) == m.at(i));
}

TEST_CASE("row_softmax of equal logits is uniform") {
    Tensor out = row_softmax(Tensor::from_data({2}, {0.0f, 0.0f}));
    CHECK(out.at(0) == doctest::Approx(0.5));
    CHECK(out.at(1) == doctest::Approx(0.5));
}

TEST_CASE("tanh of zero is zero") { CHECK(tanh(Tensor::scalar(0.0f)).value() == 0.0f); }

TEST_CASE("softplus fixtures and stability") {
    CHECK(softplus(Tensor::scalar(0.0f)).value() == doctest::Approx(0.6931472).epsilon(1e-6));
    CHECK(softplus(Tensor::scalar(100.0f)).value() == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(softplus(Tensor::scalar(-100.0f)).value() == doctest::Approx(0.0).epsilon(1e-6));
    // stays finite and positive over a huge range
    for (float x : {-1e4f, -42.5f, 0.25f, 37.0f, 1e4f}) {
        const float y = softplus(Tensor::scalar(x)).value();
        CHECK(std::isfinite(y));
        CHECK(y > 0.0f);
    }
}

TEST_CASE("tensor digamma/lgamma agree with the scalar versions") {
    Tensor x = Tensor::from_data({3}, {0.5f, 1.0f, 7.25f});
    Tensor dg = digamma(x);
    Tensor lg = lgamma(x);
    for (int i = 0; i < 3; ++i) {
        CHECK(dg.at(i) == doctest::Approx(digamma(static_cast<double>(x.at(i)))).epsilon(1e-6));
        CHECK(lg.at(i) == doctest::Approx(lgamma_pos(static_cast<double>(x.at(i)))).epsilon(1e-6));
    }
}

TEST_CASE("backward quadratic fixture") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    Tensor loss = sum(mul(w, w));
    loss.backward();
    CHECK(w.grad()[0] == doctest::Approx(2.0));
    CHECK(w.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward softplus fixture: gradient at zero is sigmoid(0)") {
    Tensor w = Tensor::scalar(0.0f, true);
    softplus(w).backward();
    CHECK(w.grad()[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("repeated backward accumulates") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    Tensor loss = sum(mul(w, w));
    loss.backward();
    loss.backward();
    CHECK(w.grad()[0] == doctest::Approx(4.0));
    CHECK(w.grad()[1] == doctest::Approx(8.0));
}

TEST_CASE("backward rejects non-scalar loss") {
    Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    CHECK_THROWS(mul(w, w).backward());
}

TEST_CASE("sgd step fixtures") {
    SUBCASE("p=1, g=2, lr=0.1") {
        Tensor p = Tensor::scalar(1.0f, true);
        mul(p, Tensor::scalar(2.0f)).backward();
        sgd_step({p}, 0.1f);
        CHECK(p.value() == doctest::Approx(0.8));
        CHECK(p.grad()[0] == 0.0f);  // zeroed afterwards
    }
    SUBCASE("lr=0 leaves parameters unchanged") {
        Tensor p = Tensor::scalar(1.0f, true);
        mul(p, p).backward();
        sgd_step({p}, 0.0f);
        CHECK(p.value() == 1.0f);
    }
    SUBCASE("two lr=0.5 steps on p^2 from p=1 reach and stay at 0") {
        Tensor p = Tensor::scalar(1.0f, true);
        mul(p, p).backward();
        sgd_step({p}, 0.5f);
        CHECK(p.value() == doctest::Approx(0.0));
        mul(p, p).backward();
        sgd_step({p}, 0.5f);
        CHECK(p.value() == doctest::Approx(0.0));
    }
    SUBCASE("missing gradient is rejected") {
        Tensor p = Tensor::scalar(1.0f, true);
        CHECK_THROWS(sgd_step({p}, 0.1f));
    }
}

TEST_CASE("shape mismatch diagnostics name both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({3, 3});
    try {
        add(a, b);
        FAIL("expected shape error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2, 3]") != std::string::npos);
        CHECK(msg.find("[3, 3]") != std::string::npos);
    }
    CHECK_THROWS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})));
}

TEST_CASE("scalar broadcast works from either side") {
    Tensor v = Tensor::from_data({3}, {1.0f, 2.0f, 3.0f});
    Tensor s = Tensor::scalar(2.0f);
    Tensor sum_vs = add(v, s);
    Tensor sum_sv = add(s, v);
    Tensor ratio = divide(s, v);
    for (int i = 0; i < 3; ++i) {
        CHECK(sum_vs.at(i) == doctest::Approx(v.at(i) + 2.0f));
        CHECK(sum_sv.at(i) == sum_vs.at(i));
        CHECK(ratio.at(i) == doctest::Approx(2.0f / v.at(i)));
    }
}

TEST_CASE("forward determinism: identical inputs give bit-identical outputs") {
    auto run = [] {
        Rng rng(99);
        Tensor a = random_tensor(rng, {4, 5}, -1.0, 1.0, false);
        Tensor b = random_tensor(rng, {5, 3}, -1.0, 1.0, false);
        return row_softmax(tanh(matmul(a, b)));
    };
    Tensor first = run();
    Tensor second = run();
    REQUIRE(first.numel() == second.numel());
    for (int64_t i = 0; i < first.numel(); ++i) CHECK(first.at(i) == second.at(i));
}

TEST_CASE("row_softmax rows are probability distributions") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor(rng, {4, 6}, -8.0, 8.0, false);
        Tensor p = row_softmax(x);
        for (int r = 0; r < 4; ++r) {
            double total = 0.0;
            for (int c = 0; c < 6; ++c) {
                CHECK(p.at2(r, c) >= 0.0f);
                total += p.at2(r, c);
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("no NaN appears on finite inputs across the op suite") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        Tensor x = random_tensor(rng, {3, 4}, -30.0, 30.0, false);
        Tensor pos = random_tensor(rng, {3, 4}, 0.05, 30.0, false);
        for (const Tensor& t : {add(x, x), mul(x, x), sub(x, x), divide(x, pos), exp(scale(x, 0.1f)),
                                log(pos), tanh(x), softplus(x), digamma(pos), lgamma(pos),
                                row_softmax(x), sum(x), mean(x)}) {
            for (int64_t i = 0; i < t.numel(); ++i) CHECK(std::isfinite(t.at(i)));
        }
    }
}

TEST_CASE("gradients match central finite differences across the suite") {
    Rng rng(2024);

    for (int trial = 0; trial < 5; ++trial) {
        // generic elementwise + reduction chain
        {
            Tensor a = random_tensor(rng, {2, 3}, -1.5, 1.5);
            Tensor b = random_tensor(rng, {2, 3}, 0.5, 2.0);
            check_gradients({a, b}, [&] {
                return mean(add(mul(a, b), sub(tanh(a), divide(a, b))));
            });
        }
        // exp/log/softplus chain on positive data
        {
            Tensor a = random_tensor(rng, {4}, 0.3, 2.5);
            check_gradients({a}, [&] { return sum(mul(log(a), softplus(exp(scale(a, 0.5f))))); });
        }
        // special functions
        {
            Tensor a = random_tensor(rng, {5}, 0.5, 6.0);
            check_gradients({a}, [&] { return sum(sub(lgamma(a), digamma(a))); });
        }
        // matmul / transpose / take_row / add_rowvec
        {
            Tensor a = random_tensor(rng, {3, 4}, -1.0, 1.0);
            Tensor b = random_tensor(rng, {4, 2}, -1.0, 1.0);
            Tensor v = random_tensor(rng, {1, 2}, -1.0, 1.0);
            check_gradients({a, b, v}, [&] {
                return sum(tanh(take_row(add_rowvec(matmul(a, b), v), 1)));
            });
            check_gradients({a}, [&] { return sum(mul(transpose(a), transpose(a))); });
        }
        // row_softmax through a weighted readout
        {
            Tensor a = random_tensor(rng, {2, 5}, -2.0, 2.0);
            Tensor w = random_tensor(rng, {2, 5}, -1.0, 1.0, false);
            check_gradients({a}, [&] { return sum(mul(row_softmax(a), w)); });
        }
        // scalar broadcast both directions
        {
            Tensor s = random_tensor(rng, {1}, 0.5, 1.5);
            Tensor v = random_tensor(rng, {6}, -1.0, 1.0);
            check_gradients({s, v}, [&] { return sum(add(mul(v, s), divide(s, add_scalar(mul(v, v), 1.0f)))); });
        }
        // reshape / concat_rows
        {
            Tensor a = random_tensor(rng, {2, 3}, -1.0, 1.0);
            Tensor b = random_tensor(rng, {1, 3}, -1.0, 1.0);
            check_gradients({a, b}, [&] {
                return sum(mul(concat_rows({a, b}), concat_rows({b, a})));
            });
            check_gradients({a}, [&] { return sum(tanh(reshape(a, {3, 2}))); });
        }
        // layer_norm
        {
            Tensor x = random_tensor(rng, {3, 6}, -2.0, 2.0);
            Tensor g = random_tensor(rng, {1, 6}, 0.5, 1.5);
            Tensor b = random_tensor(rng, {1, 6}, -0.5, 0.5);
            Tensor w = random_tensor(rng, {3, 6}, -1.0, 1.0, false);
            check_gradients({x, g, b}, [&] { return sum(mul(layer_norm(x, g, b), w)); });
        }
    }
}
