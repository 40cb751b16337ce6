#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sepcount/adam.hpp"
#include "sepcount/eig.hpp"
#include "sepcount/errors.hpp"
#include "sepcount/layers.hpp"
#include "sepcount/rng.hpp"
#include "sepcount/selfcheck.hpp"
#include "sepcount/tensor.hpp"

using namespace sepcount;

TEST_CASE("tensor shape and access") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    t.at(1, 2) = 5.0;
    CHECK(t[5] == 5.0);
    CHECK(t.dim(0) == 2);
    CHECK_THROWS_AS((void)t.dim(3), ShapeError);
    t[0] = std::nan("");
    CHECK_FALSE(t.all_finite());
    CHECK_THROWS_AS(t.require_finite("t"), NumericError);
}

TEST_CASE("conv1d hand example") {
    // [1,2,3] * kernel [1,0,-1] valid -> [1*1 + 2*0 + 3*(-1)] = [-2]
    Tensor x = Tensor::from_data({1, 3}, {1, 2, 3});
    Tensor k = Tensor::from_data({1, 1, 3}, {1, 0, -1});
    Tensor y = conv1d_forward(x, k, Conv1dSpec{});
    REQUIRE(y.shape() == std::vector<std::size_t>{1, 1});
    CHECK(y[0] == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("conv1d stride and padding lengths") {
    Tensor x({2, 10});
    Tensor k({3, 2, 3});
    CHECK(conv1d_forward(x, k, Conv1dSpec{1, 1, 0}).dim(1) == 8);
    CHECK(conv1d_forward(x, k, Conv1dSpec{2, 1, 0}).dim(1) == 4);
    CHECK(conv1d_forward(x, k, Conv1dSpec{1, 1, 1}).dim(1) == 10);
    CHECK(conv1d_forward(x, k, Conv1dSpec{1, 2, 2}).dim(1) == 10);
}

TEST_CASE("conv1d shape mismatch rejected") {
    Tensor x({2, 10});
    Tensor k({3, 4, 3});  // kernel expects 4 input channels
    CHECK_THROWS_AS(conv1d_forward(x, k, Conv1dSpec{}), ShapeError);
}

TEST_CASE("matmul against hand result") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == 19);
    CHECK(c.at(0, 1) == 22);
    CHECK(c.at(1, 0) == 43);
    CHECK(c.at(1, 1) == 50);
    CHECK_THROWS_AS(matmul(a, Tensor({3, 2})), ShapeError);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng = make_rng(3, "softmax");
    Tensor x({5, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = gaussian(rng);
    Tensor p = softmax(x, 1);
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(p.at(i, j) >= 0.0);
            s += p.at(i, j);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("finite-difference gradient suite, unit layers") {
    // Every layer backward vs central differences, 10 seeds each.
    for (const CheckResult& r : gradient_suite(42, 10)) {
        INFO(r.name, ": ", r.detail);
        CHECK(r.pass);
    }
}

TEST_CASE("sym_eig 2x2 hand example") {
    // [[2,1],[1,2]] has eigenvalues 3 and 1.
    Tensor a = Tensor::from_data({2, 2}, {2, 1, 1, 2});
    EigResult e = sym_eig(a);
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    // Eigenvector for 3 is (1,1)/sqrt(2) up to sign.
    CHECK(std::abs(e.vectors.at(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::abs(e.vectors.at(1, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("sym_eig reconstruction on random 20x20") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng = make_rng(seed, "eig");
        const std::size_t n = 20;
        Tensor a({n, n});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = gaussian(rng);
                a.at(i, j) = v;
                a.at(j, i) = v;
            }
        EigResult e = sym_eig(a);
        // Sorted descending.
        for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] >= e.values[i]);
        // A == V diag(w) V^T within 1e-10.
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double r = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    r += e.vectors.at(i, k) * e.values[k] * e.vectors.at(j, k);
                worst = std::max(worst, std::abs(r - a.at(i, j)));
            }
        CHECK(worst < 1e-10);
        // Orthonormal columns.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double d = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    d += e.vectors.at(k, i) * e.vectors.at(k, j);
                CHECK(std::abs(d - (i == j ? 1.0 : 0.0)) < 1e-10);
            }
    }
}

TEST_CASE("sym_eig rejects asymmetric input") {
    Tensor a = Tensor::from_data({2, 2}, {1, 5, 0, 1});
    CHECK_THROWS_AS(sym_eig(a), NumericError);
}

TEST_CASE("adam minimizes a quadratic") {
    // f(w) = sum w_i^2; gradient 2w. Adam with lr 0.05 should get close to 0.
    Tensor w = Tensor::from_data({3}, {1.0, -2.0, 0.5});
    Tensor g({3});
    std::vector<ParamRef> params{{"w", &w, &g}};
    AdamState adam;
    adam.cfg.lr = 0.05;
    adam.init(params);
    for (int it = 0; it < 400; ++it) {
        for (std::size_t i = 0; i < 3; ++i) g[i] = 2.0 * w[i];
        adam.update(params);
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(w[i]) < 1e-3);
}

TEST_CASE("adam is deterministic") {
    auto run = [] {
        Tensor w = Tensor::from_data({2}, {0.3, -0.7});
        Tensor g({2});
        std::vector<ParamRef> params{{"w", &w, &g}};
        AdamState adam;
        adam.init(params);
        for (int it = 0; it < 50; ++it) {
            g[0] = std::sin(w[0]) + w[1];
            g[1] = w[0] * w[1];
            adam.update(params);
        }
        return std::make_pair(w[0], w[1]);
    };
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("adam rejects non-finite gradients by name") {
    Tensor w({2});
    Tensor g({2});
    g[0] = std::nan("");
    std::vector<ParamRef> params{{"bad_param", &w, &g}};
    AdamState adam;
    adam.init(params);
    CHECK_THROWS_WITH_AS(adam.update(params),
                         doctest::Contains("bad_param"), NumericError);
}

TEST_CASE("gradient clipping scales to the target norm") {
    Tensor w({2});
    Tensor g = Tensor::from_data({2}, {3.0, 4.0});  // norm 5
    std::vector<ParamRef> params{{"w", &w, &g}};
    const double pre = clip_gradients(params, 1.0);
    CHECK(pre == doctest::Approx(5.0));
    CHECK(std::hypot(g[0], g[1]) == doctest::Approx(1.0));
    // Below the limit: untouched.
    g[0] = 0.3;
    g[1] = 0.4;
    clip_gradients(params, 1.0);
    CHECK(g[0] == doctest::Approx(0.3));
}

TEST_CASE("seeded sub-streams are stable and distinct") {
    CHECK(sub_seed(1, "init") == sub_seed(1, "init"));
    CHECK(sub_seed(1, "init") != sub_seed(1, "data"));
    CHECK(sub_seed(1, "init") != sub_seed(2, "init"));
}
