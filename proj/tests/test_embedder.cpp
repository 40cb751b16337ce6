#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sepcount/embedder.hpp"
#include "sepcount/errors.hpp"
#include "sepcount/rng.hpp"

using namespace sepcount;

namespace {

SeparatorStack make_stack(std::size_t f_in, std::size_t width, std::size_t f_conv,
                          std::size_t embed, std::vector<std::size_t> dilations,
                          std::uint64_t seed) {
    Rng rng = make_rng(seed, "stack");
    SeparatorStack s;
    s.init(f_in, width, f_conv, embed, dilations, rng);
    return s;
}

}  // namespace

TEST_CASE("paper-scale embedding shape: T=50 -> 12800x20") {
    SeparatorStack s = make_stack(267, 8, 256, 20, {1, 2}, 1);
    Tensor h({267, 50});
    Rng rng = make_rng(2, "h");
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = gaussian(rng) * 0.1;
    SeparatorStack::Cache cache;
    Tensor v = s.forward(h, cache);
    CHECK(v.shape() == std::vector<std::size_t>{50 * 256, 20});
}

TEST_CASE("blocks preserve temporal shape") {
    Rng rng = make_rng(3, "block");
    ConvBlock block;
    block.init(6, 4, rng);
    Tensor x({6, 23});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = gaussian(rng);
    ConvBlock::Cache cache;
    Tensor y = block.forward(x, cache, 0);
    CHECK(y.same_shape(x));
}

TEST_CASE("residual passthrough with zero conv weights") {
    // With every conv weight zero the block adds nothing, so the stack
    // reduces to head∘entry exactly.
    SeparatorStack s = make_stack(5, 4, 3, 2, {1, 2}, 4);
    for (ConvBlock& b : s.blocks) {
        b.in1x1.w.fill(0.0);
        b.in1x1.b.fill(0.0);
        b.out1x1.w.fill(0.0);
        b.out1x1.b.fill(0.0);
        b.dw.w.fill(0.0);
    }
    Tensor h({5, 7});
    Rng rng = make_rng(5, "h");
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = gaussian(rng);
    SeparatorStack::Cache cache;
    Tensor v = s.forward(h, cache);

    Tensor entry_out = s.entry.forward(h);
    Tensor head_out = s.head.forward(entry_out);
    // v row n = t·f_conv + f maps to head channel f·embed + l... invert it.
    const std::size_t T = 7, fc = 3, L = 2;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < fc; ++f)
            for (std::size_t l = 0; l < L; ++l)
                CHECK(v.at(t * fc + f, l) ==
                      doctest::Approx(head_out.at(f * L + l, t)).epsilon(1e-12));
}

TEST_CASE("zero input with zero head gives zero embeddings") {
    SeparatorStack s = make_stack(5, 4, 3, 2, {1}, 6);
    s.head.w.fill(0.0);
    s.head.b.fill(0.0);
    Tensor h({5, 6}, 0.0);
    SeparatorStack::Cache cache;
    Tensor v = s.forward(h, cache);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("dilated depthwise conv uses same padding") {
    // Output at interior positions depends on inputs dilation apart; shape
    // is preserved for every dilation in the schedule.
    Rng rng = make_rng(7, "dw");
    for (std::size_t dil : {1u, 2u, 4u, 8u}) {
        DepthwiseConv dw;
        dw.init(3, 3, dil, rng);
        Tensor x({3, 20});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = gaussian(rng);
        CHECK(dw.forward(x).same_shape(x));
    }
}

TEST_CASE("receptive field grows with dilation") {
    // An impulse through a zero-skip block chain: with dilation d and kernel
    // 3, one depthwise layer spreads an impulse to t±d.
    Rng rng = make_rng(8, "rf");
    DepthwiseConv dw;
    dw.init(1, 3, 4, rng);
    dw.w.fill(1.0);
    Tensor x({1, 21}, 0.0);
    x.at(0, 10) = 1.0;
    Tensor y = dw.forward(x);
    CHECK(y.at(0, 6) == doctest::Approx(1.0));
    CHECK(y.at(0, 10) == doctest::Approx(1.0));
    CHECK(y.at(0, 14) == doctest::Approx(1.0));
    CHECK(y.at(0, 9) == doctest::Approx(0.0));
}

TEST_CASE("non-finite activations are reported with the block index") {
    SeparatorStack s = make_stack(4, 4, 2, 2, {1, 2, 4}, 9);
    // Blow up block 2's output conv.
    s.blocks[2].out1x1.w.fill(1e308);
    s.blocks[2].dw.w.fill(1e308);
    Tensor h({4, 8}, 1.0);
    SeparatorStack::Cache cache;
    CHECK_THROWS_WITH_AS(s.forward(h, cache), doctest::Contains("block 2"), NumericError);
}

TEST_CASE("embed rejects wrong input height") {
    SeparatorStack s = make_stack(5, 4, 3, 2, {1}, 10);
    SeparatorStack::Cache cache;
    Tensor h({6, 7});
    CHECK_THROWS_AS(s.forward(h, cache), ShapeError);
}
