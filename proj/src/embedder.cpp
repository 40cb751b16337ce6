#include "sepcount/embedder.hpp"

namespace sepcount {

void ConvBlock::init(std::size_t width, std::size_t dilation, Rng& rng) {
    norm.init(width);
    in1x1.init(width, width, rng);
    dw.init(width, 3, dilation, rng);
    out1x1.init(width, width, rng);
}

Tensor ConvBlock::forward(const Tensor& x, Cache& cache, std::size_t block_index) const {
    cache.normed = norm.forward(x, cache.norm_cache);
    cache.pre1 = in1x1.forward(cache.normed);
    cache.act1 = relu(cache.pre1);
    cache.dwout = dw.forward(cache.act1);
    cache.act2 = relu(cache.dwout);
    Tensor y = out1x1.forward(cache.act2);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
    if (!y.all_finite()) {
        throw NumericError("non-finite activation in residual block " +
                           std::to_string(block_index));
    }
    return y;
}

Tensor ConvBlock::backward(const Cache& cache, const Tensor& upstream) {
    Tensor g = out1x1.backward(cache.act2, upstream);
    g = relu_backward(cache.dwout, g);
    g = dw.backward(cache.act1, g);
    g = relu_backward(cache.pre1, g);
    g = in1x1.backward(cache.normed, g);
    g = norm.backward(cache.norm_cache, g);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += upstream[i];  // skip path
    return g;
}

void SeparatorStack::init(std::size_t f_in, std::size_t width, std::size_t f_conv_channels,
                          std::size_t embed, const std::vector<std::size_t>& dilations,
                          Rng& rng) {
    f_conv = f_conv_channels;
    embed_dim = embed;
    entry.init(width, f_in, rng);
    blocks.clear();
    blocks.resize(dilations.size());
    for (std::size_t i = 0; i < dilations.size(); ++i) {
        blocks[i].init(width, dilations[i], rng);
    }
    head.init(f_conv * embed_dim, width, rng);
    // Small-scale head init: embedding dimensions only receive gradient through
    // the attractor similarities, so directions never visited by training keep
    // their initial magnitude. Starting the head near zero keeps that residual
    // subspace negligible in the embedding covariance, which the source counter
    // depends on.
    for (std::size_t i = 0; i < head.w.size(); ++i) head.w[i] *= 0.05;
    for (std::size_t i = 0; i < head.b.size(); ++i) head.b[i] *= 0.05;
}

Tensor SeparatorStack::forward(const Tensor& h_tilde, Cache& cache) const {
    cache.h_in = h_tilde;
    cache.entry_out = entry.forward(h_tilde);
    cache.block_in.resize(blocks.size());
    cache.block_cache.assign(blocks.size(), ConvBlock::Cache{});
    Tensor x = cache.entry_out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        cache.block_in[i] = x;
        x = blocks[i].forward(x, cache.block_cache[i], i);
    }
    cache.head_in = std::move(x);
    const Tensor out = head.forward(cache.head_in);  // (f_conv·L)×T

    const std::size_t t = out.dim(1);
    Tensor v({t * f_conv, embed_dim});
    for (std::size_t tt = 0; tt < t; ++tt) {
        for (std::size_t f = 0; f < f_conv; ++f) {
            const std::size_t n = tt * f_conv + f;
            for (std::size_t l = 0; l < embed_dim; ++l) {
                v.at(n, l) = out.at(f * embed_dim + l, tt);
            }
        }
    }
    return v;
}

Tensor SeparatorStack::backward(Cache& cache, const Tensor& grad_v) {
    const std::size_t t = cache.head_in.dim(1);
    Tensor g_out({f_conv * embed_dim, t});
    for (std::size_t tt = 0; tt < t; ++tt) {
        for (std::size_t f = 0; f < f_conv; ++f) {
            const std::size_t n = tt * f_conv + f;
            for (std::size_t l = 0; l < embed_dim; ++l) {
                g_out.at(f * embed_dim + l, tt) = grad_v.at(n, l);
            }
        }
    }
    Tensor g = head.backward(cache.head_in, g_out);
    for (std::size_t i = blocks.size(); i-- > 0;) {
        g = blocks[i].backward(cache.block_cache[i], g);
    }
    return entry.backward(cache.h_in, g);
}

}  // namespace sepcount
