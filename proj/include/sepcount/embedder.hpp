#pragma once

#include <vector>

#include "sepcount/layers.hpp"

namespace sepcount {

// One residual unit: gLN on the block input, then
// 1×1 conv → ReLU → dilated depthwise conv (k=3) → ReLU → 1×1 conv,
// with an additive skip from the block input. Temporal shape is preserved.
struct ConvBlock {
    GlobalLayerNorm norm;
    PointwiseConv in1x1, out1x1;
    DepthwiseConv dw;

    struct Cache {
        GlobalLayerNorm::Cache norm_cache;
        Tensor normed, pre1, act1, dwout, act2;
    };

    void init(std::size_t width, std::size_t dilation, Rng& rng);
    Tensor forward(const Tensor& x, Cache& cache, std::size_t block_index) const;
    Tensor backward(const Cache& cache, const Tensor& upstream);
};

// Bottleneck entry, the dilated residual stack, and the embedding head.
// Maps the gated F×T feature map to per-(frame, conv-channel) embeddings.
struct SeparatorStack {
    PointwiseConv entry;                // f_in → width
    std::vector<ConvBlock> blocks;      // dilations 1,2,4,... repeated
    PointwiseConv head;                 // width → f_conv·embed_dim
    std::size_t f_conv = 0;
    std::size_t embed_dim = 0;

    struct Cache {
        Tensor h_in;
        Tensor entry_out;
        std::vector<Tensor> block_in;   // input to each block
        std::vector<ConvBlock::Cache> block_cache;
        Tensor head_in;
    };

    // dilations: full schedule, e.g. [1,2,...,128] repeated 4 times.
    void init(std::size_t f_in, std::size_t width, std::size_t f_conv_channels,
              std::size_t embed, const std::vector<std::size_t>& dilations, Rng& rng);

    // V is N×L with row n = t·f_conv + f.
    Tensor forward(const Tensor& h_tilde, Cache& cache) const;
    Tensor backward(Cache& cache, const Tensor& grad_v);
};

}  // namespace sepcount
