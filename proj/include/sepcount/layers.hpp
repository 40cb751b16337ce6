#pragma once

#include <cstddef>

#include "sepcount/rng.hpp"
#include "sepcount/tensor.hpp"

namespace sepcount {

// ---------------------------------------------------------------------------
// Stateless ops. Forward functions are pure; each backward takes whatever the
// matching forward needed (input or output) plus the upstream gradient.
// ---------------------------------------------------------------------------

struct Conv1dSpec {
    std::size_t stride = 1;
    std::size_t dilation = 1;
    std::size_t pad = 0;
};

// input: in×T, kernels: out×in×k, cross-correlation semantics.
// Output length T' = floor((T + 2·pad − dilation·(k−1) − 1)/stride) + 1.
Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Conv1dSpec& spec);
void conv1d_backward(const Tensor& input, const Tensor& kernels, const Conv1dSpec& spec,
                     const Tensor& upstream, Tensor& grad_input, Tensor& grad_kernels);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

Tensor sigmoid(const Tensor& x);
// Takes the forward *output*.
Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream);

// 2-D softmax / mean along a named axis (0 = down columns, 1 = along rows).
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor softmax_backward(const Tensor& probs, const Tensor& upstream, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);
Tensor mean_backward(const Tensor& x, const Tensor& upstream, std::size_t axis);

Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& upstream,
                     Tensor& grad_a, Tensor& grad_b);
Tensor transpose(const Tensor& a);

// ---------------------------------------------------------------------------
// Parametric layers. Each owns its parameters and gradient accumulators;
// backward() accumulates into the latter and returns the input gradient.
// ---------------------------------------------------------------------------

// 1×1 convolution over an in×T map: y = W·x + b.
struct PointwiseConv {
    Tensor w;  // out×in
    Tensor b;  // out
    Tensor gw, gb;

    void init(std::size_t out, std::size_t in, Rng& rng);
    void init_zero(std::size_t out, std::size_t in);
    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& x, const Tensor& upstream);
};

// Depthwise dilated conv, kernel width k, "same" zero padding (odd k).
struct DepthwiseConv {
    Tensor w;  // channels×k
    Tensor gw;
    std::size_t dilation = 1;

    void init(std::size_t channels, std::size_t k, std::size_t dil, Rng& rng);
    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& x, const Tensor& upstream);
};

// Layer normalization over all (channel, time) elements of a C×T map, with
// per-channel gain and offset.
struct GlobalLayerNorm {
    Tensor gain, bias;  // C
    Tensor ggain, gbias;
    double eps = 1e-8;

    struct Cache {
        double inv_std = 0.0;
        Tensor xhat;
    };

    void init(std::size_t channels);
    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Cache& cache, const Tensor& upstream);
};

}  // namespace sepcount
