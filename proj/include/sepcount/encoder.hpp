#pragma once

#include <vector>

#include "sepcount/dsp.hpp"
#include "sepcount/layers.hpp"

namespace sepcount {

// Learned analysis basis: f_conv kernels of one window length, advanced at
// the frame hop, ReLU at the output so the feature behaves like a magnitude
// representation.
struct ConvEncoder {
    Tensor kernels;  // f_conv×20
    Tensor gk;

    void init(std::size_t f_conv, Rng& rng);
    std::size_t f_conv() const { return kernels.dim(0); }

    // Returns f_conv×T with T = num_frames(len(x)); pre_relu receives the
    // linear output needed by backward.
    Tensor forward(const Waveform& x, Tensor* pre_relu = nullptr) const;
    void backward(const Waveform& x, const Tensor& pre_relu, const Tensor& upstream);
};

// Row-wise concatenation: conv rows first, spectrogram rows (transposed to
// 11×T) below them.
Tensor fuse(const Tensor& h_conv, const Tensor& h_spec);

// Per-channel time average of an F×T map (Fsq).
std::vector<double> squeeze(const Tensor& h);

// Bottleneck gate u = sigmoid(W2 · relu(W1 · z)); no bias terms (Fex).
std::vector<double> excite(const std::vector<double>& z, const Tensor& w1, const Tensor& w2);

// Row-wise rescale H̃_f = u_f · H_f (Fscale).
Tensor scale(const Tensor& h, const std::vector<double>& u);

// Squeeze-and-excitation gate over the fused map.
struct SEGate {
    Tensor w1;  // hidden×F
    Tensor w2;  // F×hidden
    Tensor gw1, gw2;

    struct Cache {
        Tensor h;  // gate input
        std::vector<double> z, pre_act, hidden, u;
    };

    void init(std::size_t f, std::size_t reduction, Rng& rng);
    Tensor forward(const Tensor& h, Cache& cache) const;
    // Accumulates gw1/gw2, returns the gradient w.r.t. the gate input.
    Tensor backward(const Cache& cache, const Tensor& upstream);
};

}  // namespace sepcount
