#pragma once

#include <vector>

#include "sepcount/dsp.hpp"
#include "sepcount/layers.hpp"

namespace sepcount {

// Transposed convolution back to waveform: each feature column emits a
// 20-sample segment through the synthesis kernels, segments overlap-add at
// the hop. Weights are independent of the analysis basis.
struct Deconv {
    Tensor kernels;  // f_conv×20
    Tensor gk;

    void init(std::size_t f_conv, Rng& rng);
    // masked: f_conv×T -> waveform of length (T−1)·10 + 20.
    Waveform forward(const Tensor& masked) const;
    // Accumulates kernel gradients, returns the gradient w.r.t. masked.
    Tensor backward(const Tensor& masked, const std::vector<double>& grad_out);
};

// masked_i = M_i ⊙ feat for one source mask (F×T slices of the C×F×T tensor).
Tensor apply_mask(const Tensor& masks, std::size_t source, const Tensor& feat);

constexpr double kSiSnrEps = 1e-8;

// 10·log10( ⟨s,ŝ⟩² / (‖s‖²‖ŝ‖² − ⟨s,ŝ⟩² + ε) + ε ). Scale invariant in ŝ.
double si_snr(const Waveform& reference, const Waveform& estimate);

// Gradient of si_snr (in dB) w.r.t. the estimate.
std::vector<double> si_snr_grad(const Waveform& reference, const Waveform& estimate,
                                double* value = nullptr);

struct LossReport {
    double loss = 0.0;                     // mean over sources of −si_snr
    std::vector<std::size_t> permutation;  // estimate i pairs with sources[permutation[i]]
    std::vector<double> per_source_si_snr;
};

// Exhaustive permutation search (C ≤ 4).
LossReport pit_loss(const std::vector<Waveform>& sources,
                    const std::vector<Waveform>& estimates);

// Gradients of the PIT loss w.r.t. each estimate, under the chosen
// permutation. Fills `report` if non-null.
std::vector<std::vector<double>> pit_loss_grad(const std::vector<Waveform>& sources,
                                               const std::vector<Waveform>& estimates,
                                               LossReport* report = nullptr);

}  // namespace sepcount
