#pragma once

#include <vector>

#include "sepcount/tensor.hpp"

namespace sepcount {

// All audio in this project is mono at 8 kHz.
using Waveform = std::vector<double>;

constexpr std::size_t kSampleRate = 8000;
constexpr std::size_t kWindowLen = 20;  // 2.5 ms
constexpr std::size_t kHop = 10;        // 50 % overlap, exact COLA for sqrt-Hann
constexpr std::size_t kSpecBins = 11;   // unique bins of a 20-point real DFT
constexpr double kLogFloor = 1e-8;

// Periodic (DFT-even) square-root Hann: w[k] = sqrt(0.5 - 0.5 cos(2πk/n)).
// With hop n/2 the squared window sums to one at every interior sample.
std::vector<double> sqrt_hann(std::size_t n = kWindowLen);

// Number of analysis frames for a signal of the given length; throws on
// inputs shorter than one window.
std::size_t num_frames(std::size_t len);

// T×20 matrix of windowed frames, frame t covering samples [10t, 10t+20).
Tensor frame(const Waveform& x);

// T×11 log-magnitude of the 20-point real DFT per frame: log(|X_k| + ε).
Tensor logmag_spectrogram(const Tensor& frames);

// Windowed overlap-add; output length (T−1)·10 + 20. Edge samples outside
// full COLA coverage are left as summed (callers trim 10 per side when they
// need exactness).
Waveform overlap_add(const Tensor& frames);

}  // namespace sepcount
