#include "sepcount/dsp.hpp"

#include <cmath>
#include <numbers>

namespace sepcount {

std::vector<double> sqrt_hann(std::size_t n) {
    if (n % 2 != 0) {
        throw ConfigError("sqrt_hann: window length must be even, got " + std::to_string(n));
    }
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                                 static_cast<double>(k) / static_cast<double>(n));
        w[k] = std::sqrt(std::max(0.0, hann));
    }
    return w;
}

std::size_t num_frames(std::size_t len) {
    if (len < kWindowLen) {
        throw ShapeError("frame: input length " + std::to_string(len) +
                         " below minimum of " + std::to_string(kWindowLen) + " samples");
    }
    return (len - kWindowLen) / kHop + 1;
}

Tensor frame(const Waveform& x) {
    const std::size_t t = num_frames(x.size());
    const std::vector<double> w = sqrt_hann();
    Tensor frames({t, kWindowLen});
    for (std::size_t i = 0; i < t; ++i) {
        const std::size_t start = i * kHop;
        for (std::size_t k = 0; k < kWindowLen; ++k) {
            frames.at(i, k) = x[start + k] * w[k];
        }
    }
    return frames;
}

Tensor logmag_spectrogram(const Tensor& frames) {
    if (frames.rank() != 2 || frames.dim(1) != kWindowLen) {
        throw ShapeError("logmag_spectrogram: expects T x 20 frames, got " +
                         shape_string(frames.shape()));
    }
    const std::size_t t = frames.dim(0);
    const std::size_t n = kWindowLen;
    Tensor spec({t, kSpecBins});
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t bin = 0; bin < kSpecBins; ++bin) {
            double re = 0.0, im = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double phase = -2.0 * std::numbers::pi * static_cast<double>(bin * k) /
                                     static_cast<double>(n);
                re += frames.at(i, k) * std::cos(phase);
                im += frames.at(i, k) * std::sin(phase);
            }
            spec.at(i, bin) = std::log(std::sqrt(re * re + im * im) + kLogFloor);
        }
    }
    return spec;
}

Waveform overlap_add(const Tensor& frames) {
    if (frames.rank() != 2 || frames.dim(1) != kWindowLen) {
        throw ShapeError("overlap_add: expects T x 20 frames, got " +
                         shape_string(frames.shape()));
    }
    const std::size_t t = frames.dim(0);
    const std::vector<double> w = sqrt_hann();
    Waveform out((t - 1) * kHop + kWindowLen, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        const std::size_t start = i * kHop;
        for (std::size_t k = 0; k < kWindowLen; ++k) {
            out[start + k] += frames.at(i, k) * w[k];
        }
    }
    return out;
}

}  // namespace sepcount
