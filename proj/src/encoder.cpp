#include "sepcount/encoder.hpp"

#include <cmath>

namespace sepcount {

void ConvEncoder::init(std::size_t f_conv, Rng& rng) {
    kernels = Tensor({f_conv, kWindowLen});
    fill_uniform(kernels, rng, 1.0 / std::sqrt(static_cast<double>(kWindowLen)));
    gk = zeros_like(kernels);
}

Tensor ConvEncoder::forward(const Waveform& x, Tensor* pre_relu) const {
    const std::size_t t = num_frames(x.size());
    const std::size_t f = kernels.dim(0);
    Tensor lin({f, t});
    for (std::size_t ch = 0; ch < f; ++ch) {
        const double* w = kernels.data() + ch * kWindowLen;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double* seg = x.data() + tt * kHop;
            double acc = 0.0;
            for (std::size_t k = 0; k < kWindowLen; ++k) acc += w[k] * seg[k];
            lin.at(ch, tt) = acc;
        }
    }
    Tensor out = relu(lin);
    if (pre_relu) *pre_relu = std::move(lin);
    return out;
}

void ConvEncoder::backward(const Waveform& x, const Tensor& pre_relu, const Tensor& upstream) {
    const Tensor g = relu_backward(pre_relu, upstream);
    const std::size_t f = kernels.dim(0), t = g.dim(1);
    for (std::size_t ch = 0; ch < f; ++ch) {
        double* gw = gk.data() + ch * kWindowLen;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double u = g.at(ch, tt);
            if (u == 0.0) continue;
            const double* seg = x.data() + tt * kHop;
            for (std::size_t k = 0; k < kWindowLen; ++k) gw[k] += u * seg[k];
        }
    }
}

Tensor fuse(const Tensor& h_conv, const Tensor& h_spec) {
    if (h_conv.rank() != 2 || h_spec.rank() != 2) {
        throw ShapeError("fuse: expects 2-D inputs");
    }
    if (h_conv.dim(1) != h_spec.dim(0)) {
        throw ShapeError("fuse: frame counts differ, conv T=" + std::to_string(h_conv.dim(1)) +
                         " spec T=" + std::to_string(h_spec.dim(0)));
    }
    const std::size_t fc = h_conv.dim(0), fs = h_spec.dim(1), t = h_conv.dim(1);
    Tensor h({fc + fs, t});
    for (std::size_t f = 0; f < fc; ++f) {
        for (std::size_t tt = 0; tt < t; ++tt) h.at(f, tt) = h_conv.at(f, tt);
    }
    for (std::size_t f = 0; f < fs; ++f) {
        for (std::size_t tt = 0; tt < t; ++tt) h.at(fc + f, tt) = h_spec.at(tt, f);
    }
    return h;
}

std::vector<double> squeeze(const Tensor& h) {
    const Tensor z = mean(h, 1);
    return std::vector<double>(z.data(), z.data() + z.size());
}

std::vector<double> excite(const std::vector<double>& z, const Tensor& w1, const Tensor& w2) {
    if (w1.dim(1) != z.size() || w2.dim(1) != w1.dim(0) || w2.dim(0) != z.size()) {
        throw ShapeError("excite: gate weight shapes inconsistent with feature size " +
                         std::to_string(z.size()));
    }
    const std::size_t hidden = w1.dim(0), f = z.size();
    std::vector<double> h(hidden, 0.0);
    for (std::size_t i = 0; i < hidden; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < f; ++j) acc += w1.at(i, j) * z[j];
        h[i] = std::max(0.0, acc);
    }
    std::vector<double> u(f, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < hidden; ++j) acc += w2.at(i, j) * h[j];
        u[i] = 1.0 / (1.0 + std::exp(-acc));
    }
    return u;
}

Tensor scale(const Tensor& h, const std::vector<double>& u) {
    if (h.dim(0) != u.size()) {
        throw ShapeError("scale: gate length " + std::to_string(u.size()) +
                         " != channel count " + std::to_string(h.dim(0)));
    }
    Tensor y = h;
    const std::size_t f = h.dim(0), t = h.dim(1);
    for (std::size_t ch = 0; ch < f; ++ch) {
        double* row = y.data() + ch * t;
        for (std::size_t tt = 0; tt < t; ++tt) row[tt] *= u[ch];
    }
    return y;
}

void SEGate::init(std::size_t f, std::size_t reduction, Rng& rng) {
    const std::size_t hidden = f / reduction;
    if (hidden == 0) throw ConfigError("SEGate: reduction ratio leaves no hidden units");
    w1 = Tensor({hidden, f});
    w2 = Tensor({f, hidden});
    fill_uniform(w1, rng, 1.0 / std::sqrt(static_cast<double>(f)));
    fill_uniform(w2, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    gw1 = zeros_like(w1);
    gw2 = zeros_like(w2);
}

Tensor SEGate::forward(const Tensor& h, Cache& cache) const {
    cache.h = h;
    cache.z = squeeze(h);
    const std::size_t hidden = w1.dim(0), f = cache.z.size();
    cache.pre_act.assign(hidden, 0.0);
    cache.hidden.assign(hidden, 0.0);
    for (std::size_t i = 0; i < hidden; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < f; ++j) acc += w1.at(i, j) * cache.z[j];
        cache.pre_act[i] = acc;
        cache.hidden[i] = std::max(0.0, acc);
    }
    cache.u.assign(f, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < hidden; ++j) acc += w2.at(i, j) * cache.hidden[j];
        cache.u[i] = 1.0 / (1.0 + std::exp(-acc));
    }
    return scale(h, cache.u);
}

Tensor SEGate::backward(const Cache& cache, const Tensor& upstream) {
    const std::size_t f = cache.u.size();
    const std::size_t t = cache.h.dim(1);
    const std::size_t hidden = w1.dim(0);

    // Through the rescale: gradient w.r.t. u and the pass-through to H.
    std::vector<double> gu(f, 0.0);
    Tensor gh({f, t});
    for (std::size_t ch = 0; ch < f; ++ch) {
        double acc = 0.0;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double up = upstream.at(ch, tt);
            acc += up * cache.h.at(ch, tt);
            gh.at(ch, tt) = cache.u[ch] * up;
        }
        gu[ch] = acc;
    }
    // Sigmoid.
    std::vector<double> ga(f);
    for (std::size_t i = 0; i < f; ++i) ga[i] = gu[i] * cache.u[i] * (1.0 - cache.u[i]);
    // W2.
    std::vector<double> ghid(hidden, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = 0; j < hidden; ++j) {
            gw2.at(i, j) += ga[i] * cache.hidden[j];
            ghid[j] += w2.at(i, j) * ga[i];
        }
    }
    // ReLU + W1.
    std::vector<double> gz(f, 0.0);
    for (std::size_t i = 0; i < hidden; ++i) {
        const double g = cache.pre_act[i] > 0.0 ? ghid[i] : 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            gw1.at(i, j) += g * cache.z[j];
            gz[j] += w1.at(i, j) * g;
        }
    }
    // Squeeze (time mean).
    const double inv_t = 1.0 / static_cast<double>(t);
    for (std::size_t ch = 0; ch < f; ++ch) {
        const double add = gz[ch] * inv_t;
        for (std::size_t tt = 0; tt < t; ++tt) gh.at(ch, tt) += add;
    }
    return gh;
}

}  // namespace sepcount
