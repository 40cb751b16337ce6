#include "sepcount/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sepcount {

void Deconv::init(std::size_t f_conv, Rng& rng) {
    kernels = Tensor({f_conv, kWindowLen});
    fill_uniform(kernels, rng, 1.0 / std::sqrt(static_cast<double>(f_conv)));
    gk = zeros_like(kernels);
}

Waveform Deconv::forward(const Tensor& masked) const {
    if (masked.rank() != 2 || masked.dim(0) != kernels.dim(0)) {
        throw ShapeError("deconv: feature map shape " + shape_string(masked.shape()) +
                         " does not match " + std::to_string(kernels.dim(0)) + " kernels");
    }
    const std::size_t f = masked.dim(0), t = masked.dim(1);
    Waveform out((t - 1) * kHop + kWindowLen, 0.0);
    for (std::size_t ch = 0; ch < f; ++ch) {
        const double* w = kernels.data() + ch * kWindowLen;
        const double* feat = masked.data() + ch * t;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double a = feat[tt];
            if (a == 0.0) continue;
            double* seg = out.data() + tt * kHop;
            for (std::size_t k = 0; k < kWindowLen; ++k) seg[k] += a * w[k];
        }
    }
    return out;
}

Tensor Deconv::backward(const Tensor& masked, const std::vector<double>& grad_out) {
    const std::size_t f = masked.dim(0), t = masked.dim(1);
    if (grad_out.size() != (t - 1) * kHop + kWindowLen) {
        throw ShapeError("deconv backward: upstream length mismatch");
    }
    Tensor gm({f, t});
    for (std::size_t ch = 0; ch < f; ++ch) {
        double* gw = gk.data() + ch * kWindowLen;
        const double* w = kernels.data() + ch * kWindowLen;
        const double* feat = masked.data() + ch * t;
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double* gseg = grad_out.data() + tt * kHop;
            double acc = 0.0;
            for (std::size_t k = 0; k < kWindowLen; ++k) {
                acc += gseg[k] * w[k];
                gw[k] += gseg[k] * feat[tt];
            }
            gm.at(ch, tt) = acc;
        }
    }
    return gm;
}

Tensor apply_mask(const Tensor& masks, std::size_t source, const Tensor& feat) {
    if (masks.rank() != 3 || masks.dim(1) != feat.dim(0) || masks.dim(2) != feat.dim(1)) {
        throw ShapeError("apply_mask: mask shape " + shape_string(masks.shape()) +
                         " incompatible with features " + shape_string(feat.shape()));
    }
    const std::size_t f = feat.dim(0), t = feat.dim(1);
    Tensor out({f, t});
    const double* m = masks.data() + source * f * t;
    for (std::size_t i = 0; i < f * t; ++i) out[i] = m[i] * feat.data()[i];
    return out;
}

namespace {

struct SiSnrParts {
    double dot, ref_pow, est_pow, denom, ratio;
};

SiSnrParts si_snr_parts(const Waveform& s, const Waveform& e) {
    if (s.size() != e.size() || s.empty()) {
        throw ShapeError("si_snr: signals must have equal nonzero length");
    }
    SiSnrParts p{};
    for (std::size_t i = 0; i < s.size(); ++i) {
        p.dot += s[i] * e[i];
        p.ref_pow += s[i] * s[i];
        p.est_pow += e[i] * e[i];
    }
    if (p.ref_pow == 0.0) {
        throw NumericError("si_snr: all-zero reference signal");
    }
    p.denom = p.ref_pow * p.est_pow - p.dot * p.dot + kSiSnrEps;
    p.ratio = p.dot * p.dot / p.denom + kSiSnrEps;
    return p;
}

}  // namespace

double si_snr(const Waveform& reference, const Waveform& estimate) {
    return 10.0 * std::log10(si_snr_parts(reference, estimate).ratio);
}

std::vector<double> si_snr_grad(const Waveform& reference, const Waveform& estimate,
                                double* value) {
    const SiSnrParts p = si_snr_parts(reference, estimate);
    if (value) *value = 10.0 * std::log10(p.ratio);
    // d ratio / d e = [2a·s·D − a²·(2b·e − 2a·s)] / D², a=dot, b=ref_pow, D=denom
    const double common = 10.0 / (std::log(10.0) * p.ratio);
    const double inv_d2 = 1.0 / (p.denom * p.denom);
    std::vector<double> g(estimate.size());
    const double cs = (2.0 * p.dot * p.denom + 2.0 * p.dot * p.dot * p.dot) * inv_d2;
    const double ce = -p.dot * p.dot * 2.0 * p.ref_pow * inv_d2;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        g[i] = common * (cs * reference[i] + ce * estimate[i]);
    }
    return g;
}

namespace {

void check_pit_inputs(const std::vector<Waveform>& sources,
                      const std::vector<Waveform>& estimates) {
    if (sources.size() != estimates.size() || sources.empty()) {
        throw ShapeError("pit_loss: source count " + std::to_string(sources.size()) +
                         " != estimate count " + std::to_string(estimates.size()));
    }
    if (sources.size() > 4) {
        throw ConfigError("pit_loss: factorial enumeration capped at 4 sources");
    }
}

}  // namespace

LossReport pit_loss(const std::vector<Waveform>& sources,
                    const std::vector<Waveform>& estimates) {
    check_pit_inputs(sources, estimates);
    const std::size_t c = sources.size();
    std::vector<std::size_t> perm(c);
    std::iota(perm.begin(), perm.end(), 0);

    LossReport best;
    best.loss = std::numeric_limits<double>::infinity();
    do {
        double loss = 0.0;
        std::vector<double> snrs(c);
        for (std::size_t i = 0; i < c; ++i) {
            snrs[i] = si_snr(sources[perm[i]], estimates[i]);
            loss -= snrs[i];
        }
        loss /= static_cast<double>(c);
        if (loss < best.loss) {
            best.loss = loss;
            best.permutation = perm;
            best.per_source_si_snr = snrs;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<std::vector<double>> pit_loss_grad(const std::vector<Waveform>& sources,
                                               const std::vector<Waveform>& estimates,
                                               LossReport* report) {
    LossReport rep = pit_loss(sources, estimates);
    const std::size_t c = sources.size();
    std::vector<std::vector<double>> grads(c);
    const double scale = -1.0 / static_cast<double>(c);
    for (std::size_t i = 0; i < c; ++i) {
        grads[i] = si_snr_grad(sources[rep.permutation[i]], estimates[i]);
        for (double& g : grads[i]) g *= scale;
    }
    if (report) *report = std::move(rep);
    return grads;
}

}  // namespace sepcount
