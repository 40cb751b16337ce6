#include "sepcount/model.hpp"

#include <algorithm>

namespace sepcount {

ModelConfig ModelConfig::paper() {
    return ModelConfig{};
}

ModelConfig ModelConfig::toy() {
    ModelConfig cfg;
    cfg.f_conv = 64;
    cfg.sep_width = 64;
    cfg.dilation_exps = 4;
    cfg.repeats = 2;
    return cfg;
}

std::vector<std::size_t> ModelConfig::dilation_schedule() const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < repeats; ++r) {
        std::size_t d = 1;
        for (std::size_t e = 0; e < dilation_exps; ++e) {
            out.push_back(d);
            d *= 2;
        }
    }
    return out;
}

CountMode count_mode_from_string(const std::string& name) {
    if (name == "oracle") return CountMode::kOracle;
    if (name == "gde") return CountMode::kGde;
    if (name == "rank") return CountMode::kRank;
    throw ConfigError("unknown count mode '" + name + "' (expected oracle, gde, or rank)");
}

std::string to_string(CountMode mode) {
    switch (mode) {
        case CountMode::kOracle: return "oracle";
        case CountMode::kGde: return "gde";
        case CountMode::kRank: return "rank";
    }
    return "?";
}

void SeparationModel::init(const ModelConfig& config, std::uint64_t seed) {
    cfg = config;
    Rng rng = make_rng(seed, "init");
    encoder.init(cfg.f_conv, rng);
    gate.init(cfg.f_total(), cfg.se_reduction, rng);
    separator.init(cfg.f_total(), cfg.sep_width, cfg.f_conv, cfg.embed_dim,
                   cfg.dilation_schedule(), rng);
    bank.init(cfg.n_centers, cfg.embed_dim, rng);
    deconv.init(cfg.f_conv, rng);
}

std::vector<ParamRef> SeparationModel::params() {
    std::vector<ParamRef> out;
    out.push_back({"encoder.kernels", &encoder.kernels, &encoder.gk});
    out.push_back({"gate.w1", &gate.w1, &gate.gw1});
    out.push_back({"gate.w2", &gate.w2, &gate.gw2});
    out.push_back({"separator.entry.w", &separator.entry.w, &separator.entry.gw});
    out.push_back({"separator.entry.b", &separator.entry.b, &separator.entry.gb});
    for (std::size_t i = 0; i < separator.blocks.size(); ++i) {
        ConvBlock& blk = separator.blocks[i];
        const std::string p = "separator.block" + std::to_string(i) + ".";
        out.push_back({p + "norm.gain", &blk.norm.gain, &blk.norm.ggain});
        out.push_back({p + "norm.bias", &blk.norm.bias, &blk.norm.gbias});
        out.push_back({p + "in1x1.w", &blk.in1x1.w, &blk.in1x1.gw});
        out.push_back({p + "in1x1.b", &blk.in1x1.b, &blk.in1x1.gb});
        out.push_back({p + "dw.w", &blk.dw.w, &blk.dw.gw});
        out.push_back({p + "out1x1.w", &blk.out1x1.w, &blk.out1x1.gw});
        out.push_back({p + "out1x1.b", &blk.out1x1.b, &blk.out1x1.gb});
    }
    out.push_back({"separator.head.w", &separator.head.w, &separator.head.gw});
    out.push_back({"separator.head.b", &separator.head.b, &separator.head.gb});
    out.push_back({"bank.centers", &bank.centers, &bank.gc});
    out.push_back({"deconv.kernels", &deconv.kernels, &deconv.gk});
    return out;
}

void SeparationModel::zero_grads() {
    zero_gradients(params());
}

std::vector<Waveform> SeparationModel::forward(const Waveform& x, std::size_t c,
                                               ForwardCache& cache) const {
    cache.input = x;
    const Tensor h_conv = encoder.forward(x, &cache.enc_pre_relu);
    const Tensor h_spec = logmag_spectrogram(frame(x));
    cache.h = fuse(h_conv, h_spec);
    cache.h_tilde = gate.forward(cache.h, cache.gate_cache);
    cache.v = separator.forward(cache.h_tilde, cache.sep_cache);
    cache.attractors = select_attractors(cache.v, c, bank, cfg.kmeans_iters);
    cache.probs = mask_probabilities(cache.v, cache.attractors.a);

    // Gated conv rows feed the decoder.
    const std::size_t f = cfg.f_conv, t = cache.h.dim(1);
    Tensor h_tilde_conv({f, t});
    for (std::size_t ch = 0; ch < f; ++ch) {
        for (std::size_t tt = 0; tt < t; ++tt) h_tilde_conv.at(ch, tt) = cache.h_tilde.at(ch, tt);
    }

    cache.masked.clear();
    std::vector<Waveform> estimates;
    for (std::size_t i = 0; i < c; ++i) {
        Tensor masked({f, t});
        for (std::size_t ch = 0; ch < f; ++ch) {
            for (std::size_t tt = 0; tt < t; ++tt) {
                masked.at(ch, tt) = cache.probs.at(tt * f + ch, i) * h_tilde_conv.at(ch, tt);
            }
        }
        Waveform est = deconv.forward(masked);
        cache.raw_len = est.size();
        est.resize(x.size(), 0.0);  // raw length never exceeds the input length
        estimates.push_back(std::move(est));
        cache.masked.push_back(std::move(masked));
    }
    return estimates;
}

void SeparationModel::backward(ForwardCache& cache,
                               const std::vector<std::vector<double>>& grad_estimates) {
    const std::size_t c = cache.masked.size();
    if (grad_estimates.size() != c) {
        throw ShapeError("model backward: gradient count mismatch");
    }
    const std::size_t f = cfg.f_conv, t = cache.h.dim(1);
    const std::size_t n = cache.v.dim(0);

    Tensor g_probs({n, c});
    Tensor g_h_tilde_conv({f, t});
    for (std::size_t i = 0; i < c; ++i) {
        // Undo the tail padding: the decoder produced raw_len samples.
        std::vector<double> g_est(grad_estimates[i].begin(),
                                  grad_estimates[i].begin() +
                                      static_cast<std::ptrdiff_t>(cache.raw_len));
        const Tensor g_masked = deconv.backward(cache.masked[i], g_est);
        for (std::size_t ch = 0; ch < f; ++ch) {
            for (std::size_t tt = 0; tt < t; ++tt) {
                const double g = g_masked.at(ch, tt);
                const double prob = cache.probs.at(tt * f + ch, i);
                const double feat = cache.h_tilde.at(ch, tt);
                g_probs.at(tt * f + ch, i) += g * feat;
                g_h_tilde_conv.at(ch, tt) += g * prob;
            }
        }
    }

    // Softmax over sources, then the bilinear logits V·Aᵀ.
    const Tensor g_logits = softmax_backward(cache.probs, g_probs, 1);
    Tensor g_v = matmul(g_logits, cache.attractors.a);                 // N×L
    const Tensor g_a = matmul(transpose(g_logits), cache.v);           // C×L
    attractor_backward(cache.attractors, g_a, g_v, bank);

    Tensor g_h_tilde = separator.backward(cache.sep_cache, g_v);
    for (std::size_t ch = 0; ch < f; ++ch) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            g_h_tilde.at(ch, tt) += g_h_tilde_conv.at(ch, tt);
        }
    }
    const Tensor g_h = gate.backward(cache.gate_cache, g_h_tilde);

    // Spectrogram rows carry no parameters; only the conv rows propagate.
    Tensor g_h_conv({f, t});
    for (std::size_t ch = 0; ch < f; ++ch) {
        for (std::size_t tt = 0; tt < t; ++tt) g_h_conv.at(ch, tt) = g_h.at(ch, tt);
    }
    encoder.backward(cache.input, cache.enc_pre_relu, g_h_conv);
}

Tensor SeparationModel::embeddings(const Waveform& x) const {
    Tensor pre;
    const Tensor h_conv = encoder.forward(x, &pre);
    const Tensor h_spec = logmag_spectrogram(frame(x));
    const Tensor h = fuse(h_conv, h_spec);
    SEGate::Cache gate_cache;
    const Tensor h_tilde = gate.forward(h, gate_cache);
    SeparatorStack::Cache sep_cache;
    return separator.forward(h_tilde, sep_cache);
}

SeparateResult SeparationModel::separate(const Waveform& x, std::optional<std::size_t> forced_c,
                                         CountMode mode) const {
    SeparateResult result;
    std::size_t c;
    if (forced_c.has_value()) {
        c = *forced_c;
        if (c < 1 || c > cfg.n_centers) {
            throw ConfigError("separate: forced speaker count " + std::to_string(c) +
                              " outside [1, K=" + std::to_string(cfg.n_centers) + "]");
        }
    } else {
        const Tensor v = embeddings(x);
        if (mode == CountMode::kRank) {
            c = rank_count(v, cfg.rank_threshold);
        } else {
            GdeResult gde = gde_count_auto(v, cfg.gde_coeff);
            result.saturation_warning = gde.saturated;
            c = gde.estimate;
            result.gde = std::move(gde);
        }
        if (c == 0) {
            throw NumericError("separate: counting estimated zero sources");
        }
        c = std::min(c, cfg.n_centers);  // attractor capacity cap
    }
    result.estimated_c = c;
    ForwardCache cache;
    result.estimates = forward(x, c, cache);
    return result;
}

}  // namespace sepcount
