#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sepcount/adam.hpp"
#include "sepcount/attractor.hpp"
#include "sepcount/counter.hpp"
#include "sepcount/decoder.hpp"
#include "sepcount/embedder.hpp"
#include "sepcount/encoder.hpp"

namespace sepcount {

struct ModelConfig {
    std::size_t f_conv = 256;
    std::size_t se_reduction = 16;
    std::size_t sep_width = 256;
    std::size_t dilation_exps = 8;   // dilations 1, 2, ..., 2^(exps−1)
    std::size_t repeats = 4;
    std::size_t embed_dim = 20;
    std::size_t n_centers = 4;
    std::size_t kmeans_iters = 1;
    double gde_coeff = kGdeFactorCoeff;
    double rank_threshold = kRankThresholdDefault;

    // Full-width configuration: 256 conv channels, dilations 1..128 ×4.
    static ModelConfig paper();
    // Desk-scale preset: 64 conv channels, dilations 1..8 ×2; embedding
    // dimension and center count unchanged.
    static ModelConfig toy();

    std::vector<std::size_t> dilation_schedule() const;
    std::size_t f_total() const { return f_conv + kSpecBins; }
};

enum class CountMode { kOracle, kGde, kRank };

CountMode count_mode_from_string(const std::string& name);
std::string to_string(CountMode mode);

struct SeparateResult {
    std::vector<Waveform> estimates;
    std::size_t estimated_c = 0;
    std::optional<GdeResult> gde;        // populated in GDE mode
    bool saturation_warning = false;
};

class SeparationModel {
public:
    ModelConfig cfg;
    ConvEncoder encoder;
    SEGate gate;
    SeparatorStack separator;
    CenterBank bank;
    Deconv deconv;

    void init(const ModelConfig& config, std::uint64_t seed);
    std::vector<ParamRef> params();

    // Everything backward needs, kept per utterance.
    struct ForwardCache {
        Waveform input;
        Tensor enc_pre_relu;
        Tensor h;        // fused 267×T
        SEGate::Cache gate_cache;
        Tensor h_tilde;  // gated map
        SeparatorStack::Cache sep_cache;
        Tensor v;        // N×L embeddings
        AttractorSet attractors;
        Tensor probs;    // N×C mask probabilities
        std::vector<Tensor> masked;  // per source f_conv×T
        std::size_t raw_len = 0;     // decoder output length before padding
    };

    // Training-style forward with known C; estimates are trimmed/padded to
    // the input length.
    std::vector<Waveform> forward(const Waveform& x, std::size_t c, ForwardCache& cache) const;

    // Backward pass from per-estimate waveform gradients; accumulates into
    // all parameter gradient buffers.
    void backward(ForwardCache& cache, const std::vector<std::vector<double>>& grad_estimates);

    void zero_grads();

    // Embeddings only (for counting).
    Tensor embeddings(const Waveform& x) const;

    // Full inference: count (unless C is forced), pick attractors, decode.
    SeparateResult separate(const Waveform& x, std::optional<std::size_t> forced_c,
                            CountMode mode = CountMode::kGde) const;
};

}  // namespace sepcount
