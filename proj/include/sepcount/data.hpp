#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sepcount/dsp.hpp"
#include "sepcount/rng.hpp"

namespace sepcount {

// Mono 16-bit PCM at 8 kHz; anything else is a FormatError naming the field.
Waveform wav_read(const std::filesystem::path& path);
void wav_write(const std::filesystem::path& path, const Waveform& w);

// Synthetic harmonic "speaker": a fixed random spectral identity standing in
// for a real corpus speaker. Deterministic from (seed, id).
struct SpeakerProfile {
    std::uint32_t id = 0;
    double f0_lo = 0.0, f0_hi = 0.0;           // fundamental range, Hz
    std::vector<double> harmonic_env;          // per-harmonic amplitudes
    std::vector<double> shaping_fir;           // 8-tap spectral shaping
    double am_rate_hz = 0.0;                   // amplitude modulation

    static SpeakerProfile make(std::uint64_t seed, std::uint32_t id);
};

// Voiced/unvoiced harmonic utterance, shaped by the profile filter,
// peak-normalized to 0.9. Deterministic per (profile, seed).
Waveform synth_utterance(const SpeakerProfile& profile, double duration_s, std::uint64_t seed);

struct MixResult {
    Waveform mixture;
    std::vector<Waveform> scaled_sources;
    std::vector<double> gains;
};

// Source 1 is the 0 dB reference; levels[i] is the level of source i+1 in dB
// below it (10·log10(P1/P_i)). Inputs are cropped to the shortest length and
// the mixture is rescaled if it clips, with gains recorded.
MixResult mix_at_snr(const std::vector<Waveform>& sources, const std::vector<double>& levels_db);

struct MixtureRecord {
    std::string mixture_path;
    std::vector<std::string> source_paths;
    std::size_t c = 0;
    std::vector<double> gains;
    std::vector<std::uint32_t> speaker_ids;
    std::string split;  // train / valid / test
};

using Manifest = std::vector<MixtureRecord>;

struct DatasetConfig {
    std::size_t train_per_c = 100;
    std::size_t valid_per_c = 20;
    std::size_t test_per_c = 20;
    std::vector<std::size_t> c_values = {2, 3};
    double duration_s = 0.5;
    double level_lo_db = -2.5;
    double level_hi_db = 2.5;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
};

// Writes WAVs and a line-delimited manifest; train/valid and test draw from
// disjoint speaker-id pools. Returns the manifest that was written.
Manifest build_dataset(const DatasetConfig& config);

void manifest_write(const std::filesystem::path& path, const Manifest& manifest);
Manifest manifest_read(const std::filesystem::path& path);

std::vector<MixtureRecord> manifest_split(const Manifest& manifest, const std::string& split);

}  // namespace sepcount
