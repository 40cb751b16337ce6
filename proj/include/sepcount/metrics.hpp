#pragma once

#include <string>
#include <vector>

#include "sepcount/decoder.hpp"

namespace sepcount {

// Display clamp for dB metrics (the ε-limited extremes).
constexpr double kMetricClampDb = 80.0;

// Edge samples per side excluded from metric computation (outside full COLA
// coverage).
constexpr std::size_t kMetricEdgeTrim = 10;

Waveform trim_edges(const Waveform& w, std::size_t per_side = kMetricEdgeTrim);

double clamp_db(double value);

// si_snr(s, ŝ) − si_snr(s, x), clamped for display.
double si_snri(const Waveform& reference, const Waveform& estimate, const Waveform& mixture);

// Projection-free stand-in: 10·log10(‖s‖² / ‖s − ŝ‖²). This is NOT BSS-eval
// SDR (no distortion filters); documented as such in the reports.
double sdr_plain(const Waveform& reference, const Waveform& estimate);
double sdri(const Waveform& reference, const Waveform& estimate, const Waveform& mixture);

struct EvalRecord {
    std::string id;
    std::size_t true_c = 0;
    std::size_t estimated_c = 0;
    std::vector<double> si_snr_db, si_snri_db, sdr_db, sdri_db;  // per matched source
    std::vector<std::size_t> permutation;  // estimate i ↔ sources[permutation[i]]
    bool count_mismatch = false;
};

struct CountingAccuracy {
    std::vector<std::size_t> c_values;
    std::vector<double> per_c;  // percent
    double average = 0.0;
};

CountingAccuracy counting_accuracy(const std::vector<EvalRecord>& records);

// Best injective assignment of estimates to sources by mean SI-SNR over the
// min(Ĉ, C) matched pairs; trims COLA edges before scoring.
EvalRecord evaluate_separation(const std::string& id,
                               const std::vector<Waveform>& sources,
                               const std::vector<Waveform>& estimates,
                               const Waveform& mixture);

std::string eval_report_csv(const std::vector<EvalRecord>& records);
std::string eval_report_text(const std::vector<EvalRecord>& records);

}  // namespace sepcount
