#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepcount/rng.hpp"
#include "sepcount/tensor.hpp"

namespace sepcount {

// Raw second-moment matrix B = (1/N) Σ vₙvₙᵀ of an N×L embedding matrix
// (no mean subtraction).
Tensor covariance(const Tensor& v);

struct GdeTransform {
    std::vector<double> eigenvalues;  // of R1, descending: disk centers
    std::vector<double> radii;        // |ρ| = |U1ᵀ r| entrywise
};

// Eigendecompose the leading (L−1)×(L−1) block of B and rotate its last
// column into the eigenbasis, yielding disk centers and radii.
GdeTransform gde_transform(const Tensor& b);

struct GdeResult {
    std::vector<double> eigenvalues;
    std::vector<double> radii;
    std::vector<double> gde;  // GDE(k) = |ρ_k| − F/(L−1)·Σ|ρ_l|
    std::size_t estimate = 0;
    double factor = 0.0;
    bool saturated = false;    // no non-positive GDE value; estimate clamped to L−1
    bool zero_radius = false;  // Σ|ρ| == 0 (diagonal covariance)
};

// Source count from the first non-positive GDE value: Ĉ = k₀ − 1.
GdeResult gde_count(const Tensor& v, double factor);

// Default adjustable factor: non-increasing in the sample count,
// F(N) = coeff / sqrt(log10 N), clamped to (0, 1).
double gde_factor(std::size_t n, double coeff);
constexpr double kGdeFactorCoeff = 0.2;
GdeResult gde_count_auto(const Tensor& v, double coeff = kGdeFactorCoeff);

// Baseline: count of covariance eigenvalues above threshold·λ_max.
std::size_t rank_count(const Tensor& v, double threshold);
constexpr double kRankThresholdDefault = 0.1;

// ---------------------------------------------------------------------------
// Synthetic counting benchmark (Table-II-style protocol on constructed
// embeddings: rows along C random orthonormal directions plus noise).
// ---------------------------------------------------------------------------

struct BenchmarkConfig {
    std::size_t trials_per_c = 200;
    std::vector<std::size_t> c_values = {2, 3};
    std::size_t n_rows = 5000;
    std::size_t dim = 20;
    double sigma_lo = 0.02;
    double sigma_hi = 0.1;
    double energy_lo = 0.3;
    double energy_hi = 1.0;
    double gde_coeff = kGdeFactorCoeff;
    double rank_threshold = kRankThresholdDefault;
    std::uint64_t seed = 1;
};

struct MethodAccuracy {
    std::string method;
    std::vector<double> per_c;  // percent, aligned with config c_values
    double average = 0.0;
};

struct BenchmarkResult {
    std::vector<std::size_t> c_values;
    std::vector<MethodAccuracy> methods;  // gde, rank
};

// One synthetic trial: n rows along c random orthonormal directions in R^dim,
// per-direction energies uniform in [energy_lo, energy_hi], additive Gaussian
// noise with the given sigma.
Tensor synthetic_embeddings(std::size_t c, std::size_t n, std::size_t dim, double sigma,
                            double energy_lo, double energy_hi, Rng& rng);

BenchmarkResult counting_benchmark(const BenchmarkConfig& config);

// Picks the rank threshold from a grid that maximizes accuracy on a
// calibration set generated at a single noise level; ties resolve to the
// smallest threshold on the grid.
double calibrate_rank_threshold(double sigma, const BenchmarkConfig& config,
                                std::size_t calib_trials_per_c = 50);

std::string benchmark_table_text(const BenchmarkResult& result);
std::string benchmark_table_csv(const BenchmarkResult& result);

}  // namespace sepcount
