#include "sepcount/counter.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "sepcount/eig.hpp"
#include "sepcount/rng.hpp"

namespace sepcount {

Tensor covariance(const Tensor& v) {
    if (v.rank() != 2) throw ShapeError("covariance: expects N x L embeddings");
    const std::size_t n = v.dim(0), l = v.dim(1);
    if (n < l) {
        throw ShapeError("covariance: need at least L=" + std::to_string(l) +
                         " rows, got N=" + std::to_string(n));
    }
    Tensor b({l, l});
    for (std::size_t row = 0; row < n; ++row) {
        const double* vr = v.data() + row * l;
        for (std::size_t i = 0; i < l; ++i) {
            const double vi = vr[i];
            double* br = b.data() + i * l;
            for (std::size_t j = i; j < l; ++j) br[j] += vi * vr[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = i; j < l; ++j) {
            b.at(i, j) *= inv_n;
            b.at(j, i) = b.at(i, j);
        }
    }
    return b;
}

GdeTransform gde_transform(const Tensor& b) {
    if (b.rank() != 2 || b.dim(0) != b.dim(1) || b.dim(0) < 2) {
        throw ShapeError("gde_transform: expects a square matrix of size >= 2");
    }
    const std::size_t l = b.dim(0);
    Tensor r1({l - 1, l - 1});
    for (std::size_t i = 0; i + 1 < l; ++i) {
        for (std::size_t j = 0; j + 1 < l; ++j) r1.at(i, j) = b.at(i, j);
    }
    const EigResult eig = sym_eig(r1);

    GdeTransform out;
    out.eigenvalues = eig.values;
    out.radii.resize(l - 1);
    for (std::size_t k = 0; k + 1 < l; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < l; ++i) acc += eig.vectors.at(i, k) * b.at(i, l - 1);
        out.radii[k] = std::abs(acc);
    }
    return out;
}

GdeResult gde_count(const Tensor& v, double factor) {
    if (!(factor > 0.0 && factor < 1.0)) {
        throw ConfigError("gde_count: factor must lie in (0, 1)");
    }
    const Tensor b = covariance(v);
    const GdeTransform tf = gde_transform(b);
    const std::size_t m = tf.radii.size();  // L−1 disks

    GdeResult result;
    result.eigenvalues = tf.eigenvalues;
    result.radii = tf.radii;
    result.factor = factor;

    double radius_sum = 0.0;
    for (double r : tf.radii) radius_sum += r;
    result.gde.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        result.gde[k] = tf.radii[k] - factor / static_cast<double>(m) * radius_sum;
    }
    if (radius_sum == 0.0) {
        result.zero_radius = true;
        result.estimate = 0;
        return result;
    }
    result.saturated = true;
    result.estimate = m;
    for (std::size_t k = 0; k < m; ++k) {
        if (result.gde[k] <= 0.0) {
            result.estimate = k;  // k₀ − 1 with 1-based k₀
            result.saturated = false;
            break;
        }
    }
    return result;
}

double gde_factor(std::size_t n, double coeff) {
    const double lg = std::log10(static_cast<double>(std::max<std::size_t>(n, 2)));
    const double f = coeff / std::sqrt(std::max(lg, 1e-12));
    return std::clamp(f, 1e-6, 1.0 - 1e-6);
}

GdeResult gde_count_auto(const Tensor& v, double coeff) {
    return gde_count(v, gde_factor(v.dim(0), coeff));
}

std::size_t rank_count(const Tensor& v, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("rank_count: threshold must lie in (0, 1)");
    }
    const Tensor b = covariance(v);
    const EigResult eig = sym_eig(b);
    const double lmax = eig.values.front();
    if (lmax <= 0.0) return 0;
    std::size_t count = 0;
    for (double lam : eig.values) {
        if (lam > threshold * lmax) ++count;
    }
    return count;
}

Tensor synthetic_embeddings(std::size_t c, std::size_t n, std::size_t dim, double sigma,
                            double energy_lo, double energy_hi, Rng& rng)
{
    // Orthonormal directions by Gram-Schmidt on Gaussian draws.
    std::vector<std::vector<double>> dirs(c, std::vector<double>(dim));
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < dim; ++i) dirs[k][i] = gaussian(rng);
        for (std::size_t p = 0; p < k; ++p) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += dirs[k][i] * dirs[p][i];
            for (std::size_t i = 0; i < dim; ++i) dirs[k][i] -= dot * dirs[p][i];
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < dim; ++i) nrm += dirs[k][i] * dirs[k][i];
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < dim; ++i) dirs[k][i] /= nrm;
    }
    std::vector<double> energy(c);
    for (std::size_t k = 0; k < c; ++k) energy[k] = uniform(rng, energy_lo, energy_hi);

    Tensor v({n, dim});
    std::uniform_int_distribution<std::size_t> pick(0, c - 1);
    for (std::size_t row = 0; row < n; ++row) {
        const std::size_t k = pick(rng);
        const double coef = gaussian(rng) * std::sqrt(energy[k]);
        double* vr = v.data() + row * dim;
        for (std::size_t i = 0; i < dim; ++i) {
            vr[i] = coef * dirs[k][i] + sigma * gaussian(rng);
        }
    }
    return v;
}

BenchmarkResult counting_benchmark(const BenchmarkConfig& config) {
    if (config.trials_per_c < 1) throw ConfigError("counting_benchmark: trials must be >= 1");
    BenchmarkResult result;
    result.c_values = config.c_values;
    MethodAccuracy gde{"gde", {}, 0.0};
    MethodAccuracy rank{"rank", {}, 0.0};
    for (std::size_t c : config.c_values) {
        Rng rng = make_rng(config.seed, "benchmark-c" + std::to_string(c));
        std::size_t gde_ok = 0, rank_ok = 0;
        for (std::size_t trial = 0; trial < config.trials_per_c; ++trial) {
            const double sigma = uniform(rng, config.sigma_lo, config.sigma_hi);
            const Tensor v = synthetic_embeddings(c, config.n_rows, config.dim, sigma,
                                                  config.energy_lo, config.energy_hi, rng);
            if (gde_count_auto(v, config.gde_coeff).estimate == c) ++gde_ok;
            if (rank_count(v, config.rank_threshold) == c) ++rank_ok;
        }
        const double denom = static_cast<double>(config.trials_per_c);
        gde.per_c.push_back(100.0 * static_cast<double>(gde_ok) / denom);
        rank.per_c.push_back(100.0 * static_cast<double>(rank_ok) / denom);
    }
    for (MethodAccuracy* m : {&gde, &rank}) {
        double sum = 0.0;
        for (double a : m->per_c) sum += a;
        m->average = sum / static_cast<double>(m->per_c.size());
    }
    result.methods = {gde, rank};
    return result;
}

double calibrate_rank_threshold(double sigma, const BenchmarkConfig& config,
                                std::size_t calib_trials_per_c) {
    // Log-spaced grid of candidate thresholds.
    std::vector<double> grid;
    const double lo = 0.005, hi = 0.5;
    const std::size_t steps = 25;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
        grid.push_back(lo * std::pow(hi / lo, t));
    }

    std::vector<std::pair<Tensor, std::size_t>> calib;
    for (std::size_t c : config.c_values) {
        Rng rng = make_rng(config.seed, "rank-calib-c" + std::to_string(c));
        for (std::size_t trial = 0; trial < calib_trials_per_c; ++trial) {
            calib.emplace_back(synthetic_embeddings(c, config.n_rows, config.dim, sigma,
                                                    config.energy_lo, config.energy_hi, rng),
                               c);
        }
    }
    std::size_t best_idx = 0, best_ok = 0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        std::size_t ok = 0;
        for (const auto& [v, c] : calib) {
            if (rank_count(v, grid[gi]) == c) ++ok;
        }
        if (ok > best_ok) {  // strict: ties keep the smallest threshold
            best_ok = ok;
            best_idx = gi;
        }
    }
    return grid[best_idx];
}

std::string benchmark_table_text(const BenchmarkResult& result) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << "Source counting accuracy [%]\n";
    os << std::left << std::setw(10) << "method";
    for (std::size_t c : result.c_values) {
        os << std::right << std::setw(14) << (std::to_string(c) + " speakers");
    }
    os << std::right << std::setw(10) << "avg" << "\n";
    for (const MethodAccuracy& m : result.methods) {
        os << std::left << std::setw(10) << m.method;
        for (double a : m.per_c) os << std::right << std::setw(14) << a;
        os << std::right << std::setw(10) << m.average << "\n";
    }
    return os.str();
}

std::string benchmark_table_csv(const BenchmarkResult& result) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "method";
    for (std::size_t c : result.c_values) os << ",acc_" << c << "spk";
    os << ",acc_avg\n";
    for (const MethodAccuracy& m : result.methods) {
        os << m.method;
        for (double a : m.per_c) os << "," << a;
        os << "," << m.average << "\n";
    }
    return os.str();
}

}  // namespace sepcount
