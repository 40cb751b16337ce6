#include "sepcount/attractor.hpp"

#include <cmath>
#include <limits>

#include "sepcount/layers.hpp"

namespace sepcount {

void CenterBank::init(std::size_t k, std::size_t l, Rng& rng) {
    centers = Tensor({k, l});
    const double scale = 1.0 / std::sqrt(static_cast<double>(l));
    for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = gaussian(rng) * scale;
    gc = zeros_like(centers);
}

Tensor kmeans_refine(const Tensor& v, const Tensor& init_centers, std::size_t iters,
                     KmeansCache* cache) {
    if (v.rank() != 2 || init_centers.rank() != 2 || v.dim(1) != init_centers.dim(1)) {
        throw ShapeError("kmeans_refine: embedding/center dimension mismatch");
    }
    if (iters < 1) throw ConfigError("kmeans_refine: iteration count must be >= 1");
    const std::size_t n = v.dim(0), l = v.dim(1), c = init_centers.dim(0);

    Tensor centers = init_centers;
    std::vector<std::uint32_t> assign(n, 0);
    std::vector<std::size_t> counts(c, 0);
    std::vector<bool> empty(c, false);

    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t row = 0; row < n; ++row) {
            const double* vr = v.data() + row * l;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_c = 0;
            for (std::size_t k = 0; k < c; ++k) {
                const double* ck = centers.data() + k * l;
                double d = 0.0;
                for (std::size_t i = 0; i < l; ++i) {
                    const double diff = vr[i] - ck[i];
                    d += diff * diff;
                }
                if (d < best) {
                    best = d;
                    best_c = static_cast<std::uint32_t>(k);
                }
            }
            assign[row] = best_c;
        }
        Tensor next({c, l});
        counts.assign(c, 0);
        for (std::size_t row = 0; row < n; ++row) {
            const std::uint32_t k = assign[row];
            ++counts[k];
            const double* vr = v.data() + row * l;
            double* ck = next.data() + k * l;
            for (std::size_t i = 0; i < l; ++i) ck[i] += vr[i];
        }
        for (std::size_t k = 0; k < c; ++k) {
            empty[k] = counts[k] == 0;
            if (counts[k] == 0) {
                for (std::size_t i = 0; i < l; ++i) next.at(k, i) = centers.at(k, i);
            } else {
                const double inv = 1.0 / static_cast<double>(counts[k]);
                for (std::size_t i = 0; i < l; ++i) next.at(k, i) *= inv;
            }
        }
        centers = std::move(next);
    }
    if (cache) {
        cache->assign = std::move(assign);
        cache->counts = std::move(counts);
        cache->empty_cluster = std::move(empty);
    }
    return centers;
}

std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t k, std::size_t c) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    // Lexicographic enumeration.
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (cur.size() == c) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < k; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

namespace {

double min_pairwise_distance(const Tensor& centroids) {
    const std::size_t c = centroids.dim(0), l = centroids.dim(1);
    if (c < 2) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = i + 1; j < c; ++j) {
            double d = 0.0;
            for (std::size_t p = 0; p < l; ++p) {
                const double diff = centroids.at(i, p) - centroids.at(j, p);
                d += diff * diff;
            }
            best = std::min(best, std::sqrt(d));
        }
    }
    return best;
}

}  // namespace

AttractorSet select_attractors(const Tensor& v, std::size_t c, const CenterBank& bank,
                               std::size_t iters) {
    const std::size_t k = bank.k();
    if (c < 1 || c > k) {
        throw ConfigError("select_attractors: requested C=" + std::to_string(c) +
                          " exceeds center bank capacity K=" + std::to_string(k));
    }
    const std::size_t l = bank.centers.dim(1);
    const auto subsets = subsets_of_size(k, c);

    AttractorSet best;
    bool have = false;
    for (const auto& subset : subsets) {
        Tensor init({c, l});
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t p = 0; p < l; ++p) init.at(i, p) = bank.centers.at(subset[i], p);
        }
        KmeansCache cache;
        Tensor centroids = kmeans_refine(v, init, iters, &cache);
        const double score = min_pairwise_distance(centroids);
        // Strict > keeps the lexicographically first subset on ties.
        if (!have || score > best.score) {
            have = true;
            best.a = std::move(centroids);
            best.subset = subset;
            best.score = score;
            best.cache = std::move(cache);
        }
    }
    return best;
}

Tensor mask_probabilities(const Tensor& v, const Tensor& a) {
    return softmax(matmul(v, transpose(a)), 1);
}

Tensor probabilities_to_masks(const Tensor& probs, std::size_t f_conv) {
    const std::size_t n = probs.dim(0), c = probs.dim(1);
    if (n % f_conv != 0) {
        throw ShapeError("probabilities_to_masks: row count not divisible by f_conv");
    }
    const std::size_t t = n / f_conv;
    Tensor masks({c, f_conv, t});
    for (std::size_t tt = 0; tt < t; ++tt) {
        for (std::size_t f = 0; f < f_conv; ++f) {
            const std::size_t row = tt * f_conv + f;
            for (std::size_t i = 0; i < c; ++i) masks.at(i, f, tt) = probs.at(row, i);
        }
    }
    return masks;
}

Tensor compute_masks(const Tensor& v, const Tensor& a, std::size_t f_conv) {
    return probabilities_to_masks(mask_probabilities(v, a), f_conv);
}

void attractor_backward(const AttractorSet& set, const Tensor& grad_a, Tensor& grad_v,
                        CenterBank& bank) {
    const std::size_t c = set.a.dim(0), l = set.a.dim(1);
    if (grad_a.dim(0) != c || grad_a.dim(1) != l) {
        throw ShapeError("attractor_backward: grad shape mismatch");
    }
    for (std::size_t i = 0; i < c; ++i) {
        if (set.cache.empty_cluster[i]) {
            const std::size_t bank_idx = set.subset[i];
            for (std::size_t p = 0; p < l; ++p) bank.gc.at(bank_idx, p) += grad_a.at(i, p);
        }
    }
    const std::size_t n = set.cache.assign.size();
    for (std::size_t row = 0; row < n; ++row) {
        const std::uint32_t k = set.cache.assign[row];
        if (set.cache.empty_cluster[k]) continue;
        const double inv = 1.0 / static_cast<double>(set.cache.counts[k]);
        for (std::size_t p = 0; p < l; ++p) grad_v.at(row, p) += grad_a.at(k, p) * inv;
    }
}

}  // namespace sepcount
