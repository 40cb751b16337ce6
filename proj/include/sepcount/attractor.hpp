#pragma once

#include <cstdint>
#include <vector>

#include "sepcount/rng.hpp"
#include "sepcount/tensor.hpp"

namespace sepcount {

// K trainable initial centers in embedding space.
struct CenterBank {
    Tensor centers;  // K×L
    Tensor gc;

    void init(std::size_t k, std::size_t l, Rng& rng);
    std::size_t k() const { return centers.dim(0); }
};

// Assignment of embedding rows to clusters after the final k-means pass;
// enough to push gradients from the refined centroids back onto V (and onto
// the bank centers that kept empty clusters).
struct KmeansCache {
    std::vector<std::uint32_t> assign;   // per row of V
    std::vector<std::size_t> counts;     // per cluster
    std::vector<bool> empty_cluster;
};

// Lloyd iterations with Euclidean assignment; an empty cluster keeps its
// previous center.
Tensor kmeans_refine(const Tensor& v, const Tensor& init_centers, std::size_t iters,
                     KmeansCache* cache = nullptr);

struct AttractorSet {
    Tensor a;                          // C×L refined centroids
    std::vector<std::size_t> subset;   // chosen bank indices, ascending
    double score = 0.0;                // minimum pairwise centroid distance
    KmeansCache cache;
};

// Enumerate all C-of-K center subsets, refine each by k-means, keep the set
// with the largest minimum pairwise distance; ties break to the subset that
// comes first lexicographically.
AttractorSet select_attractors(const Tensor& v, std::size_t c, const CenterBank& bank,
                               std::size_t iters = 1);

// Softmax over sources of the embedding-centroid dot products. N×C.
Tensor mask_probabilities(const Tensor& v, const Tensor& a);

// Reshape N×C probabilities into C×F×T masks (n = t·f_conv + f).
Tensor probabilities_to_masks(const Tensor& probs, std::size_t f_conv);

// C×F×T mask tensor directly from embeddings and centroids.
Tensor compute_masks(const Tensor& v, const Tensor& a, std::size_t f_conv);

// Backward of the refined-centroid map: distributes gA over the assigned
// rows of V; empty clusters hand their gradient to the bank center that
// seeded them.
void attractor_backward(const AttractorSet& set, const Tensor& grad_a, Tensor& grad_v,
                        CenterBank& bank);

std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t k, std::size_t c);

}  // namespace sepcount
