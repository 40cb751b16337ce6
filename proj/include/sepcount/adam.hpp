#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepcount/tensor.hpp"

namespace sepcount {

// Named view onto a parameter tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment accumulators are indexed in the same
// order as the parameter list handed to init().
struct AdamState {
    AdamConfig cfg;
    std::uint64_t step = 0;
    std::vector<Tensor> m, v;

    void init(const std::vector<ParamRef>& params);
    void update(const std::vector<ParamRef>& params);
};

// Global-norm gradient clipping; returns the pre-clip norm.
double clip_gradients(const std::vector<ParamRef>& params, double max_norm);

void zero_gradients(const std::vector<ParamRef>& params);

}  // namespace sepcount
