#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sepcount/tensor.hpp"

namespace sepcount {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Central finite differences of a scalar function over a flat parameter
// vector.
std::vector<double> finite_difference_grad(const std::function<double()>& f,
                                           double* values, std::size_t count,
                                           double h = 1e-4);

// Relative error between an analytic gradient and its finite-difference
// estimate: ‖ga − gf‖ / max(‖gf‖, floor).
double gradient_rel_error(const std::vector<double>& analytic,
                          const std::vector<double>& fd);

// Analysis→synthesis identity on interior samples for random waveforms of
// lengths 160–8000.
std::vector<CheckResult> cola_suite(std::uint64_t seed, std::size_t trials = 100);

// Finite-difference checks: every differentiable layer in isolation
// (tolerance 1e-6) and the end-to-end PIT loss on a small model
// (tolerance 1e-3), each over `seeds` random restarts.
std::vector<CheckResult> gradient_suite(std::uint64_t seed, std::size_t seeds = 10);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace sepcount
