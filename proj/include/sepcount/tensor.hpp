#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sepcount/errors.hpp"

namespace sepcount {

// Dense row-major tensor of doubles. Values are immutable by convention once
// a tensor has been handed to another module; mutation happens only while the
// owner is building it.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-D access, row-major.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    // 3-D access.
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    void fill(double value);
    bool all_finite() const;
    void require_finite(const std::string& what) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

Tensor zeros_like(const Tensor& t);

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace sepcount
