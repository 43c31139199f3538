#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <vector>

#include "fedae/errors.hpp"

namespace fedae {

/// Row-major f32 buffer. The engine works on 2-D tensors (batch x features);
/// 1-D tensors are accepted where a single row is meant.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::size_t rows, std::size_t cols)
        : shape_{rows, cols}, data_(rows * cols, 0.0f) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<float> values)
        : shape_{rows, cols}, data_(std::move(values)) {
        if (data_.size() != rows * cols) {
            throw DimensionError("tensor data length does not match shape");
        }
    }

    static Tensor row(std::vector<float> values) {
        const std::size_t n = values.size();
        return Tensor(1, n, std::move(values));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? (shape_.empty() ? 0 : 1) : shape_[1]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<float> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const float> row_span(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }
    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    bool all_finite() const {
        for (float v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

} // namespace fedae
