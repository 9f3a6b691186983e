#include "gazelab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "gazelab/errors.hpp"

namespace gazelab {

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    if (std::find(shape_.begin(), shape_.end(), std::size_t{0}) != shape_.end()) {
        throw ShapeMismatch("tensor dimensions must be positive, got " + shape_string(shape_));
    }
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (std::find(shape_.begin(), shape_.end(), std::size_t{0}) != shape_.end()) {
        throw ShapeMismatch("tensor dimensions must be positive, got " + shape_string(shape_));
    }
    if (data_.size() != shape_size(shape_)) {
        throw ShapeMismatch("shape " + shape_string(shape_) + " needs " +
                            std::to_string(shape_size(shape_)) + " values, got " +
                            std::to_string(data_.size()));
    }
}

Tensor Tensor::from_rows(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw ShapeMismatch("cannot stack zero rows");
    const std::size_t width = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * width);
    for (const auto& row : rows) {
        if (row.size() != width) {
            throw ShapeMismatch("ragged rows: " + std::to_string(row.size()) + " vs " +
                                std::to_string(width));
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({rows.size(), width}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const { return shape_.size() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const { return shape_.empty() ? 1 : shape_.back(); }

double Tensor::item() const {
    if (data_.size() != 1) {
        throw ShapeMismatch("item() needs a one-element tensor, got " + shape_string(shape_));
    }
    return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace gazelab
