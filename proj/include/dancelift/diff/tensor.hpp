#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "../error.hpp"

namespace dancelift::diff {

/// Up to three dimensions. Storage is channel-fastest:
/// index(t, c, b) = (t * batch + b) * channel + c, so every (t, b) slot is a
/// contiguous channel vector and the whole tensor views as a row-major
/// (time * batch) x channel matrix.
struct Shape {
    int time = 1;
    int channel = 1;
    int batch = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(time) * static_cast<std::size_t>(channel) *
               static_cast<std::size_t>(batch);
    }
    int rows() const { return time * batch; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "(" + std::to_string(time) + "," + std::to_string(channel) + "," +
               std::to_string(batch) + ")";
    }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {
        require(shape.time > 0 && shape.channel > 0 && shape.batch > 0,
                "tensor dimensions must be positive, got " + shape.str());
    }
    Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
        require(data_.size() == shape.size(), "tensor value count does not match shape " + shape.str());
    }

    static Tensor scalar(double v) { return Tensor(Shape{}, v); }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int t, int c, int b = 0) { return data_[index(t, c, b)]; }
    double at(int t, int c, int b = 0) const { return data_[index(t, c, b)]; }

    std::size_t index(int t, int c, int b = 0) const {
        return (static_cast<std::size_t>(t) * shape_.batch + b) * shape_.channel + c;
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::vector<double>& storage() { return data_; }

    Eigen::Map<RowMatrix> mat() { return {data_.data(), shape_.rows(), shape_.channel}; }
    Eigen::Map<const RowMatrix> mat() const { return {data_.data(), shape_.rows(), shape_.channel}; }

    /// Rows of time step t (batch x channel).
    Eigen::Map<RowMatrix> step(int t) {
        return {data_.data() + index(t, 0, 0), shape_.batch, shape_.channel};
    }
    Eigen::Map<const RowMatrix> step(int t) const {
        return {data_.data() + index(t, 0, 0), shape_.batch, shape_.channel};
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    double item() const {
        require(data_.size() == 1, "item() on a non-scalar tensor " + shape_.str());
        return data_[0];
    }

private:
    Shape shape_{};
    std::vector<double> data_{0.0};
};

/// A trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor(value.shape()); }
};

} // namespace dancelift::diff
