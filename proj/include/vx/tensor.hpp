#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vx {

[[noreturn]] void fail(const std::string& msg);

size_t shape_numel(const std::vector<size_t>& shape);
std::string shape_str(const std::vector<size_t>& shape);

// Dense row-major tensor of 64-bit floats, rank 1..5, last axis fastest.
// Axis convention for rank-5 tensors: (batch, channel, depth, height, width).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape);
    Tensor(std::vector<size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double value);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t extent(size_t axis) const;
    size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    // Same data, new shape; element count must match.
    Tensor reshaped(std::vector<size_t> new_shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

// Throws when any element of `t` is NaN or infinite; `what` names the operand.
void check_finite(const Tensor& t, const std::string& what);

bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace vx
