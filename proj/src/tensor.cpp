#include "vx/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace vx {

void fail(const std::string& msg) { throw std::runtime_error(msg); }

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const std::vector<size_t>& shape) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

namespace {

void validate_shape(const std::vector<size_t>& shape) {
    if (shape.empty() || shape.size() > 5)
        fail("tensor: rank must be 1..5, got " + std::to_string(shape.size()));
    for (size_t i = 0; i < shape.size(); ++i)
        if (shape[i] == 0)
            fail("tensor: axis " + std::to_string(i) + " has extent 0");
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (shape_numel(shape_) != data_.size())
        fail("tensor: shape " + shape_str(shape_) + " wants " +
             std::to_string(shape_numel(shape_)) + " values, got " + std::to_string(data_.size()));
}

Tensor Tensor::zeros(std::vector<size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = value;
    return t;
}

size_t Tensor::extent(size_t axis) const {
    if (axis >= shape_.size())
        fail("tensor: axis " + std::to_string(axis) + " out of range for rank " +
             std::to_string(shape_.size()));
    return shape_[axis];
}

Tensor Tensor::reshaped(std::vector<size_t> new_shape) const {
    validate_shape(new_shape);
    if (shape_numel(new_shape) != data_.size())
        fail("tensor: cannot reshape " + shape_str(shape_) + " to " + shape_str(new_shape));
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void check_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) fail(what + ": non-finite value");
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    if (a.numel() == 0) return true;
    return std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

}  // namespace vx
