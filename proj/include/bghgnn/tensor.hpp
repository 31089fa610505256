#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bghgnn {

// Dense row-major tensor of 64-bit floats. Shape {} is a scalar.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

  Tensor(std::vector<int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_numel(shape_))
      throw std::invalid_argument("tensor: data length does not match shape");
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }

  int64_t dim(int64_t i) const { return shape_.at(static_cast<size_t>(i)); }

  int64_t rows() const { require_2d(); return shape_[0]; }
  int64_t cols() const { require_2d(); return shape_[1]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& at(int64_t i) { return data_[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& operator()(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols_unchecked() + c)]; }
  double operator()(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols_unchecked() + c)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  static size_t checked_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return static_cast<size_t>(n);
  }

  void require_2d() const {
    if (shape_.size() != 2) throw std::invalid_argument("tensor: expected 2-d, got shape " + shape_str());
  }

  int64_t cols_unchecked() const { return shape_[1]; }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace bghgnn
