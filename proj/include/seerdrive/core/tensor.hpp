#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "seerdrive/core/errors.hpp"

namespace seerdrive {

// Dense row-major N-d array of doubles. All model math runs in 64-bit;
// 32-bit floats appear only at serialization boundaries.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}
  Tensor(std::vector<int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != checked_numel(shape_)) {
      throw ShapeError("tensor data size does not match shape");
    }
  }

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Row-major offset of a full multi-index.
  int64_t offset(std::initializer_list<int64_t> idx) const {
    int64_t off = 0;
    int i = 0;
    for (int64_t v : idx) {
      off = off * shape_[static_cast<size_t>(i)] + v;
      ++i;
    }
    return off;
  }
  double& at(std::initializer_list<int64_t> idx) { return data_[static_cast<size_t>(offset(idx))]; }
  double at(std::initializer_list<int64_t> idx) const {
    return data_[static_cast<size_t>(offset(idx))];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // Product of the first (ndim - keep_last) dims; 1 for pure vectors.
  int64_t leading(int keep_last) const {
    int64_t n = 1;
    for (int i = 0; i + keep_last < ndim(); ++i) n *= shape_[static_cast<size_t>(i)];
    return n;
  }
  int64_t last() const { return shape_.empty() ? 1 : shape_.back(); }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  static int64_t checked_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw ShapeError("negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

inline int64_t numel_of(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

// Round every entry to its nearest binary32 value. Keeps live state on the
// 32-bit grid that the on-disk formats use, so serialization is lossless.
void snap_to_f32(Tensor& t);
void snap_to_f32(std::vector<double>& v);
double snap_to_f32(double v);

}  // namespace seerdrive
