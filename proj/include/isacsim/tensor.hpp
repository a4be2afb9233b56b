#ifndef ISACSIM_TENSOR_HPP
#define ISACSIM_TENSOR_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace isacsim {

// Dense row-major tensor of doubles. The last axis is contiguous.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    int64_t n = 1;
    for (int d : shape_) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    buf_.assign(static_cast<size_t>(n), 0.0);
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int axis) const { return shape_.at(static_cast<size_t>(axis)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t size() const { return static_cast<int64_t>(buf_.size()); }

  double* data() { return buf_.data(); }
  const double* data() const { return buf_.data(); }

  double& operator[](int64_t i) { return buf_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return buf_[static_cast<size_t>(i)]; }

  double& at2(int i, int j) { return buf_[static_cast<size_t>(i) * dim(1) + j]; }
  double at2(int i, int j) const { return buf_[static_cast<size_t>(i) * dim(1) + j]; }

  double& at4(int a, int b, int c, int d) {
    return buf_[((static_cast<size_t>(a) * dim(1) + b) * dim(2) + c) * dim(3) + d];
  }
  double at4(int a, int b, int c, int d) const {
    return buf_[((static_cast<size_t>(a) * dim(1) + b) * dim(2) + c) * dim(3) + d];
  }

  void fill(double v) { std::fill(buf_.begin(), buf_.end(), v); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::vector<double> buf_;
  std::vector<int> shape_;
};

}  // namespace isacsim

#endif  // ISACSIM_TENSOR_HPP
