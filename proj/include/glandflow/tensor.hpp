#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace glandflow {

// Dense row-major array of 64-bit reals.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(element_count(shape), 0.0);
  }
  Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape))
      throw std::invalid_argument("tensor data length does not match shape");
  }

  static size_t element_count(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
  }

  size_t size() const { return data.size(); }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  // (C,H,W) indexing for image-like tensors
  double& at3(size_t c, size_t y, size_t x) {
    return data[(c * shape[1] + y) * shape[2] + x];
  }
  double at3(size_t c, size_t y, size_t x) const {
    return data[(c * shape[1] + y) * shape[2] + x];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void require_shape(const Tensor& t, const std::vector<size_t>& shape, const char* what) {
  if (t.shape != shape) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

}  // namespace glandflow
