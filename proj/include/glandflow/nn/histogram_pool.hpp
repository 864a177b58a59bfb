#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "glandflow/tensor.hpp"

namespace glandflow {

// Soft histogram over a set of feature vectors: entry (f,j) is the mean over
// the set of the triangular membership max(0, 1 - |v - c_j| / w).
struct HistogramSpec {
  size_t num_features = 128;
  size_t num_bins = 5;
  std::vector<double> bin_centers;
  double bin_width = 0.5;

  void validate() const {
    if (num_features == 0 || num_bins == 0) throw std::invalid_argument("histogram spec empty");
    if (bin_centers.size() != num_bins) throw std::invalid_argument("bin_centers size mismatch");
    if (bin_width <= 0.0) throw std::invalid_argument("bin width must be positive");
    for (size_t j = 1; j < num_bins; ++j)
      if (bin_centers[j] <= bin_centers[j - 1])
        throw std::invalid_argument("bin centers must be strictly increasing");
  }
};

// Centers span [-1, 1] with spacing equal to the bin width, matching the
// tanh-squashed feature range.
inline HistogramSpec default_histogram_spec(size_t num_features = 128, size_t num_bins = 5) {
  HistogramSpec spec;
  spec.num_features = num_features;
  spec.num_bins = num_bins;
  spec.bin_centers.resize(num_bins);
  double spacing = num_bins > 1 ? 2.0 / static_cast<double>(num_bins - 1) : 1.0;
  for (size_t j = 0; j < num_bins; ++j) spec.bin_centers[j] = -1.0 + spacing * j;
  spec.bin_width = spacing;
  return spec;
}

inline double hat_kernel(double v, double center, double width) {
  double d = std::abs(v - center) / width;
  return d < 1.0 ? 1.0 - d : 0.0;
}

namespace detail {

// Order-canonical mean: sort, coalesce equal values, accumulate count*value in
// ascending order. Gives bit-identical results under any permutation of the
// inputs, and mean(S ++ S) == mean(S) exactly.
inline double sorted_mean(std::vector<double>& vals) {
  std::sort(vals.begin(), vals.end());
  double sum = 0.0;
  size_t i = 0;
  while (i < vals.size()) {
    size_t j = i + 1;
    while (j < vals.size() && vals[j] == vals[i]) ++j;
    sum += static_cast<double>(j - i) * vals[i];
    i = j;
  }
  return sum / static_cast<double>(vals.size());
}

}  // namespace detail

// features: m vectors of length spec.num_features -> (num_features, num_bins).
inline Tensor soft_histogram_pool(const std::vector<Tensor>& features, const HistogramSpec& spec) {
  spec.validate();
  if (features.empty()) throw std::invalid_argument("soft_histogram_pool: empty feature set");
  for (const auto& f : features)
    if (f.size() != spec.num_features)
      throw std::invalid_argument("soft_histogram_pool: feature length mismatch");

  size_t m = features.size();
  Tensor hist({spec.num_features, spec.num_bins});
  std::vector<double> vals(m);
  for (size_t f = 0; f < spec.num_features; ++f)
    for (size_t j = 0; j < spec.num_bins; ++j) {
      for (size_t i = 0; i < m; ++i)
        vals[i] = hat_kernel(features[i][f], spec.bin_centers[j], spec.bin_width);
      hist[f * spec.num_bins + j] = detail::sorted_mean(vals);
    }
  return hist;
}

// d hist(f,j) / d v_{i,f} = -(sign(v - c_j) / (m w)) on 0 < |v - c_j| < w,
// 0 elsewhere (kinks at the center and at the support edge take 0).
inline std::vector<Tensor> soft_histogram_pool_backward(const std::vector<Tensor>& features,
                                                        const HistogramSpec& spec,
                                                        const Tensor& dhist) {
  size_t m = features.size();
  std::vector<Tensor> dfeatures(m, Tensor({spec.num_features}));
  double inv_mw = 1.0 / (static_cast<double>(m) * spec.bin_width);
  for (size_t i = 0; i < m; ++i)
    for (size_t f = 0; f < spec.num_features; ++f) {
      double v = features[i][f];
      double acc = 0.0;
      for (size_t j = 0; j < spec.num_bins; ++j) {
        double d = v - spec.bin_centers[j];
        if (d == 0.0 || std::abs(d) >= spec.bin_width) continue;
        acc += dhist[f * spec.num_bins + j] * (d > 0.0 ? -inv_mw : inv_mw);
      }
      dfeatures[i][f] = acc;
    }
  return dfeatures;
}

}  // namespace glandflow
