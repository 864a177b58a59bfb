#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "glandflow/tensor.hpp"

namespace glandflow {

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Log-sum-exp stabilized; grad = softmax - onehot.
inline LossResult softmax_cross_entropy(const Tensor& logits, size_t target) {
  if (target >= logits.size()) throw std::invalid_argument("target class out of range");
  double m = logits[0];
  for (double v : logits.data) m = std::max(m, v);
  double sum = 0.0;
  for (double v : logits.data) sum += std::exp(v - m);
  double lse = m + std::log(sum);
  LossResult res;
  res.loss = lse - logits[target];
  res.grad = Tensor(logits.shape);
  for (size_t i = 0; i < logits.size(); ++i) res.grad[i] = std::exp(logits[i] - lse);
  res.grad[target] -= 1.0;
  return res;
}

inline Tensor softmax(const Tensor& logits) {
  double m = logits[0];
  for (double v : logits.data) m = std::max(m, v);
  double sum = 0.0;
  for (double v : logits.data) sum += std::exp(v - m);
  Tensor p(logits.shape);
  for (size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - m) / sum;
  return p;
}

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Mean binary cross-entropy over all elements, on logits; targets in {0,1}.
inline LossResult bce_with_logits(const Tensor& logits, const Tensor& targets) {
  if (!logits.same_shape(targets)) throw std::invalid_argument("bce: shape mismatch");
  LossResult res;
  res.grad = Tensor(logits.shape);
  double n = static_cast<double>(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    double z = logits[i], y = targets[i];
    res.loss += softplus(z) - y * z;
    res.grad[i] = (sigmoid(z) - y) / n;
  }
  res.loss /= n;
  return res;
}

// Scalar-logit convenience for binary classification heads.
inline LossResult bce_with_logit(double logit, double target) {
  Tensor z({1});
  z[0] = logit;
  Tensor y({1});
  y[0] = target;
  return bce_with_logits(z, y);
}

}  // namespace glandflow
