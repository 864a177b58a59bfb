#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glandflow/nn/layers.hpp"
#include "glandflow/nn/losses.hpp"
#include "glandflow/nn/params.hpp"
#include "glandflow/rng.hpp"

namespace glandflow {

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainSchedule {
  double initial_lr = 1e-4;
  int decay_every_epochs = 10;
  double decay_factor = 0.5;
  int max_epochs = 2000;

  double lr(int epoch) const {
    if (epoch < 0) throw std::invalid_argument("epoch must be non-negative");
    int steps = epoch / decay_every_epochs;
    double f = 1.0;
    for (int i = 0; i < steps; ++i) f *= decay_factor;
    return initial_lr * f;
  }

  void validate() const {
    if (initial_lr <= 0.0 || decay_every_epochs <= 0 || max_epochs < 0 ||
        decay_factor <= 0.0 || decay_factor >= 1.0)
      throw std::invalid_argument("invalid training schedule");
  }
};

// The schedule from the source workflow: 1e-4 decayed every 10 epochs for
// 2000 epochs.
inline TrainSchedule paper_schedule() {
  return TrainSchedule{1e-4, 10, 0.5, 2000};
}

inline void zero_grads(const std::vector<ParamRef>& refs) {
  for (const auto& r : refs) r.grad->fill(0.0);
}

inline void sgd_step(const std::vector<ParamRef>& refs, double lr) {
  for (const auto& r : refs) {
    for (size_t i = 0; i < r.grad->size(); ++i) {
      double g = r.grad->data[i];
      if (std::isnan(g))
        throw TrainingDivergence("NaN gradient in parameter " + r.name);
      r.value->data[i] -= lr * g;
    }
  }
}

// Per-epoch mean losses; aux present only for multi-task training.
struct TrainLog {
  std::vector<double> loss;
  std::vector<double> aux_loss;

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write loss curve: " + path);
    bool has_aux = !aux_loss.empty();
    out << (has_aux ? "epoch,loss,aux_loss\n" : "epoch,loss\n");
    char buf[40];
    for (size_t e = 0; e < loss.size(); ++e) {
      out << e << ",";
      std::snprintf(buf, sizeof buf, "%.17g", loss[e]);
      out << buf;
      if (has_aux) {
        std::snprintf(buf, sizeof buf, "%.17g", aux_loss[e]);
        out << "," << buf;
      }
      out << "\n";
    }
  }
};

// Max over sampled coordinates of |analytic - central difference| / max(1, |analytic|).
// compute_grads must run a full forward/backward into the refs' grad tensors;
// compute_loss must evaluate the same loss without touching grads.
//
// Coordinates where the loss itself is non-differentiable (ReLU or hat-kernel
// kinks inside the perturbation interval) are detected by comparing the two
// one-sided slopes and excluded; almost-everywhere differentiability is the
// contract being verified.
inline double grad_check(const std::function<double()>& compute_loss,
                         const std::function<void()>& compute_grads,
                         const std::vector<ParamRef>& refs, size_t max_coords_per_tensor,
                         uint64_t seed, double h = 1e-5) {
  zero_grads(refs);
  compute_grads();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(refs.size());
  for (const auto& r : refs) analytic.push_back(r.grad->data);

  double l0 = compute_loss();
  Rng rng(seed);
  double max_rel = 0.0;
  for (size_t t = 0; t < refs.size(); ++t) {
    size_t n = refs[t].value->size();
    size_t samples = std::min(max_coords_per_tensor, n);
    for (size_t s = 0; s < samples; ++s) {
      size_t i = samples == n ? s : static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(n) - 1));
      double saved = refs[t].value->data[i];
      refs[t].value->data[i] = saved + h;
      double lp = compute_loss();
      refs[t].value->data[i] = saved - h;
      double lm = compute_loss();
      refs[t].value->data[i] = saved;
      double slope_up = (lp - l0) / h;
      double slope_down = (l0 - lm) / h;
      double scale = std::max(1.0, std::max(std::abs(slope_up), std::abs(slope_down)));
      if (std::abs(slope_up - slope_down) > 1e-2 * scale) continue;  // kink straddled
      double fd = (lp - lm) / (2.0 * h);
      double a = analytic[t][i];
      double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

// Plain SGD classifier training over (input, class) pairs, batch size 1,
// deterministic order from the seed. Used by tests and the toy examples.
struct LabeledExample {
  Tensor input;
  size_t label = 0;
};

inline TrainLog train_classifier(Sequential& net, const std::vector<LabeledExample>& data,
                                 const TrainSchedule& schedule, uint64_t seed) {
  schedule.validate();
  if (data.empty()) throw std::invalid_argument("train_classifier: empty data");
  auto refs = net.params();
  Rng shuffle_rng(mix_seed(seed, 0x7261696e));
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainLog log;
  for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double lr = schedule.lr(epoch);
    double total = 0.0;
    for (size_t idx : order) {
      zero_grads(refs);
      Tensor logits = net.forward(data[idx].input);
      LossResult lr_res = softmax_cross_entropy(logits, data[idx].label);
      total += lr_res.loss;
      net.backward(lr_res.grad);
      sgd_step(refs, lr);
    }
    double mean = total / static_cast<double>(data.size());
    if (std::isnan(mean))
      throw TrainingDivergence("training diverged at epoch " + std::to_string(epoch));
    log.loss.push_back(mean);
  }
  return log;
}

}  // namespace glandflow
