#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "glandflow/tensor.hpp"

namespace glandflow {

// Named view onto a layer's parameter and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

// Snapshot of named parameters; the unit of checkpointing.
struct ParamSet {
  std::map<std::string, Tensor> values;
  uint64_t rng_seed = 0;
};

inline ParamSet snapshot_params(const std::vector<ParamRef>& refs, uint64_t rng_seed) {
  ParamSet ps;
  ps.rng_seed = rng_seed;
  for (const auto& r : refs) {
    if (ps.values.count(r.name)) throw std::invalid_argument("duplicate parameter name: " + r.name);
    ps.values[r.name] = *r.value;
  }
  return ps;
}

inline void restore_params(const std::vector<ParamRef>& refs, const ParamSet& ps) {
  for (const auto& r : refs) {
    auto it = ps.values.find(r.name);
    if (it == ps.values.end()) throw std::invalid_argument("missing parameter: " + r.name);
    if (it->second.shape != r.value->shape)
      throw std::invalid_argument("parameter shape mismatch: " + r.name);
    *r.value = it->second;
  }
}

// Text checkpoint, one tensor per record; %.17g round-trips doubles exactly.
inline void save_checkpoint(const ParamSet& ps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << "glandflow-params v1\n";
  out << "seed " << ps.rng_seed << "\n";
  out << "tensors " << ps.values.size() << "\n";
  char buf[40];
  for (const auto& [name, t] : ps.values) {
    out << "tensor " << name << " " << t.shape.size();
    for (size_t d : t.shape) out << " " << d;
    out << "\n";
    for (size_t i = 0; i < t.data.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t.data[i]);
      out << buf << (i + 1 == t.data.size() ? '\n' : ' ');
    }
    if (t.data.empty()) out << "\n";
  }
}

inline ParamSet load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "glandflow-params" || version != "v1")
    throw std::runtime_error("unrecognized checkpoint format: " + path);
  std::string key;
  ParamSet ps;
  size_t count = 0;
  in >> key >> ps.rng_seed;
  if (key != "seed") throw std::runtime_error("malformed checkpoint: " + path);
  in >> key >> count;
  if (key != "tensors") throw std::runtime_error("malformed checkpoint: " + path);
  for (size_t i = 0; i < count; ++i) {
    std::string name;
    size_t ndim = 0;
    in >> key >> name >> ndim;
    if (key != "tensor") throw std::runtime_error("malformed checkpoint: " + path);
    std::vector<size_t> shape(ndim);
    for (auto& d : shape) in >> d;
    Tensor t(shape);
    for (auto& v : t.data) in >> v;
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    ps.values[name] = std::move(t);
  }
  return ps;
}

}  // namespace glandflow
