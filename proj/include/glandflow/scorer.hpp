#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "glandflow/nn/layers.hpp"
#include "glandflow/nn/losses.hpp"
#include "glandflow/nn/params.hpp"
#include "glandflow/nn/train.hpp"
#include "glandflow/png_io.hpp"
#include "glandflow/raster.hpp"
#include "glandflow/segmentation.hpp"

namespace glandflow {

// (3,H,W) tensor with channel values scaled to [0,1].
inline Tensor tile_to_tensor(const Tile& t) {
  Tensor x({3, static_cast<size_t>(t.height), static_cast<size_t>(t.width)});
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < t.height; ++r)
      for (int c = 0; c < t.width; ++c)
        x.at3(ch, r, c) = t.at(r, c, ch) / 255.0;
  return x;
}

inline Tensor crop_tile_tensor(const Tile& t, int r0, int c0, int size) {
  Tensor x({3, static_cast<size_t>(size), static_cast<size_t>(size)});
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        x.at3(ch, r, c) = t.at(r0 + r, c0 + c, ch) / 255.0;
  return x;
}

inline Tensor crop_mask_tensor(const BinaryMask& m, int r0, int c0, int size) {
  Tensor x({1, static_cast<size_t>(size), static_cast<size_t>(size)});
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) x.at3(0, r, c) = m.at(r0 + r, c0 + c) ? 1.0 : 0.0;
  return x;
}

// Reads precomputed score maps: <dir>/<tile_id>_epithelium.png and
// <dir>/<tile_id>_boundary.png, 16-bit gray, value/65535 = score.
class FileBackedScorer : public PixelScorer {
 public:
  explicit FileBackedScorer(std::string dir) : dir_(std::move(dir)) {}

  std::pair<ScoreMap, ScoreMap> score(const Tile& tile) const override {
    return {load_map(tile, "epithelium", ScoreKind::Epithelium),
            load_map(tile, "boundary", ScoreKind::Boundary)};
  }

 private:
  ScoreMap load_map(const Tile& tile, const char* suffix, ScoreKind kind) const {
    int h = 0, w = 0;
    auto vals = load_u16(dir_ + "/" + tile.id + "_" + suffix + ".png", h, w);
    ScoreMap sm(h, w, kind);
    for (size_t i = 0; i < vals.size(); ++i) sm.values[i] = vals[i] / 65535.0;
    return sm;
  }

  std::string dir_;
};

inline void save_score_map(const ScoreMap& sm, const std::string& path) {
  std::vector<uint16_t> vals(sm.values.size());
  for (size_t i = 0; i < vals.size(); ++i)
    vals[i] = static_cast<uint16_t>(std::lround(std::clamp(sm.values[i], 0.0, 1.0) * 65535.0));
  save_u16(vals, sm.height, sm.width, path);
}

namespace detail {

inline void build_score_net(Sequential& net, int channels, const std::string& prefix) {
  net.add<Conv2D>(3, channels, prefix + ".conv_in");
  net.add<ReLU>();
  net.add<ResidualBlock>(channels, prefix + ".res");
  net.add<Conv2D>(channels, 1, prefix + ".conv_out");
}

}  // namespace detail

// Small fully convolutional scorer: two identically structured nets produce
// epithelium and boundary logits; sigmoid maps them to [0,1].
class ConvScorer : public PixelScorer {
 public:
  explicit ConvScorer(int channels = 8) : channels_(channels) {
    detail::build_score_net(epi_net_, channels, "epi");
    detail::build_score_net(bnd_net_, channels, "bnd");
  }

  void init(uint64_t seed) {
    seed_ = seed;
    Rng rng(seed);
    epi_net_.init(rng);
    bnd_net_.init(rng);
  }

  std::pair<ScoreMap, ScoreMap> score(const Tile& tile) const override {
    Tensor x = tile_to_tensor(tile);
    return {run(epi_net_, x, tile, ScoreKind::Epithelium),
            run(bnd_net_, x, tile, ScoreKind::Boundary)};
  }

  Sequential& epithelium_net() { return epi_net_; }
  Sequential& boundary_net() { return bnd_net_; }
  int channels() const { return channels_; }

  ParamSet params() const {
    std::vector<ParamRef> refs;
    epi_net_.collect_params(refs);
    bnd_net_.collect_params(refs);
    return snapshot_params(refs, seed_);
  }

  void load(const ParamSet& ps) {
    std::vector<ParamRef> refs;
    epi_net_.collect_params(refs);
    bnd_net_.collect_params(refs);
    restore_params(refs, ps);
    seed_ = ps.rng_seed;
  }

 private:
  static ScoreMap run(Sequential& net, const Tensor& x, const Tile& tile, ScoreKind kind) {
    Tensor logits = net.forward(x);
    ScoreMap sm(tile.height, tile.width, kind);
    for (size_t i = 0; i < sm.values.size(); ++i) sm.values[i] = sigmoid(logits.data[i]);
    return sm;
  }

  int channels_;
  uint64_t seed_ = 0;
  mutable Sequential epi_net_, bnd_net_;
};

struct SegmenterTrainConfig {
  int channels = 8;
  int patch_size = 64;
  int patches_per_epoch = 32;
  TrainSchedule schedule{0.25, 40, 0.5, 120};
};

struct SegmenterData {
  const std::vector<Tile>* tiles = nullptr;
  const std::vector<BinaryMask>* epithelium = nullptr;
  const std::vector<BinaryMask>* boundary = nullptr;
};

// Trains both nets on random square patches; per-pixel binary cross-entropy.
inline std::pair<TrainLog, TrainLog> train_segmenter(ConvScorer& scorer, const SegmenterData& data,
                                                     const SegmenterTrainConfig& cfg,
                                                     uint64_t seed) {
  cfg.schedule.validate();
  if (!data.tiles || data.tiles->empty()) throw std::invalid_argument("train_segmenter: no tiles");
  if (data.tiles->size() != data.epithelium->size() ||
      data.tiles->size() != data.boundary->size())
    throw std::invalid_argument("train_segmenter: data size mismatch");

  scorer.init(seed);
  auto epi_refs = scorer.epithelium_net().params();
  auto bnd_refs = scorer.boundary_net().params();
  Rng rng(mix_seed(seed, 0x5e67));

  TrainLog epi_log, bnd_log;
  for (int epoch = 0; epoch < cfg.schedule.max_epochs; ++epoch) {
    double lr = cfg.schedule.lr(epoch);
    double epi_total = 0.0, bnd_total = 0.0;
    for (int i = 0; i < cfg.patches_per_epoch; ++i) {
      size_t ti = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(data.tiles->size()) - 1));
      const Tile& tile = (*data.tiles)[ti];
      int ps = std::min({cfg.patch_size, tile.height, tile.width});
      int r0 = static_cast<int>(rng.uniform_int(0, tile.height - ps));
      int c0 = static_cast<int>(rng.uniform_int(0, tile.width - ps));
      Tensor x = crop_tile_tensor(tile, r0, c0, ps);
      Tensor epi_target = crop_mask_tensor((*data.epithelium)[ti], r0, c0, ps);
      Tensor bnd_target = crop_mask_tensor((*data.boundary)[ti], r0, c0, ps);

      zero_grads(epi_refs);
      auto epi_res = bce_with_logits(scorer.epithelium_net().forward(x), epi_target);
      scorer.epithelium_net().backward(epi_res.grad);
      sgd_step(epi_refs, lr);
      epi_total += epi_res.loss;

      zero_grads(bnd_refs);
      auto bnd_res = bce_with_logits(scorer.boundary_net().forward(x), bnd_target);
      scorer.boundary_net().backward(bnd_res.grad);
      sgd_step(bnd_refs, lr);
      bnd_total += bnd_res.loss;
    }
    double epi_mean = epi_total / cfg.patches_per_epoch;
    double bnd_mean = bnd_total / cfg.patches_per_epoch;
    if (std::isnan(epi_mean) || std::isnan(bnd_mean))
      throw TrainingDivergence("segmenter training diverged at epoch " + std::to_string(epoch));
    epi_log.loss.push_back(epi_mean);
    bnd_log.loss.push_back(bnd_mean);
  }
  return {epi_log, bnd_log};
}

// Fraction of pixels whose thresholded score agrees with the mask.
inline double score_accuracy(const ScoreMap& sm, const BinaryMask& truth, double threshold = 0.5) {
  size_t agree = 0;
  for (size_t i = 0; i < sm.values.size(); ++i)
    agree += (sm.values[i] >= threshold) == (truth.bits[i] != 0);
  return static_cast<double>(agree) / static_cast<double>(sm.values.size());
}

}  // namespace glandflow
