#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "glandflow/raster.hpp"

namespace glandflow {

enum class ScoreKind { Epithelium, Boundary };

// Per-pixel scores in [0,1].
struct ScoreMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  ScoreKind kind = ScoreKind::Epithelium;

  ScoreMap() = default;
  ScoreMap(int h, int w, ScoreKind k)
      : height(h), width(w), values(static_cast<size_t>(h) * w, 0.0), kind(k) {}

  double& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
};

struct PixelCoord {
  int r = 0;
  int c = 0;
  auto operator<=>(const PixelCoord&) const = default;
};

// One segmented gland: pixel set (sorted row-major), area, tight bbox.
struct GlandInstance {
  int id = 0;
  std::vector<PixelCoord> pixel_set;
  int area_px = 0;
  int r0 = 0, c0 = 0, r1 = 0, c1 = 0;  // inclusive bbox
  std::string tile_id;

  void recompute_stats() {
    area_px = static_cast<int>(pixel_set.size());
    if (pixel_set.empty()) return;
    r0 = r1 = pixel_set[0].r;
    c0 = c1 = pixel_set[0].c;
    for (const auto& p : pixel_set) {
      r0 = std::min(r0, p.r);
      r1 = std::max(r1, p.r);
      c0 = std::min(c0, p.c);
      c1 = std::max(c1, p.c);
    }
  }

  PixelCoord centroid() const {
    long sr = 0, sc = 0;
    for (const auto& p : pixel_set) {
      sr += p.r;
      sc += p.c;
    }
    int n = std::max<int>(1, static_cast<int>(pixel_set.size()));
    return {static_cast<int>(sr / n), static_cast<int>(sc / n)};
  }
};

struct SegmentationConfig {
  double binarize_threshold = 0.5;
  int min_component_area_px = 64;
  int connectivity = 4;  // 4 or 8

  void validate() const {
    if (binarize_threshold <= 0.0 || binarize_threshold >= 1.0)
      throw std::invalid_argument("binarize_threshold must be in (0,1)");
    if (min_component_area_px <= 0)
      throw std::invalid_argument("min_component_area_px must be positive");
    if (connectivity != 4 && connectivity != 8)
      throw std::invalid_argument("connectivity must be 4 or 8");
  }
};

// mask = (epi >= t) AND NOT (bnd >= t)
inline BinaryMask subtract_boundary(const ScoreMap& epi, const ScoreMap& bnd,
                                    const SegmentationConfig& cfg) {
  require_same_shape(epi.height, epi.width, bnd.height, bnd.width, "subtract_boundary");
  double t = cfg.binarize_threshold;
  BinaryMask mask(epi.height, epi.width, MaskKind::GlandPixels);
  for (size_t i = 0; i < mask.bits.size(); ++i)
    mask.bits[i] = (epi.values[i] >= t && !(bnd.values[i] >= t)) ? 1 : 0;
  return mask;
}

inline BinaryMask binarize(const ScoreMap& sm, double threshold, MaskKind kind) {
  BinaryMask mask(sm.height, sm.width, kind);
  for (size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] = sm.values[i] >= threshold ? 1 : 0;
  return mask;
}

// BFS labeling; ids are assigned from 1 in row-major order of each
// component's first pixel.
inline std::vector<GlandInstance> connected_components(const BinaryMask& mask,
                                                       const SegmentationConfig& cfg) {
  cfg.validate();
  const int h = mask.height, w = mask.width;
  std::vector<int> label(static_cast<size_t>(h) * w, 0);
  std::vector<GlandInstance> instances;
  int next_id = 1;

  const int dr4[4] = {-1, 0, 0, 1};
  const int dc4[4] = {0, -1, 1, 0};
  const int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const int dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const int n_dirs = cfg.connectivity == 4 ? 4 : 8;
  const int* dr = cfg.connectivity == 4 ? dr4 : dr8;
  const int* dc = cfg.connectivity == 4 ? dc4 : dc8;

  std::vector<PixelCoord> queue;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      size_t idx = static_cast<size_t>(r) * w + c;
      if (!mask.bits[idx] || label[idx]) continue;
      GlandInstance inst;
      inst.id = next_id++;
      queue.clear();
      queue.push_back({r, c});
      label[idx] = inst.id;
      for (size_t qi = 0; qi < queue.size(); ++qi) {
        PixelCoord p = queue[qi];
        inst.pixel_set.push_back(p);
        for (int d = 0; d < n_dirs; ++d) {
          int nr = p.r + dr[d], nc = p.c + dc[d];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          size_t nidx = static_cast<size_t>(nr) * w + nc;
          if (mask.bits[nidx] && !label[nidx]) {
            label[nidx] = inst.id;
            queue.push_back({nr, nc});
          }
        }
      }
      std::sort(inst.pixel_set.begin(), inst.pixel_set.end());
      inst.recompute_stats();
      instances.push_back(std::move(inst));
    }
  return instances;
}

// Keeps instances with area >= the configured minimum; ids are preserved.
inline std::vector<GlandInstance> remove_small(std::vector<GlandInstance> instances,
                                               const SegmentationConfig& cfg) {
  std::vector<GlandInstance> kept;
  for (auto& inst : instances)
    if (inst.area_px >= cfg.min_component_area_px) kept.push_back(std::move(inst));
  return kept;
}

// Synchronous dilation restricted to the epithelium mask. In each round every
// unassigned epithelium pixel 4-adjacent to at least one instance joins the
// adjacent instance with the smallest id, all decisions reading the previous
// round's state. Stops when no unassigned epithelium pixel touches any
// instance.
inline std::vector<GlandInstance> region_grow(std::vector<GlandInstance> instances,
                                              const BinaryMask& epi_mask) {
  const int h = epi_mask.height, w = epi_mask.width;
  std::vector<int> owner(static_cast<size_t>(h) * w, 0);
  for (const auto& inst : instances)
    for (const auto& p : inst.pixel_set) {
      if (p.r < 0 || p.r >= h || p.c < 0 || p.c >= w || !epi_mask.at(p.r, p.c))
        throw std::invalid_argument("region_grow: instance pixel outside epithelium mask");
      owner[static_cast<size_t>(p.r) * w + p.c] = inst.id;
    }

  std::unordered_map<int, GlandInstance*> by_id;
  for (auto& inst : instances) by_id[inst.id] = &inst;

  const int dr[4] = {-1, 0, 0, 1};
  const int dc[4] = {0, -1, 1, 0};

  std::vector<PixelCoord> frontier;
  for (const auto& inst : instances)
    frontier.insert(frontier.end(), inst.pixel_set.begin(), inst.pixel_set.end());

  std::vector<uint8_t> queued(static_cast<size_t>(h) * w, 0);
  while (!frontier.empty()) {
    // candidates: unassigned epithelium neighbors of the current frontier
    std::vector<PixelCoord> candidates;
    for (const auto& p : frontier)
      for (int d = 0; d < 4; ++d) {
        int nr = p.r + dr[d], nc = p.c + dc[d];
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        size_t nidx = static_cast<size_t>(nr) * w + nc;
        if (!epi_mask.bits[nidx] || owner[nidx] || queued[nidx]) continue;
        queued[nidx] = 1;
        candidates.push_back({nr, nc});
      }
    // commit after all decisions so the round is synchronous
    std::vector<std::pair<PixelCoord, int>> assignments;
    for (const auto& p : candidates) {
      int best = 0;
      for (int d = 0; d < 4; ++d) {
        int nr = p.r + dr[d], nc = p.c + dc[d];
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        int o = owner[static_cast<size_t>(nr) * w + nc];
        if (o && (best == 0 || o < best)) best = o;
      }
      assignments.push_back({p, best});
    }
    frontier.clear();
    for (const auto& [p, id] : assignments) {
      owner[static_cast<size_t>(p.r) * w + p.c] = id;
      queued[static_cast<size_t>(p.r) * w + p.c] = 0;
      frontier.push_back(p);
      by_id.at(id)->pixel_set.push_back(p);
    }
  }

  for (auto& inst : instances) {
    std::sort(inst.pixel_set.begin(), inst.pixel_set.end());
    inst.recompute_stats();
  }
  return instances;
}

// Abstract source of epithelium and boundary score maps.
class PixelScorer {
 public:
  virtual ~PixelScorer() = default;
  virtual std::pair<ScoreMap, ScoreMap> score(const Tile& tile) const = 0;
};

inline std::pair<ScoreMap, ScoreMap> score_pixels(const Tile& tile, const PixelScorer& scorer) {
  auto maps = scorer.score(tile);
  if (maps.first.height != tile.height || maps.first.width != tile.width ||
      maps.second.height != tile.height || maps.second.width != tile.width)
    throw std::invalid_argument("scorer output shape does not match tile");
  return maps;
}

// score -> subtract -> components -> remove_small -> region_grow
inline std::vector<GlandInstance> segment_tile(const Tile& tile, const PixelScorer& scorer,
                                               const SegmentationConfig& cfg) {
  cfg.validate();
  auto [epi, bnd] = score_pixels(tile, scorer);
  BinaryMask seeds = subtract_boundary(epi, bnd, cfg);
  auto instances = connected_components(seeds, cfg);
  instances = remove_small(std::move(instances), cfg);
  BinaryMask epi_mask = binarize(epi, cfg.binarize_threshold, MaskKind::Epithelium);
  instances = region_grow(std::move(instances), epi_mask);
  for (auto& inst : instances) inst.tile_id = tile.id;
  return instances;
}

// Label raster with one id per pixel, 0 = background.
inline std::vector<uint16_t> instance_raster(const std::vector<GlandInstance>& instances,
                                             int height, int width) {
  std::vector<uint16_t> raster(static_cast<size_t>(height) * width, 0);
  for (const auto& inst : instances)
    for (const auto& p : inst.pixel_set)
      raster[static_cast<size_t>(p.r) * width + p.c] = static_cast<uint16_t>(inst.id);
  return raster;
}

inline std::vector<GlandInstance> instances_from_raster(const std::vector<uint16_t>& raster,
                                                        int height, int width) {
  std::vector<GlandInstance> instances;
  std::vector<int> index_of_id;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      uint16_t id = raster[static_cast<size_t>(r) * width + c];
      if (!id) continue;
      if (index_of_id.size() <= static_cast<size_t>(id)) index_of_id.resize(id + 1, -1);
      if (index_of_id[id] < 0) {
        index_of_id[id] = static_cast<int>(instances.size());
        GlandInstance inst;
        inst.id = id;
        instances.push_back(std::move(inst));
      }
      instances[index_of_id[id]].pixel_set.push_back({r, c});
    }
  for (auto& inst : instances) inst.recompute_stats();
  return instances;
}

}  // namespace glandflow
