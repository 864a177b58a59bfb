// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately re-derive results with different algorithms from the
// library implementations they check.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "glandflow/raster.hpp"
#include "glandflow/segmentation.hpp"

namespace gf_oracle {

using glandflow::BinaryMask;
using glandflow::GlandInstance;
using glandflow::PixelCoord;

// Recursive-style flood fill partition (stack based), returning per-pixel
// component labels numbered 1.. in row-major order of first encounter.
inline std::vector<int> flood_fill_labels(const BinaryMask& mask, int connectivity) {
  const int h = mask.height, w = mask.width;
  std::vector<int> labels(static_cast<size_t>(h) * w, 0);
  int next = 1;
  auto in_bounds = [&](int r, int c) { return r >= 0 && r < h && c >= 0 && c < w; };
  for (int sr = 0; sr < h; ++sr)
    for (int sc = 0; sc < w; ++sc) {
      if (!mask.at(sr, sc) || labels[static_cast<size_t>(sr) * w + sc]) continue;
      int id = next++;
      std::vector<std::pair<int, int>> stack{{sr, sc}};
      labels[static_cast<size_t>(sr) * w + sc] = id;
      while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            if (connectivity == 4 && dy != 0 && dx != 0) continue;
            int nr = r + dy, nc = c + dx;
            if (!in_bounds(nr, nc) || !mask.at(nr, nc)) continue;
            auto& l = labels[static_cast<size_t>(nr) * w + nc];
            if (!l) {
              l = id;
              stack.push_back({nr, nc});
            }
          }
      }
    }
  return labels;
}

inline int count_components(const BinaryMask& mask, int connectivity) {
  auto labels = flood_fill_labels(mask, connectivity);
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

// Layer-synchronous multi-source BFS with smallest-id tie-break; the
// independent model of region growing.
inline std::vector<int> multi_source_grow_oracle(const std::vector<GlandInstance>& instances,
                                                 const BinaryMask& epi) {
  const int h = epi.height, w = epi.width;
  std::vector<int> owner(static_cast<size_t>(h) * w, 0);
  std::vector<std::pair<int, int>> layer;
  for (const auto& inst : instances)
    for (const auto& p : inst.pixel_set) {
      owner[static_cast<size_t>(p.r) * w + p.c] = inst.id;
      layer.push_back({p.r, p.c});
    }
  const int dr[4] = {-1, 0, 0, 1}, dc[4] = {0, -1, 1, 0};
  while (!layer.empty()) {
    std::map<std::pair<int, int>, int> claims;  // pixel -> min id
    for (const auto& [r, c] : layer)
      for (int d = 0; d < 4; ++d) {
        int nr = r + dr[d], nc = c + dc[d];
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        size_t idx = static_cast<size_t>(nr) * w + nc;
        if (!epi.bits[idx] || owner[idx]) continue;
        int id = owner[static_cast<size_t>(r) * w + c];
        auto it = claims.find({nr, nc});
        if (it == claims.end() || id < it->second) claims[{nr, nc}] = id;
      }
    layer.clear();
    for (const auto& [px, id] : claims) {
      owner[static_cast<size_t>(px.first) * w + px.second] = id;
      layer.push_back(px);
    }
  }
  return owner;
}

// Holes of a pixel set: connected components (8-conn) of the complement within
// a 1-px padded bbox that do not touch the pad border.
inline int count_holes(const std::vector<PixelCoord>& pixels) {
  if (pixels.empty()) return 0;
  int r0 = pixels[0].r, r1 = pixels[0].r, c0 = pixels[0].c, c1 = pixels[0].c;
  for (const auto& p : pixels) {
    r0 = std::min(r0, p.r);
    r1 = std::max(r1, p.r);
    c0 = std::min(c0, p.c);
    c1 = std::max(c1, p.c);
  }
  int h = r1 - r0 + 3, w = c1 - c0 + 3;  // pad by one
  std::vector<uint8_t> grid(static_cast<size_t>(h) * w, 0);
  for (const auto& p : pixels) grid[static_cast<size_t>(p.r - r0 + 1) * w + (p.c - c0 + 1)] = 1;

  std::vector<int> comp(static_cast<size_t>(h) * w, -1);
  int n_comp = 0;
  std::vector<bool> touches_border;
  for (int sr = 0; sr < h; ++sr)
    for (int sc = 0; sc < w; ++sc) {
      size_t sidx = static_cast<size_t>(sr) * w + sc;
      if (grid[sidx] || comp[sidx] >= 0) continue;
      int id = n_comp++;
      touches_border.push_back(false);
      std::vector<std::pair<int, int>> stack{{sr, sc}};
      comp[sidx] = id;
      while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        if (r == 0 || r == h - 1 || c == 0 || c == w - 1) touches_border[id] = true;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            int nr = r + dy, nc = c + dx;
            if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
            size_t nidx = static_cast<size_t>(nr) * w + nc;
            if (!grid[nidx] && comp[nidx] < 0) {
              comp[nidx] = id;
              stack.push_back({nr, nc});
            }
          }
      }
    }
  int holes = 0;
  for (int i = 0; i < n_comp; ++i)
    if (!touches_border[i]) ++holes;
  return holes;
}

}  // namespace gf_oracle
