#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "glandflow/raster.hpp"
#include "glandflow/rng.hpp"
#include "glandflow/segmentation.hpp"

namespace glandflow {

// Caricature tissue: benign glands are undulated annuli with a two-layer wall
// of small nuclei; low-grade cancer glands are smooth single-lumen annuli with
// enlarged dark nuclei; high-grade glands are solid or multi-lumen blobs.
struct SynthSpec {
  int tile_size = 128;
  int min_glands = 2;
  int max_glands = 4;
  std::array<double, 3> class_mix = {1.0 / 3, 1.0 / 3, 1.0 / 3};  // BN, LG, HG

  double min_radius = 16.0;
  double max_radius = 22.0;
  double wall_min = 8.0;
  double wall_max = 10.0;
  double undulation_bn = 0.12;
  double undulation_lg = 0.03;
  double undulation_hg = 0.08;
  double hg_solid_prob = 0.35;
  int hg_min_lumens = 2;
  int hg_max_lumens = 3;

  double nucleus_density_bn = 0.055;  // stamp probability per wall pixel
  double nucleus_density_lg = 0.020;
  double nucleus_density_hg = 0.030;
  int nucleus_radius_bn = 1;
  int nucleus_radius_cn = 2;
  double noise_sigma = 4.0;

  uint64_t seed = 0;

  void validate() const {
    double mix_sum = class_mix[0] + class_mix[1] + class_mix[2];
    if (std::abs(mix_sum - 1.0) > 1e-9)
      throw std::invalid_argument("class_mix must sum to 1");
    if (tile_size < 32 || min_glands < 0 || max_glands < min_glands)
      throw std::invalid_argument("invalid synth geometry");
    if (min_radius <= 0 || max_radius < min_radius || wall_min <= 0 || wall_max < wall_min)
      throw std::invalid_argument("invalid gland geometry");
  }
};

struct SynthTile {
  Tile tile;
  LabelMap labels;
  std::vector<GlandInstance> instances;
  std::vector<PixelClass> instance_classes;  // parallel to instances
  BinaryMask epithelium;
  BinaryMask boundary;
  BinaryMask nuclei;
};

namespace detail {

struct GlandShape {
  PixelClass cls = PixelClass::BN;
  double cy = 0, cx = 0;
  double r0 = 0;
  double amp = 0, freq = 0, phase = 0;
  double wall = 0;
  bool solid = false;
  std::vector<std::array<double, 3>> lumens;  // y, x, radius

  double outer_radius(double theta) const {
    return r0 * (1.0 + amp * std::sin(freq * theta + phase));
  }
  double max_extent() const { return r0 * (1.0 + amp); }

  bool inside_outer(double y, double x) const {
    double dy = y - cy, dx = x - cx;
    double d = std::sqrt(dy * dy + dx * dx);
    return d <= outer_radius(std::atan2(dy, dx));
  }

  bool is_gland_pixel(double y, double x) const {
    double dy = y - cy, dx = x - cx;
    double d = std::sqrt(dy * dy + dx * dx);
    double R = outer_radius(std::atan2(dy, dx));
    if (d > R) return false;
    if (solid) return true;
    if (lumens.empty()) return d > R - wall;  // annulus
    for (const auto& l : lumens) {
      double ly = y - l[0], lx = x - l[1];
      if (ly * ly + lx * lx <= l[2] * l[2]) return false;
    }
    return true;
  }
};

inline bool is_four_connected(const std::vector<PixelCoord>& pixels) {
  if (pixels.empty()) return false;
  int r0 = pixels[0].r, r1 = pixels[0].r, c0 = pixels[0].c, c1 = pixels[0].c;
  for (const auto& p : pixels) {
    r0 = std::min(r0, p.r);
    r1 = std::max(r1, p.r);
    c0 = std::min(c0, p.c);
    c1 = std::max(c1, p.c);
  }
  int h = r1 - r0 + 1, w = c1 - c0 + 1;
  std::vector<uint8_t> grid(static_cast<size_t>(h) * w, 0);
  for (const auto& p : pixels) grid[static_cast<size_t>(p.r - r0) * w + (p.c - c0)] = 1;
  std::vector<PixelCoord> stack = {pixels[0]};
  grid[static_cast<size_t>(pixels[0].r - r0) * w + (pixels[0].c - c0)] = 2;
  size_t seen = 1;
  const int dr[4] = {-1, 0, 0, 1}, dc[4] = {0, -1, 1, 0};
  while (!stack.empty()) {
    PixelCoord p = stack.back();
    stack.pop_back();
    for (int d = 0; d < 4; ++d) {
      int nr = p.r + dr[d] - r0, nc = p.c + dc[d] - c0;
      if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
      if (grid[static_cast<size_t>(nr) * w + nc] == 1) {
        grid[static_cast<size_t>(nr) * w + nc] = 2;
        ++seen;
        stack.push_back({p.r + dr[d], p.c + dc[d]});
      }
    }
  }
  return seen == pixels.size();
}

// Gland pixels within Chebyshev distance <= band of a non-gland pixel.
inline std::vector<PixelCoord> perimeter_band(const std::vector<PixelCoord>& pixels, int band,
                                              int tile_size) {
  std::vector<uint8_t> in(static_cast<size_t>(tile_size) * tile_size, 0);
  for (const auto& p : pixels) in[static_cast<size_t>(p.r) * tile_size + p.c] = 1;
  std::vector<PixelCoord> out;
  for (const auto& p : pixels) {
    bool edge = false;
    for (int dy = -band; dy <= band && !edge; ++dy)
      for (int dx = -band; dx <= band && !edge; ++dx) {
        int nr = p.r + dy, nc = p.c + dx;
        if (nr < 0 || nr >= tile_size || nc < 0 || nc >= tile_size ||
            !in[static_cast<size_t>(nr) * tile_size + nc])
          edge = true;
      }
    if (edge) out.push_back(p);
  }
  return out;
}

inline PixelClass sample_class(Rng& rng, const std::array<double, 3>& mix) {
  double u = rng.uniform01();
  if (u < mix[0]) return PixelClass::BN;
  if (u < mix[0] + mix[1]) return PixelClass::LG;
  return PixelClass::HG;
}

struct ColorRGB {
  int r, g, b;
};

inline void put_color(Tile& t, int r, int c, ColorRGB col) {
  t.at(r, c, 0) = static_cast<uint8_t>(col.r);
  t.at(r, c, 1) = static_cast<uint8_t>(col.g);
  t.at(r, c, 2) = static_cast<uint8_t>(col.b);
}

}  // namespace detail

// One tile with full ground truth; deterministic for a given (spec.seed, index).
inline SynthTile generate_tile(const SynthSpec& spec, size_t index, const std::string& id) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, index));
  const int n = spec.tile_size;

  std::vector<detail::GlandShape> shapes;
  std::vector<std::vector<PixelCoord>> pixel_sets;
  std::vector<uint8_t> occupied(static_cast<size_t>(n) * n, 0);

  // jittered cell placement: one gland per shuffled grid cell keeps packing
  // feasible at every density the spec allows
  int cells_per_side = std::max(1, n / 64);
  double cell = static_cast<double>(n) / cells_per_side;
  std::vector<std::pair<double, double>> cell_centers;
  for (int cy = 0; cy < cells_per_side; ++cy)
    for (int cx = 0; cx < cells_per_side; ++cx)
      cell_centers.push_back({(cy + 0.5) * cell, (cx + 0.5) * cell});
  rng.shuffle(cell_centers);

  int target = static_cast<int>(rng.uniform_int(spec.min_glands, spec.max_glands));
  for (int g = 0; g < target; ++g) {
    PixelClass cls = detail::sample_class(rng, spec.class_mix);
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      detail::GlandShape s;
      s.cls = cls;
      s.r0 = rng.uniform(spec.min_radius, spec.max_radius);
      s.amp = cls == PixelClass::BN   ? spec.undulation_bn
              : cls == PixelClass::LG ? spec.undulation_lg
                                      : spec.undulation_hg;
      // undulation slope (amp * freq) is kept moderate so the wall's normal
      // thickness stays close to its radial thickness
      s.freq = cls == PixelClass::BN   ? static_cast<double>(rng.uniform_int(4, 6))
               : cls == PixelClass::LG ? static_cast<double>(rng.uniform_int(5, 9))
                                       : static_cast<double>(rng.uniform_int(3, 5));
      s.phase = rng.uniform(0.0, 2.0 * M_PI);
      s.wall = rng.uniform(spec.wall_min, spec.wall_max);
      if (cls == PixelClass::HG) s.solid = rng.uniform01() < spec.hg_solid_prob;

      int margin = static_cast<int>(std::ceil(s.max_extent())) + 3;
      if (2 * margin >= n) continue;
      if (static_cast<size_t>(g) < cell_centers.size()) {
        auto [base_y, base_x] = cell_centers[g];
        double jitter = std::max(0.0, cell / 2.0 - margin);
        s.cy = std::clamp(base_y + rng.uniform(-jitter, jitter),
                          static_cast<double>(margin), static_cast<double>(n - 1 - margin));
        s.cx = std::clamp(base_x + rng.uniform(-jitter, jitter),
                          static_cast<double>(margin), static_cast<double>(n - 1 - margin));
      } else {
        s.cy = static_cast<double>(rng.uniform_int(margin, n - 1 - margin));
        s.cx = static_cast<double>(rng.uniform_int(margin, n - 1 - margin));
      }

      bool clash = false;
      for (const auto& other : shapes) {
        double dy = s.cy - other.cy, dx = s.cx - other.cx;
        if (std::sqrt(dy * dy + dx * dx) < s.max_extent() + other.max_extent() + 4.0) {
          clash = true;
          break;
        }
      }
      if (clash) continue;

      if (cls == PixelClass::HG && !s.solid) {
        int k = static_cast<int>(rng.uniform_int(spec.hg_min_lumens, spec.hg_max_lumens));
        double inner = s.r0 * (1.0 - s.amp);
        for (int li = 0; li < k; ++li) {
          for (int la = 0; la < 40; ++la) {
            double lr = rng.uniform(2.0, 4.0);
            double maxd = inner - lr - 4.0;
            if (maxd <= 0) continue;
            double ang = rng.uniform(0.0, 2.0 * M_PI);
            double dist = rng.uniform(0.0, maxd);
            double ly = s.cy + dist * std::sin(ang), lx = s.cx + dist * std::cos(ang);
            bool lclash = false;
            for (const auto& o : s.lumens) {
              double ddy = ly - o[0], ddx = lx - o[1];
              if (std::sqrt(ddy * ddy + ddx * ddx) < lr + o[2] + 3.0) lclash = true;
            }
            if (!lclash) {
              s.lumens.push_back({ly, lx, lr});
              break;
            }
          }
        }
        if (s.lumens.size() < static_cast<size_t>(spec.hg_min_lumens)) continue;
      }

      // rasterize and validate
      std::vector<PixelCoord> pixels;
      int ext = static_cast<int>(std::ceil(s.max_extent())) + 1;
      for (int r = static_cast<int>(s.cy) - ext; r <= static_cast<int>(s.cy) + ext; ++r)
        for (int c = static_cast<int>(s.cx) - ext; c <= static_cast<int>(s.cx) + ext; ++c) {
          if (r < 0 || r >= n || c < 0 || c >= n) continue;
          if (s.is_gland_pixel(r, c)) pixels.push_back({r, c});
        }
      if (pixels.size() < 80 || !detail::is_four_connected(pixels)) continue;

      // the interior left after removing the 2-px perimeter must survive as
      // one seed component
      auto band = detail::perimeter_band(pixels, 2, n);
      std::vector<uint8_t> in_band(static_cast<size_t>(n) * n, 0);
      for (const auto& p : band) in_band[static_cast<size_t>(p.r) * n + p.c] = 1;
      std::vector<PixelCoord> interior;
      for (const auto& p : pixels)
        if (!in_band[static_cast<size_t>(p.r) * n + p.c]) interior.push_back(p);
      if (interior.size() < 80 || !detail::is_four_connected(interior)) continue;

      // no overlap and a >= 2 px gap to previously placed glands
      bool hits = false;
      for (const auto& p : pixels) {
        for (int dy = -2; dy <= 2 && !hits; ++dy)
          for (int dx = -2; dx <= 2 && !hits; ++dx) {
            int nr = p.r + dy, nc = p.c + dx;
            if (nr >= 0 && nr < n && nc >= 0 && nc < n &&
                occupied[static_cast<size_t>(nr) * n + nc])
              hits = true;
          }
        if (hits) break;
      }
      if (hits) continue;

      for (const auto& p : pixels) occupied[static_cast<size_t>(p.r) * n + p.c] = 1;
      shapes.push_back(s);
      pixel_sets.push_back(std::move(pixels));
      placed = true;
    }
  }
  if (static_cast<int>(shapes.size()) < spec.min_glands)
    throw std::runtime_error("synthetic generator: infeasible packing after bounded retries");

  SynthTile out;
  out.tile = Tile(n, n);
  out.tile.id = id;
  out.labels = LabelMap(n, n);
  out.epithelium = BinaryMask(n, n, MaskKind::Epithelium);
  out.boundary = BinaryMask(n, n, MaskKind::Boundary);
  out.nuclei = BinaryMask(n, n, MaskKind::Nuclei);

  // base texture: stroma everywhere, lumen interiors, gland walls
  const detail::ColorRGB stroma{232, 205, 215}, lumen{246, 244, 246}, wall{184, 148, 192};
  std::vector<int> owner(static_cast<size_t>(n) * n, -1);
  for (size_t gi = 0; gi < pixel_sets.size(); ++gi)
    for (const auto& p : pixel_sets[gi]) owner[static_cast<size_t>(p.r) * n + p.c] = static_cast<int>(gi);

  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      int o = owner[static_cast<size_t>(r) * n + c];
      if (o >= 0) {
        detail::put_color(out.tile, r, c, wall);
        continue;
      }
      bool in_lumen = false;
      for (const auto& s : shapes)
        if (s.inside_outer(r, c)) {
          in_lumen = true;
          break;
        }
      detail::put_color(out.tile, r, c, in_lumen ? lumen : stroma);
    }

  // nuclei: two small-dot layers for benign walls, large dark dots for cancer
  const detail::ColorRGB nuc_basal{70, 45, 110}, nuc_luminal{105, 70, 140}, nuc_cancer{55, 35, 95};
  for (size_t gi = 0; gi < shapes.size(); ++gi) {
    const auto& s = shapes[gi];
    double density = s.cls == PixelClass::BN   ? spec.nucleus_density_bn
                     : s.cls == PixelClass::LG ? spec.nucleus_density_lg
                                               : spec.nucleus_density_hg;
    int rad = s.cls == PixelClass::BN ? spec.nucleus_radius_bn : spec.nucleus_radius_cn;
    for (const auto& p : pixel_sets[gi]) {
      if (rng.uniform01() >= density) continue;
      detail::ColorRGB col = nuc_cancer;
      if (s.cls == PixelClass::BN) {
        double dy = p.r - s.cy, dx = p.c - s.cx;
        double d = std::sqrt(dy * dy + dx * dx);
        double R = s.outer_radius(std::atan2(dy, dx));
        col = (R - d) <= s.wall / 2.0 ? nuc_basal : nuc_luminal;
      }
      for (int dy = -rad; dy <= rad; ++dy)
        for (int dx = -rad; dx <= rad; ++dx) {
          if (dy * dy + dx * dx > rad * rad) continue;
          int nr = p.r + dy, nc = p.c + dx;
          if (nr < 0 || nr >= n || nc < 0 || nc >= n) continue;
          if (owner[static_cast<size_t>(nr) * n + nc] != static_cast<int>(gi)) continue;
          detail::put_color(out.tile, nr, nc, col);
          out.nuclei.at(nr, nc) = 1;
        }
    }
  }

  // photometric noise, drawn in scan order
  if (spec.noise_sigma > 0.0)
    for (auto& px : out.tile.pixels) {
      double v = px + rng.gaussian(0.0, spec.noise_sigma);
      px = static_cast<uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    }

  // ground truth rasters and instances
  for (size_t gi = 0; gi < shapes.size(); ++gi) {
    GlandInstance inst;
    inst.id = static_cast<int>(gi) + 1;
    inst.pixel_set = pixel_sets[gi];
    std::sort(inst.pixel_set.begin(), inst.pixel_set.end());
    inst.recompute_stats();
    inst.tile_id = id;
    for (const auto& p : inst.pixel_set) {
      out.epithelium.at(p.r, p.c) = 1;
      out.labels.at(p.r, p.c) = shapes[gi].cls;
    }
    for (const auto& p : detail::perimeter_band(pixel_sets[gi], 2, n)) out.boundary.at(p.r, p.c) = 1;
    out.instances.push_back(std::move(inst));
    out.instance_classes.push_back(shapes[gi].cls);
  }

  return out;
}

inline std::vector<SynthTile> generate(const SynthSpec& spec, size_t count,
                                       const std::string& id_prefix = "t") {
  std::vector<SynthTile> tiles;
  tiles.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04zu", id_prefix.c_str(), i);
    tiles.push_back(generate_tile(spec, i, buf));
  }
  return tiles;
}

}  // namespace glandflow
