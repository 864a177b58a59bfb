#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "glandflow/raster.hpp"
#include "glandflow/rng.hpp"

namespace glandflow {

// Geometric ops apply in the order: quarter turns, horizontal flip, vertical
// flip. Noise is additive i.i.d. Gaussian on the tile only, clamped to [0,255],
// drawn row-major with channels in R,G,B order from Rng(seed).
struct AugmentSpec {
  int rot_quarter_turns = 0;  // counterclockwise, 0..3
  bool flip_h = false;
  bool flip_v = false;
  double noise_sigma = 0.0;   // 0 disables noise
};

inline Tile rotate90_ccw(const Tile& in) {
  Tile out(in.width, in.height);
  out.magnification = in.magnification;
  out.pixel_size_um = in.pixel_size_um;
  out.id = in.id;
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      for (int ch = 0; ch < 3; ++ch)
        out.at(r, c, ch) = in.at(c, in.width - 1 - r, ch);
  return out;
}

inline LabelMap rotate90_ccw(const LabelMap& in) {
  LabelMap out(in.width, in.height);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) out.at(r, c) = in.at(c, in.width - 1 - r);
  return out;
}

inline void flip_horizontal(Tile& t) {
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width / 2; ++c)
      for (int ch = 0; ch < 3; ++ch) std::swap(t.at(r, c, ch), t.at(r, t.width - 1 - c, ch));
}

inline void flip_horizontal(LabelMap& m) {
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width / 2; ++c) std::swap(m.at(r, c), m.at(r, m.width - 1 - c));
}

inline void flip_vertical(Tile& t) {
  for (int r = 0; r < t.height / 2; ++r)
    for (int c = 0; c < t.width; ++c)
      for (int ch = 0; ch < 3; ++ch) std::swap(t.at(r, c, ch), t.at(t.height - 1 - r, c, ch));
}

inline void flip_vertical(LabelMap& m) {
  for (int r = 0; r < m.height / 2; ++r)
    for (int c = 0; c < m.width; ++c) std::swap(m.at(r, c), m.at(m.height - 1 - r, c));
}

inline void add_gaussian_noise(Tile& t, double sigma, uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
  if (sigma == 0.0) return;
  Rng rng(seed);
  for (size_t i = 0; i < t.pixels.size(); ++i) {
    double v = t.pixels[i] + rng.gaussian(0.0, sigma);
    t.pixels[i] = static_cast<uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
  }
}

inline std::pair<Tile, LabelMap> augment(const Tile& tile, const LabelMap& labels,
                                         const AugmentSpec& spec, uint64_t seed) {
  require_same_shape(tile.height, tile.width, labels.height, labels.width, "augment");
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
  Tile t = tile;
  LabelMap lm = labels;
  for (int k = 0; k < ((spec.rot_quarter_turns % 4) + 4) % 4; ++k) {
    t = rotate90_ccw(t);
    lm = rotate90_ccw(lm);
  }
  if (spec.flip_h) {
    flip_horizontal(t);
    flip_horizontal(lm);
  }
  if (spec.flip_v) {
    flip_vertical(t);
    flip_vertical(lm);
  }
  add_gaussian_noise(t, spec.noise_sigma, seed);
  return {std::move(t), std::move(lm)};
}

// Per-channel 256-bin target histogram for color matching.
struct Palette {
  std::array<std::array<uint64_t, 256>, 3> counts{};

  uint64_t channel_total(int ch) const {
    uint64_t n = 0;
    for (int v = 0; v < 256; ++v) n += counts[ch][v];
    return n;
  }
};

inline Palette palette_of(const Tile& t) {
  Palette p;
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c)
      for (int ch = 0; ch < 3; ++ch) p.counts[ch][t.at(r, c, ch)]++;
  return p;
}

// Text format: 3 lines of 256 integers (R, G, B).
inline Palette load_palette(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open palette file: " + path);
  Palette p;
  for (int ch = 0; ch < 3; ++ch)
    for (int v = 0; v < 256; ++v)
      if (!(in >> p.counts[ch][v]))
        throw std::runtime_error("palette file truncated or malformed: " + path);
  return p;
}

inline void save_palette(const Palette& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open palette file for writing: " + path);
  for (int ch = 0; ch < 3; ++ch) {
    for (int v = 0; v < 256; ++v) out << p.counts[ch][v] << (v == 255 ? '\n' : ' ');
  }
}

// Classical CDF matching: m(v) = min{ u : F_target(u) >= F_source(v) }.
// The comparison is exact (integer cross products), and the mapping is
// monotone non-decreasing per channel.
inline std::array<std::array<uint8_t, 256>, 3> histogram_match_luts(const Palette& source,
                                                                    const Palette& target) {
  std::array<std::array<uint8_t, 256>, 3> luts;
  for (int ch = 0; ch < 3; ++ch) {
    uint64_t ns = source.channel_total(ch);
    uint64_t nt = target.channel_total(ch);
    if (nt == 0) throw std::invalid_argument("empty palette channel");
    uint64_t cum_s = 0;
    int u = 0;
    uint64_t cum_t = target.counts[ch][0];
    for (int v = 0; v < 256; ++v) {
      cum_s += source.counts[ch][v];
      // advance u until F_t(u) >= F_s(v), i.e. cum_t * ns >= cum_s * nt
      while (u < 255 && static_cast<unsigned __int128>(cum_t) * ns <
                            static_cast<unsigned __int128>(cum_s) * nt) {
        ++u;
        cum_t += target.counts[ch][u];
      }
      luts[ch][v] = static_cast<uint8_t>(u);
    }
  }
  return luts;
}

inline Tile histogram_match(const Tile& source, const Palette& target) {
  auto luts = histogram_match_luts(palette_of(source), target);
  Tile out = source;
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = luts[ch][out.at(r, c, ch)];
  return out;
}

// 2x2 box mean with round-half-up; 20X -> 10X, pixel size doubles.
inline Tile downsample2x(const Tile& t) {
  if (t.height % 2 != 0 || t.width % 2 != 0)
    throw std::invalid_argument("downsample2x requires even dimensions");
  Tile out(t.height / 2, t.width / 2);
  out.magnification = Magnification::X10;
  out.pixel_size_um = t.pixel_size_um * 2.0;
  out.id = t.id;
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        int sum = t.at(2 * r, 2 * c, ch) + t.at(2 * r, 2 * c + 1, ch) +
                  t.at(2 * r + 1, 2 * c, ch) + t.at(2 * r + 1, 2 * c + 1, ch);
        out.at(r, c, ch) = static_cast<uint8_t>((sum + 2) / 4);
      }
  return out;
}

// Mask downsampling: output pixel true iff at least 2 of the 2x2 block are true.
inline BinaryMask downsample2x(const BinaryMask& m) {
  if (m.height % 2 != 0 || m.width % 2 != 0)
    throw std::invalid_argument("downsample2x requires even dimensions");
  BinaryMask out(m.height / 2, m.width / 2, m.kind);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      int n = m.at(2 * r, 2 * c) + m.at(2 * r, 2 * c + 1) + m.at(2 * r + 1, 2 * c) +
              m.at(2 * r + 1, 2 * c + 1);
      out.at(r, c) = n >= 2 ? 1 : 0;
    }
  return out;
}

// Marks exactly floor(0.1 * H * W) lowest-luminance pixels; ties at the
// threshold are taken in row-major scan order.
inline BinaryMask darkest_decile_mask(const Tile& t) {
  if (t.pixel_count() == 0) throw std::invalid_argument("empty tile");
  size_t n = t.pixel_count() / 10;
  BinaryMask mask(t.height, t.width, MaskKind::Nuclei);

  std::array<size_t, 256> hist{};
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c) hist[luminance(t, r, c)]++;

  size_t cum = 0;
  int threshold = 0;
  while (threshold < 256 && cum + hist[threshold] < n) {
    cum += hist[threshold];
    ++threshold;
  }
  // all pixels with luminance < threshold are in; (n - cum) ties at threshold
  size_t ties_left = n - cum;
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c) {
      int lum = luminance(t, r, c);
      if (lum < threshold) {
        mask.at(r, c) = 1;
      } else if (lum == threshold && ties_left > 0) {
        mask.at(r, c) = 1;
        --ties_left;
      }
    }
  return mask;
}

}  // namespace glandflow
