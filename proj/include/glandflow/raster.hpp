#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace glandflow {

enum class Magnification { X20, X10 };

enum class PixelClass : uint8_t { ST = 0, BN = 1, LG = 2, HG = 3 };

inline const char* class_name(PixelClass c) {
  switch (c) {
    case PixelClass::ST: return "ST";
    case PixelClass::BN: return "BN";
    case PixelClass::LG: return "LG";
    case PixelClass::HG: return "HG";
  }
  return "?";
}

inline PixelClass class_from_name(const std::string& s) {
  if (s == "ST") return PixelClass::ST;
  if (s == "BN") return PixelClass::BN;
  if (s == "LG") return PixelClass::LG;
  if (s == "HG") return PixelClass::HG;
  throw std::invalid_argument("unknown class name: " + s);
}

// Severity order used for tie-breaking: HG > LG > BN > ST.
inline int class_severity(PixelClass c) { return static_cast<int>(c); }

constexpr std::array<PixelClass, 4> kAllClasses = {PixelClass::ST, PixelClass::BN,
                                                   PixelClass::LG, PixelClass::HG};

// RGB raster patch of tissue at a stated magnification.
struct Tile {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // row-major, 3 bytes per pixel (R,G,B)
  Magnification magnification = Magnification::X20;
  double pixel_size_um = 0.5;
  std::string id;

  Tile() = default;
  Tile(int h, int w, uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, fill) {}

  size_t offset(int r, int c) const { return (static_cast<size_t>(r) * width + c) * 3; }
  uint8_t& at(int r, int c, int ch) { return pixels[offset(r, c) + ch]; }
  uint8_t at(int r, int c, int ch) const { return pixels[offset(r, c) + ch]; }

  size_t pixel_count() const { return static_cast<size_t>(height) * width; }
};

// Integer mean of R,G,B; the luminance used for "darkest" ordering.
inline int luminance(const Tile& t, int r, int c) {
  return (static_cast<int>(t.at(r, c, 0)) + t.at(r, c, 1) + t.at(r, c, 2)) / 3;
}

// Per-pixel class raster matching an owning tile's shape.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<PixelClass> labels;

  LabelMap() = default;
  LabelMap(int h, int w, PixelClass fill = PixelClass::ST)
      : height(h), width(w), labels(static_cast<size_t>(h) * w, fill) {}

  PixelClass& at(int r, int c) { return labels[static_cast<size_t>(r) * width + c]; }
  PixelClass at(int r, int c) const { return labels[static_cast<size_t>(r) * width + c]; }
};

enum class MaskKind { Epithelium, Boundary, Nuclei, GlandPixels };

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> bits;  // 0 or 1
  MaskKind kind = MaskKind::GlandPixels;

  BinaryMask() = default;
  BinaryMask(int h, int w, MaskKind k = MaskKind::GlandPixels)
      : height(h), width(w), bits(static_cast<size_t>(h) * w, 0), kind(k) {}

  uint8_t& at(int r, int c) { return bits[static_cast<size_t>(r) * width + c]; }
  uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c]; }

  size_t count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
  }
};

inline void require_same_shape(int h1, int w1, int h2, int w2, const char* what) {
  if (h1 != h2 || w1 != w2)
    throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

}  // namespace glandflow
