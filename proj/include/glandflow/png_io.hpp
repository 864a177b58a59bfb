#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "glandflow/raster.hpp"

namespace glandflow {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct RawImage {
  int width = 0;
  int height = 0;
  int bit_depth = 0;   // 8 or 16
  int channels = 0;    // 1 or 3
  std::vector<uint8_t> bytes;  // row-major; 16-bit stored big-endian as in PNG
};

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

inline RawImage read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open for reading: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw IoError("not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  int color_type = png_get_color_type(png, info);
  RawImage img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_RGB) {
    img.channels = 3;
  } else if (color_type == PNG_COLOR_TYPE_GRAY) {
    img.channels = 1;
  } else {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG color type in " + path);
  }
  if (img.bit_depth != 8 && img.bit_depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG bit depth in " + path);
  }

  size_t row_bytes = png_get_rowbytes(png, info);
  img.bytes.resize(row_bytes * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = img.bytes.data() + row_bytes * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const std::string& path, const RawImage& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG: " + path);
  }

  png_init_io(png, fp.get());
  int color_type = img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, img.width, img.height, img.bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  size_t row_bytes = static_cast<size_t>(img.width) * img.channels * (img.bit_depth / 8);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r)
    rows[r] = const_cast<png_bytep>(img.bytes.data() + row_bytes * r);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

// 8-bit RGB PNG -> Tile. Magnification metadata is not stored in PNG; loaded
// tiles are 20X with 0.5 um pixels unless the caller overrides.
inline Tile load_tile(const std::string& path, const std::string& id = "") {
  detail::RawImage img = detail::read_png(path);
  if (img.channels != 3 || img.bit_depth != 8)
    throw IoError("tile must be 8-bit RGB PNG: " + path);
  Tile t(img.height, img.width);
  t.pixels = std::move(img.bytes);
  if (!id.empty()) {
    t.id = id;
  } else {
    size_t slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    t.id = dot == std::string::npos ? base : base.substr(0, dot);
  }
  return t;
}

inline void save_tile(const Tile& t, const std::string& path) {
  detail::RawImage img;
  img.width = t.width;
  img.height = t.height;
  img.bit_depth = 8;
  img.channels = 3;
  img.bytes = t.pixels;
  detail::write_png(path, img);
}

// Binary mask as 8-bit gray, 0 = false, 255 = true.
inline void save_mask(const BinaryMask& m, const std::string& path) {
  detail::RawImage img;
  img.width = m.width;
  img.height = m.height;
  img.bit_depth = 8;
  img.channels = 1;
  img.bytes.resize(m.bits.size());
  for (size_t i = 0; i < m.bits.size(); ++i) img.bytes[i] = m.bits[i] ? 255 : 0;
  detail::write_png(path, img);
}

inline BinaryMask load_binary_mask(const std::string& path, MaskKind kind) {
  detail::RawImage img = detail::read_png(path);
  if (img.channels != 1 || img.bit_depth != 8)
    throw IoError("mask must be 8-bit gray PNG: " + path);
  BinaryMask m(img.height, img.width, kind);
  for (size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = img.bytes[i] ? 1 : 0;
  return m;
}

// Label map as 8-bit gray with ST=0, BN=1, LG=2, HG=3.
inline void save_mask(const LabelMap& lm, const std::string& path) {
  detail::RawImage img;
  img.width = lm.width;
  img.height = lm.height;
  img.bit_depth = 8;
  img.channels = 1;
  img.bytes.resize(lm.labels.size());
  for (size_t i = 0; i < lm.labels.size(); ++i)
    img.bytes[i] = static_cast<uint8_t>(lm.labels[i]);
  detail::write_png(path, img);
}

inline LabelMap load_label_map(const std::string& path) {
  detail::RawImage img = detail::read_png(path);
  if (img.channels != 1 || img.bit_depth != 8)
    throw IoError("label map must be 8-bit gray PNG: " + path);
  LabelMap lm(img.height, img.width);
  for (size_t i = 0; i < lm.labels.size(); ++i) {
    if (img.bytes[i] > 3) throw IoError("label value out of range in " + path);
    lm.labels[i] = static_cast<PixelClass>(img.bytes[i]);
  }
  return lm;
}

// 16-bit single-channel rasters: score maps (value/65535) and instance ids.
inline void save_u16(const std::vector<uint16_t>& values, int height, int width,
                     const std::string& path) {
  detail::RawImage img;
  img.width = width;
  img.height = height;
  img.bit_depth = 16;
  img.channels = 1;
  img.bytes.resize(values.size() * 2);
  for (size_t i = 0; i < values.size(); ++i) {
    img.bytes[2 * i] = static_cast<uint8_t>(values[i] >> 8);  // big-endian per PNG
    img.bytes[2 * i + 1] = static_cast<uint8_t>(values[i] & 0xff);
  }
  detail::write_png(path, img);
}

inline std::vector<uint16_t> load_u16(const std::string& path, int& height, int& width) {
  detail::RawImage img = detail::read_png(path);
  if (img.channels != 1 || img.bit_depth != 16)
    throw IoError("expected 16-bit gray PNG: " + path);
  height = img.height;
  width = img.width;
  std::vector<uint16_t> values(static_cast<size_t>(height) * width);
  for (size_t i = 0; i < values.size(); ++i)
    values[i] = static_cast<uint16_t>((img.bytes[2 * i] << 8) | img.bytes[2 * i + 1]);
  return values;
}

}  // namespace glandflow
