#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coi/errors.hpp"
#include "coi/raster.hpp"

namespace coi {

namespace detail {

inline std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline bool is_pgm_path(const std::string& path) {
  const auto ext = lower_extension(path);
  return ext == ".pgm" || ext == ".pnm";
}

// Reads a PNG into an 8-bit buffer of the requested simplified-API format.
inline std::vector<std::uint8_t> read_png(const std::string& path, png_uint_32 format, int& width,
                                          int& height) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG '" + path + "': " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path + "': " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  if (width <= 0 || height <= 0) throw IoError("empty PNG '" + path + "'");
  return buf;
}

inline void write_png(const std::string& path, png_uint_32 format, int width, int height,
                      const std::vector<std::uint8_t>& buf) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path + "': " + image.message);
  }
}

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_pnm_int(std::istream& in, const std::string& path) {
  skip_pnm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw IoError("malformed PGM header in '" + path + "'");
  return v;
}

inline std::vector<std::uint8_t> read_pgm(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw IoError("'" + path + "' is not a binary PGM (P5) file");
  }
  width = read_pnm_int(in, path);
  height = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (width <= 0 || height <= 0) throw IoError("empty PGM '" + path + "'");
  if (maxval != 255) throw IoError("'" + path + "': only 8-bit PGM (maxval 255) is supported");
  in.get();  // single whitespace byte before the raster
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw IoError("truncated PGM '" + path + "'");
  }
  return buf;
}

inline void write_pgm(const std::string& path, int width, int height,
                      const std::vector<std::uint8_t>& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace detail

// Grayscale load: byte v maps to v/255. Colour PNGs are reduced with the BT.601 luma.
inline GrayImage load_gray(const std::string& path) {
  int w = 0, h = 0;
  if (detail::is_pgm_path(path)) {
    const auto buf = detail::read_pgm(path, w, h);
    GrayImage img(w, h);
    std::transform(buf.begin(), buf.end(), img.data.begin(),
                   [](std::uint8_t v) { return v / 255.0; });
    return img;
  }
  // Decode as RGB so colour files go through our own luma rather than libpng's.
  const auto buf = detail::read_png(path, PNG_FORMAT_RGB, w, h);
  GrayImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img.data[i] = luma({buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]});
  }
  return img;
}

inline RgbImage load_rgb(const std::string& path) {
  int w = 0, h = 0;
  if (detail::is_pgm_path(path)) {
    const auto buf = detail::read_pgm(path, w, h);
    RgbImage img(w, h);
    std::transform(buf.begin(), buf.end(), img.data.begin(),
                   [](std::uint8_t v) { return Rgb{v, v, v}; });
    return img;
  }
  const auto buf = detail::read_png(path, PNG_FORMAT_RGB, w, h);
  RgbImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img.data[i] = {buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]};
  }
  return img;
}

// Grayscale save: round(v*255). Format picked from the extension (.pgm/.pnm, else PNG).
inline void save_gray(const GrayImage& img, const std::string& path) {
  std::vector<std::uint8_t> buf(img.size());
  std::transform(img.data.begin(), img.data.end(), buf.begin(), to_byte);
  if (detail::is_pgm_path(path)) {
    detail::write_pgm(path, img.width, img.height, buf);
  } else {
    detail::write_png(path, PNG_FORMAT_GRAY, img.width, img.height, buf);
  }
}

// 0/1 mask stored as 0/255.
inline void save_mask(const Raster<std::uint8_t>& mask, const std::string& path) {
  std::vector<std::uint8_t> buf(mask.size());
  std::transform(mask.data.begin(), mask.data.end(), buf.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  if (detail::is_pgm_path(path)) {
    detail::write_pgm(path, mask.width, mask.height, buf);
  } else {
    detail::write_png(path, PNG_FORMAT_GRAY, mask.width, mask.height, buf);
  }
}

// Any byte >= 128 counts as set.
inline Raster<std::uint8_t> load_mask(const std::string& path) {
  const GrayImage g = load_gray(path);
  Raster<std::uint8_t> mask(g.width, g.height);
  std::transform(g.data.begin(), g.data.end(), mask.data.begin(),
                 [](double v) -> std::uint8_t { return v >= 0.5 ? 1 : 0; });
  return mask;
}

inline void save_rgb(const RgbImage& img, const std::string& path) {
  std::vector<std::uint8_t> buf(3 * img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    buf[3 * i] = img.data[i].r;
    buf[3 * i + 1] = img.data[i].g;
    buf[3 * i + 2] = img.data[i].b;
  }
  detail::write_png(path, PNG_FORMAT_RGB, img.width, img.height, buf);
}

}  // namespace coi
