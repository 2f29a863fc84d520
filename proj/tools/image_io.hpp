#pragma once

// Image and table files for the command-line tool: PGM (P2/P5, 8 or 16 bit),
// grayscale PNG through libpng, plain-text matrices and CSV.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "liftbreg/dataterms.hpp"
#include "liftbreg/error.hpp"
#include "liftbreg/grid.hpp"

namespace liftbreg::io {

/// Raised on unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// next header token of a PNM file, skipping whitespace and '#' comments
inline std::string pnm_token(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return s.substr(start, pos - start);
}

inline std::size_t pnm_number(const std::string& s, std::size_t& pos, const std::string& path) {
  const std::string tok = pnm_token(s, pos);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); }))
    throw IoError(path + ": malformed PGM header");
  return std::stoul(tok);
}

}  // namespace detail

inline Image read_pgm(const std::string& path) {
  const std::string s = detail::read_all(path);
  std::size_t pos = 0;
  const std::string magic = detail::pnm_token(s, pos);
  if (magic != "P2" && magic != "P5") throw IoError(path + ": not a PGM file");
  const std::size_t w = detail::pnm_number(s, pos, path);
  const std::size_t h = detail::pnm_number(s, pos, path);
  const std::size_t maxval = detail::pnm_number(s, pos, path);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw IoError(path + ": bad PGM header");
  Image im{GridShape(h, w)};
  if (magic == "P2") {
    for (double& v : im.values) v = static_cast<double>(detail::pnm_number(s, pos, path));
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    if (s.size() < pos + bytes * w * h) throw IoError(path + ": truncated PGM data");
    for (std::size_t k = 0; k < w * h; ++k) {
      const auto* p = reinterpret_cast<const unsigned char*>(s.data() + pos + bytes * k);
      im.values[k] = bytes == 2 ? static_cast<double>(p[0] << 8 | p[1]) : static_cast<double>(p[0]);
    }
  }
  for (double& v : im.values) v /= static_cast<double>(maxval);
  return clip_image(std::move(im));
}

/// Binary PGM. Values are rounded to [0, maxval].
inline void write_pgm(const std::string& path, const std::vector<double>& values,
                      const GridShape& shape, unsigned maxval) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << shape.width << " " << shape.height << "\n" << maxval << "\n";
  std::string data;
  data.reserve(values.size() * (maxval > 255 ? 2 : 1));
  for (double v : values) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (maxval > 255) data.push_back(static_cast<char>(q >> 8));
    data.push_back(static_cast<char>(q & 0xff));
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("cannot write " + path);
}

/// 8-bit grayscale image of values in [0, 1].
inline void write_pgm8(const std::string& path, const Image& im) {
  write_pgm(path, im.values, im.shape, 255);
}

/// 16-bit map of a field, linearly scaled from [lo, hi] to [0, 65535].
inline void write_pgm16(const std::string& path, const ScalarField& f, double lo, double hi) {
  std::vector<double> scaled(f.values.size());
  for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = (f.values[k] - lo) / (hi - lo);
  write_pgm(path, scaled, f.shape, 65535);
}

inline Image read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + path);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(fp, &std::fclose);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  std::vector<std::uint16_t> pixels;
  std::size_t w = 0, h = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": unreadable PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  // Rec. 709 luminance
  if (color & PNG_COLOR_MASK_COLOR || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, 21260, 71520);
  png_set_expand_16(png);
  png_set_swap(png);  // 16-bit samples in little-endian order
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  if (png_get_channels(png, info) != 1) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": could not convert PNG to grayscale");
  }
  pixels.resize(w * h);
  std::vector<png_bytep> rows(h);
  for (std::size_t r = 0; r < h; ++r) rows[r] = reinterpret_cast<png_bytep>(pixels.data() + r * w);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  Image im{GridShape(h, w)};
  for (std::size_t k = 0; k < pixels.size(); ++k) im.values[k] = pixels[k] / 65535.0;
  return clip_image(std::move(im));
}

/// 8-bit grayscale PNG of values in [0, 1].
inline void write_png8(const std::string& path, const Image& im) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path);
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(fp, &std::fclose);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  const std::size_t w = im.shape.width, h = im.shape.height;
  std::vector<png_byte> data(w * h);
  for (std::size_t k = 0; k < data.size(); ++k)
    data[k] = static_cast<png_byte>(std::lround(std::clamp(im.values[k], 0.0, 1.0) * 255.0));
  std::vector<png_bytep> rows(h);
  for (std::size_t r = 0; r < h; ++r) rows[r] = data.data() + r * w;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot write " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// PGM or PNG, chosen from the file signature.
inline Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char sig[8] = {};
  in.read(sig, 8);
  if (in.gcount() >= 2 && sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) return read_pgm(path);
  if (in.gcount() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(sig), 0, 8) == 0)
    return read_png(path);
  throw IoError(path + ": unsupported image format (expected PGM or PNG)");
}

/// Number with 10 significant digits.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// One row per image row, values separated by single spaces.
inline void write_matrix(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t r = 0; r < f.shape.height; ++r) {
    for (std::size_t c = 0; c < f.shape.width; ++c) out << (c ? " " : "") << num(f(r, c));
    out << '\n';
  }
  if (!out) throw IoError("cannot write " + path);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw IoError("cannot write " + path);
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << num(values[k]);
    out_ << '\n';
    if (!out_) throw IoError("CSV write failed");
  }

 private:
  std::ofstream out_;
};

}  // namespace liftbreg::io
