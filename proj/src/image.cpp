// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/image.hpp"

#include <cctype>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "lineocr/error.hpp"

namespace lineocr {

std::uint8_t clamp_to_u8(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

FloatImage to_float(const GrayImage& img) {
  FloatImage out(img.width, img.height);
  std::copy(img.pixels.begin(), img.pixels.end(), out.values.begin());
  return out;
}

GrayImage to_gray(const FloatImage& img) {
  GrayImage out(img.width, img.height);
  std::transform(img.values.begin(), img.values.end(), out.pixels.begin(),
                 [](float v) { return clamp_to_u8(v); });
  return out;
}

double sample_bilinear_replicate(const GrayImage& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

double sample_bilinear_fill(const GrayImage& img, double x, double y, double fill) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= img.width || yi >= img.height) return fill;
    return img.at(xi, yi);
  };
  const double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
  const double bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height) {
  if (new_width == img.width && new_height == img.height) return img;
  GrayImage out(new_width, new_height);
  const double sx = static_cast<double>(img.width) / new_width;
  const double sy = static_cast<double>(img.height) / new_height;
  for (int y = 0; y < new_height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < new_width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      out.at(x, y) = clamp_to_u8(sample_bilinear_replicate(img, src_x, src_y));
    }
  }
  return out;
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) {
    tok.push_back(static_cast<char>(bytes[pos++]));
  }
  return tok;
}

int parse_dim(const std::string& tok) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit) || tok.size() > 9) {
    throw Error(ErrorCode::BitmapFormatError, "bad PGM header field '" + tok + "'");
  }
  return std::stoi(tok);
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") {
    throw Error(ErrorCode::BitmapFormatError, "not a binary PGM (P5)");
  }
  const int w = parse_dim(next_token(bytes, pos));
  const int h = parse_dim(next_token(bytes, pos));
  const int maxval = parse_dim(next_token(bytes, pos));
  if (maxval != 255) {
    throw Error(ErrorCode::BitmapFormatError, "only maxval 255 is supported");
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (pos + n > bytes.size()) {
    throw Error(ErrorCode::BitmapFormatError, "truncated PGM raster");
  }
  GrayImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  const auto bytes = encode_pgm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::SinkWriteError, "cannot write " + path.string());
}

}  // namespace lineocr
