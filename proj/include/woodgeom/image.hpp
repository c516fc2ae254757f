#pragma once

// Minimal interleaved image container plus Netpbm (PGM/PPM) and PFM I/O.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "woodgeom/errors.hpp"

namespace woodgeom {

template <class T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || c <= 0) throw std::invalid_argument("invalid image dimensions");
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
};

namespace detail {

inline std::string next_token(std::istream& is) {
  std::string tok;
  while (is >> tok) {
    if (tok[0] != '#') break;
    std::string rest;
    std::getline(is, rest);
    tok.clear();
  }
  if (tok.empty()) throw ValidationError("truncated image header");
  return tok;
}

inline int parse_positive(const std::string& tok, const char* what) {
  try {
    const int v = std::stoi(tok);
    if (v > 0) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(std::string("invalid ") + what + " in image header: " + tok);
}

}  // namespace detail

/// Reads binary PGM (P5) or PPM (P6), 8 or 16 bit. Values are kept as-is
/// (not normalized).
inline Image<float> read_netpbm(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic != "P5" && magic != "P6") throw ValidationError("unsupported image format '" + magic + "' (need P5/P6)");
  const int w = detail::parse_positive(detail::next_token(is), "width");
  const int h = detail::parse_positive(detail::next_token(is), "height");
  const int maxval = detail::parse_positive(detail::next_token(is), "maxval");
  if (maxval > 65535) throw ValidationError("maxval above 65535");
  is.get();
  const int c = magic == "P6" ? 3 : 1;
  Image<float> img(w, h, c);
  const std::size_t n = img.data.size();
  if (maxval < 256) {
    std::vector<std::uint8_t> buf(n);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
      throw ValidationError("truncated image data");
    for (std::size_t i = 0; i < n; ++i) img.data[i] = buf[i];
  } else {
    std::vector<std::uint8_t> buf(2 * n);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n)))
      throw ValidationError("truncated image data");
    for (std::size_t i = 0; i < n; ++i) img.data[i] = static_cast<float>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return img;
}

inline Image<float> read_netpbm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image " + path);
  return read_netpbm(is);
}

/// Writes P5/P6 depending on channel count. Values are rounded and clamped
/// to [0, maxval]; maxval > 255 selects 16-bit big-endian samples.
inline void write_netpbm(std::ostream& os, const Image<float>& img, int maxval = 255) {
  if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("netpbm needs 1 or 3 channels");
  os << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << '\n' << maxval << '\n';
  for (float v : img.data) {
    const double cl = std::clamp(std::round(static_cast<double>(v)), 0.0, static_cast<double>(maxval));
    const auto q = static_cast<unsigned>(std::isfinite(cl) ? cl : 0.0);
    if (maxval > 255) os.put(static_cast<char>(q >> 8));
    os.put(static_cast<char>(q & 0xff));
  }
}

/// Single-channel PFM ("Pf"), little-endian, rows stored bottom to top.
inline void write_pfm(std::ostream& os, const Image<float>& img) {
  if (img.channels != 1) throw std::invalid_argument("pfm writer expects one channel");
  os << "Pf\n" << img.width << ' ' << img.height << "\n-1.0\n";
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(img.at(x, y));
      char b[4];
      for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      os.write(b, 4);
    }
  }
}

inline Image<float> read_pfm(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic != "Pf") throw ValidationError("expected single-channel PFM (Pf), got '" + magic + "'");
  const int w = detail::parse_positive(detail::next_token(is), "width");
  const int h = detail::parse_positive(detail::next_token(is), "height");
  const double scale = std::stod(detail::next_token(is));
  is.get();
  const bool little = scale < 0.0;
  Image<float> img(w, h, 1);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      unsigned char b[4];
      if (!is.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated PFM data");
      std::uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(little ? b[k] : b[3 - k]) << (8 * k);
      img.at(x, y) = std::bit_cast<float>(bits);
    }
  }
  return img;
}

inline Image<float> read_pfm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open PFM " + path);
  return read_pfm(is);
}

}  // namespace woodgeom
