#pragma once

// Binary PPM (P6) / PGM (P5) reader and writer, 8-bit, maxval 255.
// Pixel values map to [0,1] by v/255; saving rounds v*255 to nearest.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "qonv/error.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

namespace detail {

struct PnmCursor {
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;
  const std::string& path;

  [[noreturn]] void fail(const std::string& why) const { throw IoError(path + ": " + why); }

  void skip_space_and_comments() {
    while (pos < buf.size()) {
      if (std::isspace(buf[pos])) {
        ++pos;
      } else if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint() {
    skip_space_and_comments();
    if (pos >= buf.size() || !std::isdigit(buf[pos])) fail("malformed header");
    std::size_t v = 0;
    while (pos < buf.size() && std::isdigit(buf[pos])) {
      v = v * 10 + static_cast<std::size_t>(buf[pos] - '0');
      if (v > (1u << 24)) fail("header value too large");
      ++pos;
    }
    return v;
  }
};

} // namespace detail

/// Loads a P6 (3 channels) or P5 (1 channel) file into [C x H x W] in [0,1].
inline Tensor load_image(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(p + ": cannot open");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::PnmCursor cur{buf, 0, p};
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '6' && buf[1] != '5')) {
    cur.fail("unsupported format (expected binary PPM P6 or PGM P5)");
  }
  const std::size_t channels = buf[1] == '6' ? 3 : 1;
  cur.pos = 2;
  const std::size_t W = cur.read_uint();
  const std::size_t H = cur.read_uint();
  const std::size_t maxval = cur.read_uint();
  if (W == 0 || H == 0) cur.fail("zero image extent");
  if (maxval != 255) cur.fail("max value must be 255, got " + std::to_string(maxval));
  if (cur.pos >= buf.size() || !std::isspace(buf[cur.pos])) cur.fail("malformed header");
  ++cur.pos; // single whitespace byte before the raster
  const std::size_t need = W * H * channels;
  if (buf.size() - cur.pos < need) {
    cur.fail("truncated raster: expected " + std::to_string(need) + " bytes, found " +
             std::to_string(buf.size() - cur.pos));
  }
  Tensor img({channels, H, W});
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        img.at(c, y, x) = buf[cur.pos + (y * W + x) * channels + c] / 255.0;
      }
    }
  }
  return img;
}

/// Writes [3 x H x W] as P6 or [1 x H x W] as P5. Values are clamped to [0,1].
inline void save_image(const std::filesystem::path& path, const Tensor& img) {
  const std::string p = path.string();
  if (img.rank() != 3 || (img.dim(0) != 3 && img.dim(0) != 1)) {
    throw IoError(p + ": can only save [3 x H x W] or [1 x H x W] images, got " + shape_str(img.shape()));
  }
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  std::string header = std::string(C == 3 ? "P6" : "P5") + "\n" + std::to_string(W) + " " +
                       std::to_string(H) + "\n255\n";
  std::vector<unsigned char> raster(C * H * W);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        raster[(y * W + x) * C + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(p + ": cannot open for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError(p + ": write failed");
}

} // namespace qonv
