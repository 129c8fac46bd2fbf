#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qonv/error.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

using Complex = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

// Iterative radix-2 Cooley-Tukey, in place. sign = -1 forward, +1 inverse (unscaled).
inline void fft_radix2(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex w = std::polar(1.0, ang * static_cast<double>(k));
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

} // namespace detail

/// Direct O(n^2) DFT. sign = -1 forward, +1 inverse; the inverse is scaled by 1/n.
inline std::vector<Complex> dft_naive(const std::vector<Complex>& x, int sign) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce k*t mod n first so the angle stays small and exact.
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::polar(1.0, ang);
    }
    out[k] = sign > 0 ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

/// DFT with a radix-2 fast path for power-of-two lengths.
inline std::vector<Complex> dft(std::vector<Complex> x, int sign = -1) {
  if (!detail::is_pow2(x.size())) return dft_naive(x, sign);
  detail::fft_radix2(x, sign);
  if (sign > 0) {
    for (auto& v : x) v /= static_cast<double>(x.size());
  }
  return x;
}

inline std::vector<Complex> dft_real(std::span<const double> x) {
  return dft(std::vector<Complex>(x.begin(), x.end()), -1);
}

/// Signed frequency of DFT bin k for length n: k for k <= n/2, else k - n.
inline long signed_frequency(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

/// Synthetic 1/f^alpha signal: an i.i.d. standard Gaussian vector whose j-th
/// entry (j = 1..n) is scaled by 1/j^alpha, taken through the inverse DFT;
/// the real part is rescaled to zero mean and unit max-abs. All n bins are
/// populated.
inline Tensor gen_one_over_f(std::size_t n, double alpha, std::uint64_t seed) {
  if (n < 2) throw ConfigError("gen_one_over_f: n must be >= 2, got " + std::to_string(n));
  if (!(alpha >= 0.0)) throw ConfigError("gen_one_over_f: alpha must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Complex> spec(n);
  for (std::size_t j = 0; j < n; ++j) spec[j] = normal(rng) / std::pow(static_cast<double>(j + 1), alpha);
  const auto time = dft(std::move(spec), +1);
  std::vector<double> x(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = time[i].real();
    mean += x[i];
  }
  mean /= static_cast<double>(n);
  double peak = 0.0;
  for (double& v : x) {
    v -= mean;
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0.0) {
    for (double& v : x) v /= peak;
  }
  return Tensor::vector(std::move(x));
}

/// Ideal DFT low-pass: bins with |freq|/n > cutoff are removed from `low`;
/// `high` = x - low.
inline std::pair<Tensor, Tensor> lowpass_split(const Tensor& x, double cutoff) {
  if (!(cutoff > 0.0 && cutoff <= 0.5)) {
    throw ConfigError("lowpass_split: cutoff must lie in (0, 0.5], got " + std::to_string(cutoff));
  }
  const std::size_t n = x.numel();
  auto spec = dft_real(x.data());
  for (std::size_t k = 0; k < n; ++k) {
    const double f = std::abs(static_cast<double>(signed_frequency(k, n))) / static_cast<double>(n);
    if (f > cutoff) spec[k] = 0.0;
  }
  const auto time = dft(std::move(spec), +1);
  Tensor low(x.shape());
  for (std::size_t i = 0; i < n; ++i) low[i] = time[i].real();
  return {low, x - low};
}

/// Everything needed to train and evaluate on a 1-D signal. Tensors are
/// channels-first [1 x n].
struct SignalPair {
  Tensor coords;
  Tensor full;
  Tensor low;
  Tensor high;
  double cutoff = 0.125;
};

/// Evenly spaced query grid in [0,1). rank 1: [1 x n] with k/n. rank 2:
/// [2 x H x W] with channel 0 = col/W and channel 1 = row/H.
inline Tensor sample_coords(std::size_t n, std::size_t rank = 1, std::size_t width = 0) {
  if (rank == 1) {
    if (n == 0) throw ConfigError("sample_coords: n must be positive");
    Tensor c({1, n});
    for (std::size_t k = 0; k < n; ++k) c[k] = static_cast<double>(k) / static_cast<double>(n);
    return c;
  }
  if (rank != 2) throw ConfigError("sample_coords: rank must be 1 or 2");
  const std::size_t H = n, W = width;
  if (H == 0 || W == 0) throw ConfigError("sample_coords: extents must be positive");
  Tensor c({2, H, W});
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t col = 0; col < W; ++col) {
      c.at(0, r, col) = static_cast<double>(col) / static_cast<double>(W);
      c.at(1, r, col) = static_cast<double>(r) / static_cast<double>(H);
    }
  }
  return c;
}

inline SignalPair make_signal_pair(std::size_t n, double alpha, double cutoff, std::uint64_t seed) {
  Tensor full = gen_one_over_f(n, alpha, seed);
  auto [low, high] = lowpass_split(full, cutoff);
  return SignalPair{sample_coords(n), full.reshaped({1, n}), low.reshaped({1, n}), high.reshaped({1, n}), cutoff};
}

/// Normalized 1-D Gaussian taps for radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable Gaussian blur with edge-replicate borders; output clamped to [0,1].
inline Tensor blur_image(const Tensor& img, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("blur_image: sigma must be > 0");
  if (img.rank() != 3) throw DimensionError("blur_image expects [C x H x W], got " + shape_str(img.shape()));
  const auto k = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  const auto Hs = static_cast<std::ptrdiff_t>(H), Ws = static_cast<std::ptrdiff_t>(W);
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  Tensor tmp(img.shape()), out(img.shape());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::ptrdiff_t y = 0; y < Hs; ++y) {
      for (std::ptrdiff_t x = 0; x < Ws; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
          acc += k[static_cast<std::size_t>(i + radius)] *
                 img.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(clampi(x + i, Ws - 1)));
        }
        tmp.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
      }
    }
    for (std::ptrdiff_t y = 0; y < Hs; ++y) {
      for (std::ptrdiff_t x = 0; x < Ws; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
          acc += k[static_cast<std::size_t>(i + radius)] *
                 tmp.at(c, static_cast<std::size_t>(clampi(y + i, Hs - 1)), static_cast<std::size_t>(x));
        }
        out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

struct ImagePair {
  Tensor ground_truth; // [3 x H x W] in [0,1]
  Tensor low;          // [3 x H x W]
  Tensor coords;       // [2 x H x W]
};

inline ImagePair make_image_pair(const Tensor& image, double blur_sigma) {
  if (image.rank() != 3) throw DimensionError("image must be [C x H x W], got " + shape_str(image.shape()));
  for (double v : image.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("ground-truth image values must lie in [0,1]");
  }
  return ImagePair{image, blur_image(image, blur_sigma), sample_coords(image.dim(1), 2, image.dim(2))};
}

} // namespace qonv
