#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "qonv/error.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

inline double mse(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError("mse: " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < gt.numel(); ++i) {
    const double d = pred[i] - gt[i];
    s += d * d;
  }
  return s / static_cast<double>(gt.numel());
}

/// PSNR in dB: 10 log10(peak^2 / mse). Returns +inf when mse == 0.
inline double psnr_from_mse(double mse_value, double peak = 1.0) {
  if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

inline double psnr(const Tensor& pred, const Tensor& gt, double peak = 1.0) {
  return psnr_from_mse(mse(pred, gt), peak);
}

/// PSNR over the spatial positions selected by `mask`, all channels.
inline double psnr_masked(const Tensor& pred, const Tensor& gt, const std::vector<std::uint8_t>& mask,
                          double peak = 1.0) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError("psnr: " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
  }
  const std::size_t P = spatial_size(gt), C = gt.dim(0);
  if (mask.size() != P) throw DimensionError("psnr: mask size does not match positions");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < P; ++p) {
      if (!mask[p]) continue;
      const double d = pred[c * P + p] - gt[c * P + p];
      s += d * d;
      ++n;
    }
  }
  if (n == 0) throw ContractError("psnr: mask selects no positions");
  return psnr_from_mse(s / static_cast<double>(n), peak);
}

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

inline std::vector<double> ssim_window_1d(const SsimParams& prm) {
  std::vector<double> w(prm.window);
  const double c = (static_cast<double>(prm.window) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < prm.window; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * prm.sigma * prm.sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-region separable filtering of one plane: [H x W] -> [H-win+1 x W-win+1].
inline std::vector<double> filter_valid(const double* src, std::size_t H, std::size_t W,
                                        const std::vector<double>& w) {
  const std::size_t n = w.size();
  const std::size_t oh = H - n + 1, ow = W - n + 1;
  std::vector<double> rows(H * ow, 0.0);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += w[i] * src[y * W + x + i];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += w[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

} // namespace detail

/// Per-channel SSIM maps over the valid (unpadded) region:
/// [C x (H-win+1) x (W-win+1)]. Map entry (y, x) belongs to the window
/// centred on pixel (y + win/2, x + win/2).
inline Tensor ssim_map(const Tensor& pred, const Tensor& gt, const SsimParams& prm = {}) {
  if (pred.shape() != gt.shape()) {
    throw DimensionError("ssim: " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
  }
  if (gt.rank() != 3) throw DimensionError("ssim expects [C x H x W], got " + shape_str(gt.shape()));
  const std::size_t C = gt.dim(0), H = gt.dim(1), W = gt.dim(2);
  if (H < prm.window || W < prm.window) {
    throw ConfigError("ssim: image " + shape_str(gt.shape()) + " is smaller than the " +
                      std::to_string(prm.window) + "x" + std::to_string(prm.window) + " window");
  }
  const auto w = detail::ssim_window_1d(prm);
  const double c1 = (prm.k1 * prm.dynamic_range) * (prm.k1 * prm.dynamic_range);
  const double c2 = (prm.k2 * prm.dynamic_range) * (prm.k2 * prm.dynamic_range);
  const std::size_t oh = H - prm.window + 1, ow = W - prm.window + 1;
  Tensor out({C, oh, ow});
  std::vector<double> xx(H * W), yy(H * W), xy(H * W);
  for (std::size_t c = 0; c < C; ++c) {
    const double* x = pred.data().data() + c * H * W;
    const double* y = gt.data().data() + c * H * W;
    for (std::size_t i = 0; i < H * W; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = detail::filter_valid(x, H, W, w);
    const auto my = detail::filter_valid(y, H, W, w);
    const auto sxx = detail::filter_valid(xx.data(), H, W, w);
    const auto syy = detail::filter_valid(yy.data(), H, W, w);
    const auto sxy = detail::filter_valid(xy.data(), H, W, w);
    for (std::size_t i = 0; i < oh * ow; ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      out[c * oh * ow + i] = ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
                             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
  }
  return out;
}

/// Single-scale SSIM: mean of the per-channel valid-region maps.
inline double ssim(const Tensor& pred, const Tensor& gt, const SsimParams& prm = {}) {
  const Tensor m = ssim_map(pred, gt, prm);
  return std::accumulate(m.data().begin(), m.data().end(), 0.0) / static_cast<double>(m.numel());
}

/// SSIM averaged over the windows whose centre pixel is selected by `mask`
/// (mask indexes the H x W pixel grid).
inline double ssim_masked(const Tensor& pred, const Tensor& gt, const std::vector<std::uint8_t>& mask,
                          const SsimParams& prm = {}) {
  const Tensor m = ssim_map(pred, gt, prm);
  const std::size_t C = m.dim(0), oh = m.dim(1), ow = m.dim(2), W = gt.dim(2);
  if (mask.size() != gt.dim(1) * W) throw DimensionError("ssim: mask size does not match pixels");
  const std::size_t half = prm.window / 2;
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        if (!mask[(y + half) * W + x + half]) continue;
        s += m.at(c, y, x);
        ++n;
      }
    }
  }
  if (n == 0) throw ContractError("ssim: mask selects no window centres");
  return s / static_cast<double>(n);
}

/// Per-item PSNR/SSIM for one split. SSIM entries are NaN where undefined
/// (1-D signals).
struct MetricsReport {
  std::string split;
  std::vector<double> psnr;
  std::vector<double> ssim;

  static double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  double mean_psnr() const { return mean_of(psnr); }
  double mean_ssim() const { return mean_of(ssim); }
};

} // namespace qonv
