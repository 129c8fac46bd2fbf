#pragma once

// Differentiable primitives recorded on a Tape.
//
// Convolutions are cross-correlations with zero "same" padding of (K-1)/2 on
// each side. They lower to im2col + GEMM; the GEMMs run through Eigen.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qonv/autodiff.hpp"
#include "qonv/error.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using Index = Eigen::Index;

inline CMapMat as_mat(const Tensor& t, std::size_t rows, std::size_t cols) {
  return CMapMat(t.data().data(), static_cast<Index>(rows), static_cast<Index>(cols));
}
inline MapMat as_mat(Tensor& t, std::size_t rows, std::size_t cols) {
  return MapMat(t.data().data(), static_cast<Index>(rows), static_cast<Index>(cols));
}

/// Spatial geometry of a channels-first conv input: 1-D uses h == 1.
struct ConvGeom {
  std::size_t cin, h, w, k;
  std::size_t rank; // 1 or 2
  std::size_t taps() const { return rank == 1 ? k : k * k; }
  std::size_t positions() const { return h * w; }
};

inline Tensor im2col(const Tensor& x, const ConvGeom& g) {
  const std::size_t taps = g.taps();
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.k / 2);
  Tensor cols({g.cin * taps, g.positions()});
  auto out = cols.data();
  auto in = x.data();
  const auto H = static_cast<std::ptrdiff_t>(g.h), W = static_cast<std::ptrdiff_t>(g.w);
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t t = 0; t < taps; ++t) {
      const std::ptrdiff_t dy = g.rank == 1 ? 0 : static_cast<std::ptrdiff_t>(t / g.k) - pad;
      const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(g.rank == 1 ? t : t % g.k) - pad;
      double* row = out.data() + (c * taps + t) * g.positions();
      const double* plane = in.data() + c * g.positions();
      for (std::ptrdiff_t y = 0; y < H; ++y) {
        const std::ptrdiff_t sy = y + dy;
        double* dst = row + y * W;
        if (sy < 0 || sy >= H) {
          std::fill(dst, dst + W, 0.0);
          continue;
        }
        const double* src = plane + sy * W;
        for (std::ptrdiff_t xx = 0; xx < W; ++xx) {
          const std::ptrdiff_t sx = xx + dx;
          dst[xx] = (sx < 0 || sx >= W) ? 0.0 : src[sx];
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col: scatters column gradients back onto the input.
inline void col2im_add(const Tensor& cols, const ConvGeom& g, Tensor& dx) {
  const std::size_t taps = g.taps();
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.k / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.h), W = static_cast<std::ptrdiff_t>(g.w);
  auto in = cols.data();
  auto out = dx.data();
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t t = 0; t < taps; ++t) {
      const std::ptrdiff_t dy = g.rank == 1 ? 0 : static_cast<std::ptrdiff_t>(t / g.k) - pad;
      const std::ptrdiff_t dxo = static_cast<std::ptrdiff_t>(g.rank == 1 ? t : t % g.k) - pad;
      const double* row = in.data() + (c * taps + t) * g.positions();
      double* plane = out.data() + c * g.positions();
      for (std::ptrdiff_t y = 0; y < H; ++y) {
        const std::ptrdiff_t sy = y + dy;
        if (sy < 0 || sy >= H) continue;
        const double* src = row + y * W;
        double* dst = plane + sy * W;
        for (std::ptrdiff_t xx = 0; xx < W; ++xx) {
          const std::ptrdiff_t sx = xx + dxo;
          if (sx >= 0 && sx < W) dst[sx] += src[xx];
        }
      }
    }
  }
}

inline Var conv_impl(Var x, Var k, std::optional<Var> b, std::size_t rank) {
  same_tape(x, k);
  if (b) same_tape(x, *b);
  const char* name = rank == 1 ? "conv1d" : "conv2d";
  const Shape& xs = x.shape();
  const Shape& ks = k.shape();
  if (xs.size() != rank + 1) {
    throw DimensionError(std::string(name) + ": input must have rank " + std::to_string(rank + 1) +
                         ", got " + shape_str(xs));
  }
  if (ks.size() != rank + 2) {
    throw DimensionError(std::string(name) + ": kernel must have rank " + std::to_string(rank + 2) +
                         ", got " + shape_str(ks));
  }
  const std::size_t K = ks[2];
  if (K % 2 == 0) throw ConfigError(std::string(name) + ": kernel size must be odd, got " + std::to_string(K));
  if (rank == 2 && ks[3] != K) throw ConfigError("conv2d: kernel must be square, got " + shape_str(ks));
  if (ks[1] != xs[0]) {
    throw DimensionError(std::string(name) + ": kernel " + shape_str(ks) + " expects " +
                         std::to_string(ks[1]) + " input channels, input is " + shape_str(xs));
  }
  const std::size_t cout = ks[0];
  if (b && (b->shape().size() != 1 || b->shape()[0] != cout)) {
    throw DimensionError(std::string(name) + ": bias " + shape_str(b->shape()) + " vs kernel " + shape_str(ks));
  }
  ConvGeom g{xs[0], rank == 1 ? 1 : xs[1], rank == 1 ? xs[1] : xs[2], K, rank};
  Tape& tape = *x.tape();

  Tensor cols = im2col(x.value(), g);
  Shape os = xs;
  os[0] = cout;
  Tensor out(os);
  const std::size_t P = g.positions(), R = g.cin * g.taps();
  auto O = as_mat(out, cout, P);
  O.noalias() = as_mat(k.value(), cout, R) * as_mat(cols, R, P);
  if (b) {
    auto bv = b->value().data();
    for (std::size_t c = 0; c < cout; ++c) O.row(static_cast<Index>(c)).array() += bv[c];
  }

  const std::size_t xi = x.index(), ki = k.index();
  const std::optional<std::size_t> bi = b ? std::optional<std::size_t>(b->index()) : std::nullopt;
  std::vector<std::size_t> parents{xi, ki};
  if (bi) parents.push_back(*bi);
  return tape.record(std::move(out), std::move(parents),
                     [=, cols = std::move(cols)](Tape& t, const Tensor& gout) {
                       auto G = as_mat(gout, cout, P);
                       if (t.requires_grad(ki)) {
                         Tensor& dk = t.adjoint_mut(ki);
                         as_mat(dk, cout, R).noalias() += G * as_mat(cols, R, P).transpose();
                       }
                       if (bi && t.requires_grad(*bi)) {
                         auto db = t.adjoint_mut(*bi).data();
                         for (std::size_t c = 0; c < cout; ++c) db[c] += G.row(static_cast<Index>(c)).sum();
                       }
                       if (t.requires_grad(xi)) {
                         Tensor dcols({R, P});
                         as_mat(dcols, R, P).noalias() = as_mat(t.value(ki), cout, R).transpose() * G;
                         col2im_add(dcols, g, t.adjoint_mut(xi));
                       }
                     });
}

} // namespace detail

/// out[n,j] = sum_i x[n,i] * w[i,j] + b[j]
inline Var linear(Var x, Var w, std::optional<Var> b = std::nullopt) {
  using namespace detail;
  same_tape(x, w);
  if (b) same_tape(x, *b);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0]) {
    throw DimensionError("linear: input " + shape_str(xs) + " incompatible with weight " + shape_str(ws));
  }
  const std::size_t N = xs[0], Cin = xs[1], Cout = ws[1];
  if (b && (b->shape().size() != 1 || b->shape()[0] != Cout)) {
    throw DimensionError("linear: bias " + shape_str(b->shape()) + " incompatible with weight " + shape_str(ws));
  }
  Tensor out({N, Cout});
  auto O = as_mat(out, N, Cout);
  O.noalias() = as_mat(x.value(), N, Cin) * as_mat(w.value(), Cin, Cout);
  if (b) {
    Eigen::Map<const Eigen::RowVectorXd> bv(b->value().data().data(), static_cast<Index>(Cout));
    O.rowwise() += bv;
  }
  const std::size_t xi = x.index(), wi = w.index();
  const std::optional<std::size_t> bi = b ? std::optional<std::size_t>(b->index()) : std::nullopt;
  std::vector<std::size_t> parents{xi, wi};
  if (bi) parents.push_back(*bi);
  return x.tape()->record(std::move(out), std::move(parents), [=](Tape& t, const Tensor& gout) {
    auto G = as_mat(gout, N, Cout);
    if (t.requires_grad(wi)) {
      as_mat(t.adjoint_mut(wi), Cin, Cout).noalias() += as_mat(t.value(xi), N, Cin).transpose() * G;
    }
    if (bi && t.requires_grad(*bi)) {
      Eigen::Map<Eigen::RowVectorXd> db(t.adjoint_mut(*bi).data().data(), static_cast<Index>(Cout));
      db += G.colwise().sum();
    }
    if (t.requires_grad(xi)) {
      as_mat(t.adjoint_mut(xi), N, Cin).noalias() += G * as_mat(t.value(wi), Cin, Cout).transpose();
    }
  });
}

/// x: [Cin x N], k: [Cout x Cin x K], b: [Cout] -> [Cout x N]
inline Var conv1d(Var x, Var k, std::optional<Var> b = std::nullopt) { return detail::conv_impl(x, k, b, 1); }

/// x: [Cin x H x W], k: [Cout x Cin x K x K], b: [Cout] -> [Cout x H x W]
inline Var conv2d(Var x, Var k, std::optional<Var> b = std::nullopt) { return detail::conv_impl(x, k, b, 2); }

/// Channel-wise concatenation; `a`'s channels come first.
inline Var concat_channels(Var a, Var b) {
  same_tape(a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != bs.size() || !std::equal(as.begin() + 1, as.end(), bs.begin() + 1)) {
    throw DimensionError("concat_channels: " + shape_str(as) + " and " + shape_str(bs) +
                         " disagree on non-channel extents");
  }
  Shape os = as;
  os[0] = as[0] + bs[0];
  Tensor::Storage d(a.value().values());
  d.insert(d.end(), b.value().values().begin(), b.value().values().end());
  const std::size_t ai = a.index(), bi = b.index();
  const std::size_t na = a.value().numel();
  return a.tape()->record(Tensor(std::move(os), std::move(d)), {ai, bi}, [=](Tape& t, const Tensor& g) {
    auto src = g.data();
    if (t.requires_grad(ai)) {
      auto dst = t.adjoint_mut(ai).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    if (t.requires_grad(bi)) {
      auto dst = t.adjoint_mut(bi).data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[na + i];
    }
  });
}

/// Channels [begin, end) of a channels-first node.
inline Var slice_channels(Var x, std::size_t begin, std::size_t end) {
  Tensor out = slice_channels(x.value(), begin, end);
  const std::size_t xi = x.index();
  const std::size_t offset = begin * spatial_size(x.value());
  return x.tape()->record(std::move(out), {xi}, [=](Tape& t, const Tensor& g) {
    auto dst = t.adjoint_mut(xi).data();
    auto src = g.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[offset + i] += src[i];
  });
}

inline Var add(Var a, Var b) {
  same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw DimensionError("add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t ai = a.index(), bi = b.index();
  return a.tape()->record(a.value() + b.value(), {ai, bi}, [=](Tape& t, const Tensor& g) {
    t.accumulate(ai, g);
    t.accumulate(bi, g);
  });
}

inline Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.index();
  return x.tape()->record(std::move(out), {xi}, [=](Tape& t, const Tensor& g) {
    t.accumulate(xi, g.reshaped(t.value(xi).shape()));
  });
}

/// Matrix transpose of a rank-2 node.
inline Var transpose(Var x) {
  if (x.shape().size() != 2) throw DimensionError("transpose needs rank 2, got " + shape_str(x.shape()));
  const std::size_t R = x.shape()[0], C = x.shape()[1];
  Tensor out({C, R});
  detail::as_mat(out, C, R) = detail::as_mat(x.value(), R, C).transpose();
  const std::size_t xi = x.index();
  return x.tape()->record(std::move(out), {xi}, [=](Tape& t, const Tensor& g) {
    detail::as_mat(t.adjoint_mut(xi), R, C) += detail::as_mat(g, C, R).transpose();
  });
}

/// Sum of squared entries, a scalar.
inline Var sum_squares(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v * v;
  const std::size_t xi = x.index();
  return x.tape()->record(Tensor({1}, s), {xi}, [=](Tape& t, const Tensor& g) {
    auto src = t.value(xi).data();
    auto dst = t.adjoint_mut(xi).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += 2.0 * src[i] * g[0];
  });
}

enum class ActivationKind { relu, siren, sinc, erf };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double omega0 = 30.0; // siren only

  static Activation parse(const std::string& name, double omega0 = 30.0) {
    if (name == "relu") return {ActivationKind::relu, omega0};
    if (name == "siren") return {ActivationKind::siren, omega0};
    if (name == "sinc") return {ActivationKind::sinc, omega0};
    if (name == "erf") return {ActivationKind::erf, omega0};
    throw ConfigError("unknown activation '" + name + "' (expected relu, siren, sinc or erf)");
  }

  std::string name() const {
    switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::siren: return "siren";
    case ActivationKind::sinc: return "sinc";
    case ActivationKind::erf: return "erf";
    }
    return "?";
  }

  double value(double x) const {
    switch (kind) {
    case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    case ActivationKind::siren: return std::sin(omega0 * x);
    case ActivationKind::sinc:
      if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
      return std::sin(x) / x;
    case ActivationKind::erf: return std::erf(x);
    }
    return 0.0;
  }

  double derivative(double x) const {
    switch (kind) {
    case ActivationKind::relu: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::siren: return omega0 * std::cos(omega0 * x);
    case ActivationKind::sinc:
      if (std::abs(x) < 1e-4) return -x / 3.0 + x * x * x / 30.0;
      return (x * std::cos(x) - std::sin(x)) / (x * x);
    case ActivationKind::erf: return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    }
    return 0.0;
  }
};

inline Var activation(Var x, Activation act) {
  if (act.kind == ActivationKind::siren && !(act.omega0 > 0.0)) {
    throw ConfigError("siren activation needs omega0 > 0");
  }
  Tensor out = x.value();
  for (double& v : out.data()) v = act.value(v);
  const std::size_t xi = x.index();
  return x.tape()->record(std::move(out), {xi}, [=](Tape& t, const Tensor& g) {
    auto src = t.value(xi).data();
    auto dst = t.adjoint_mut(xi).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += act.derivative(src[i]) * g[i];
  });
}

/// Mean squared error over all elements.
inline Var mse_loss(Var pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: prediction " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  const auto n = static_cast<double>(target.numel());
  double s = 0.0;
  for (std::size_t i = 0; i < target.numel(); ++i) {
    const double d = pred.value()[i] - target[i];
    s += d * d;
  }
  const std::size_t pi = pred.index();
  return pred.tape()->record(Tensor({1}, s / n), {pi}, [=](Tape& t, const Tensor& g) {
    auto p = t.value(pi).data();
    auto dst = t.adjoint_mut(pi).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += 2.0 * (p[i] - target[i]) / n * g[0];
  });
}

/// Mean squared error restricted to spatial positions with mask != 0, averaged
/// over every channel at those positions.
inline Var masked_mse_loss(Var pred, const Tensor& target, const std::vector<std::uint8_t>& mask) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("masked_mse_loss: prediction " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  const std::size_t P = spatial_size(target), C = target.dim(0);
  if (mask.size() != P) {
    throw DimensionError("masked_mse_loss: mask has " + std::to_string(mask.size()) + " entries for " +
                         std::to_string(P) + " positions");
  }
  std::size_t selected = 0;
  for (auto m : mask) selected += m ? 1 : 0;
  if (selected == 0) throw ContractError("masked_mse_loss: mask selects no positions");
  const double n = static_cast<double>(selected * C);
  double s = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < P; ++p) {
      if (!mask[p]) continue;
      const double d = pred.value()[c * P + p] - target[c * P + p];
      s += d * d;
    }
  }
  const std::size_t pi = pred.index();
  return pred.tape()->record(Tensor({1}, s / n), {pi}, [=](Tape& t, const Tensor& g) {
    auto pv = t.value(pi).data();
    auto dst = t.adjoint_mut(pi).data();
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t p = 0; p < P; ++p) {
        if (!mask[p]) continue;
        const std::size_t i = c * P + p;
        dst[i] += 2.0 * (pv[i] - target[i]) / n * g[0];
      }
    }
  });
}

} // namespace qonv
