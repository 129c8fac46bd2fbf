#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "qonv/error.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

enum class EncodingKind { vanilla, fourier, per_axis_fourier, exponential };

inline EncodingKind parse_encoding_kind(const std::string& s) {
  if (s == "vanilla") return EncodingKind::vanilla;
  if (s == "fourier") return EncodingKind::fourier;
  if (s == "per_axis_fourier") return EncodingKind::per_axis_fourier;
  if (s == "exponential") return EncodingKind::exponential;
  throw ConfigError("unknown encoding '" + s + "' (expected vanilla, fourier, per_axis_fourier or exponential)");
}

inline std::string to_string(EncodingKind k) {
  switch (k) {
  case EncodingKind::vanilla: return "vanilla";
  case EncodingKind::fourier: return "fourier";
  case EncodingKind::per_axis_fourier: return "per_axis_fourier";
  case EncodingKind::exponential: return "exponential";
  }
  return "?";
}

struct EncodingSpec {
  EncodingKind kind = EncodingKind::vanilla;
  std::size_t num_features = 256; // fourier variants
  double sigma = 10.0;            // fourier variants
  std::size_t num_octaves = 8;    // exponential

  friend bool operator==(const EncodingSpec&, const EncodingSpec&) = default;
};

/// Fixed (non-trainable) transform of coordinate queries applied before the
/// first layer. Operates on channels-first query tensors [d x ...].
class Encoding {
public:
  Encoding() = default;

  /// Samples the frequency matrix (fourier variants) from `seed`. The matrix
  /// is frozen for the lifetime of the encoding.
  Encoding(EncodingSpec spec, std::size_t input_dim, std::uint64_t seed)
      : spec_(spec), input_dim_(input_dim) {
    if (spec_.kind == EncodingKind::fourier || spec_.kind == EncodingKind::per_axis_fourier) {
      if (spec_.num_features == 0) throw ConfigError("fourier encoding needs num_features >= 1");
      if (!(spec_.sigma >= 0.0)) throw ConfigError("fourier encoding needs sigma >= 0");
    }
    if (spec_.kind == EncodingKind::exponential && spec_.num_octaves == 0) {
      throw ConfigError("exponential encoding needs num_octaves >= 1");
    }
    if (input_dim_ == 0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (spec_.kind == EncodingKind::fourier) {
      frequencies_ = Tensor({spec_.num_features, input_dim_});
    } else if (spec_.kind == EncodingKind::per_axis_fourier) {
      frequencies_ = Tensor({input_dim_, spec_.num_features});
    } else {
      return;
    }
    for (double& b : frequencies_.data()) b = spec_.sigma * normal(rng);
  }

  const EncodingSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return input_dim_; }

  /// Frequency matrix: [num_features x d] for fourier, [d x num_features]
  /// for per-axis fourier, empty otherwise.
  const Tensor& frequencies() const noexcept { return frequencies_; }
  void set_frequencies(Tensor b) {
    if (b.shape() != frequencies_.shape()) {
      throw DimensionError("frequency matrix " + shape_str(b.shape()) + " vs " + shape_str(frequencies_.shape()));
    }
    frequencies_ = std::move(b);
  }

  std::size_t output_dim() const {
    switch (spec_.kind) {
    case EncodingKind::vanilla: return input_dim_;
    case EncodingKind::fourier: return input_dim_ ? 2 * spec_.num_features : 0;
    case EncodingKind::per_axis_fourier: return 2 * spec_.num_features * input_dim_;
    case EncodingKind::exponential: return 2 * spec_.num_octaves * input_dim_;
    }
    return 0;
  }

  Tensor encode(const Tensor& q) const {
    if (q.rank() < 2 || q.dim(0) != input_dim_) {
      throw ConfigError("encoding expects " + std::to_string(input_dim_) + " query channels, got " +
                        shape_str(q.shape()));
    }
    if (spec_.kind == EncodingKind::vanilla) return q;

    const std::size_t P = spatial_size(q);
    Shape os = q.shape();
    os[0] = output_dim();
    Tensor out(os);
    auto dst = out.data();
    auto src = q.data();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    if (spec_.kind == EncodingKind::fourier) {
      const std::size_t m = spec_.num_features;
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t p = 0; p < P; ++p) {
          double phase = 0.0;
          for (std::size_t a = 0; a < input_dim_; ++a) phase += frequencies_.at(j, a) * src[a * P + p];
          dst[j * P + p] = std::cos(two_pi * phase);
          dst[(m + j) * P + p] = std::sin(two_pi * phase);
        }
      }
    } else if (spec_.kind == EncodingKind::per_axis_fourier) {
      // Per axis: a [cos; sin] block of 2m channels.
      const std::size_t m = spec_.num_features;
      for (std::size_t a = 0; a < input_dim_; ++a) {
        const std::size_t base = a * 2 * m;
        for (std::size_t j = 0; j < m; ++j) {
          const double b = frequencies_.at(a, j);
          for (std::size_t p = 0; p < P; ++p) {
            const double phase = two_pi * b * src[a * P + p];
            dst[(base + j) * P + p] = std::cos(phase);
            dst[(base + m + j) * P + p] = std::sin(phase);
          }
        }
      }
    } else {
      // Per axis and octave j: sin(2^j pi q), cos(2^j pi q).
      const std::size_t L = spec_.num_octaves;
      for (std::size_t a = 0; a < input_dim_; ++a) {
        for (std::size_t j = 0; j < L; ++j) {
          const double scale = std::ldexp(std::numbers::pi, static_cast<int>(j));
          const std::size_t c = (a * L + j) * 2;
          for (std::size_t p = 0; p < P; ++p) {
            const double phase = scale * src[a * P + p];
            dst[c * P + p] = std::sin(phase);
            dst[(c + 1) * P + p] = std::cos(phase);
          }
        }
      }
    }
    return out;
  }

private:
  EncodingSpec spec_;
  std::size_t input_dim_ = 0;
  Tensor frequencies_;
};

} // namespace qonv
