#pragma once

// MLP / CNN / QNN model families.
//
// All three share one layer stack: `depth` layers of width `width`, with the
// activation between layers and a bare output layer. The MLP applies its
// layers per position through `linear`; CNN and QNN apply `conv1d`/`conv2d`
// with a `kernel`-sized window. A QNN's first layer sees the channel-wise
// concatenation of encoded queries and the low-frequency signal.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qonv/autodiff.hpp"
#include "qonv/encoding.hpp"
#include "qonv/error.hpp"
#include "qonv/ops.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

enum class Family { mlp, cnn, qnn };

inline Family parse_family(const std::string& s) {
  if (s == "mlp") return Family::mlp;
  if (s == "cnn") return Family::cnn;
  if (s == "qnn") return Family::qnn;
  throw ConfigError("unknown model family '" + s + "' (expected mlp, cnn or qnn)");
}

inline std::string to_string(Family f) {
  switch (f) {
  case Family::mlp: return "mlp";
  case Family::cnn: return "cnn";
  case Family::qnn: return "qnn";
  }
  return "?";
}

struct ModelSpec {
  std::string name = "model";
  Family family = Family::mlp;
  std::size_t depth = 4;  // number of linear/conv layers, output layer included
  std::size_t width = 256;
  std::size_t kernel = 0; // 0 = unset; required odd >= 1 for cnn/qnn, forbidden for mlp
  std::size_t rank = 1;   // spatial rank of the signal: 1 or 2
  EncodingSpec encoding;
  Activation activation;
  std::size_t low_freq_channels = 0; // channels of the low-frequency input consumed by the net
  std::size_t query_channels = 1;    // coordinate dimension; 0 disables queries
  std::size_t output_channels = 1;
  bool residual_output = true; // prediction = low_freq + network output
  bool bias = true;
  bool zero_output_init = false; // output layer weights start at zero

  /// Throws ConfigError when the spec is inconsistent.
  void validate() const {
    const std::string who = "model '" + name + "': ";
    if (rank != 1 && rank != 2) throw ConfigError(who + "rank must be 1 or 2");
    if (depth < 1) throw ConfigError(who + "depth must be >= 1");
    if (depth > 1 && width < 1) throw ConfigError(who + "width must be >= 1");
    if (output_channels < 1) throw ConfigError(who + "output_channels must be >= 1");
    switch (family) {
    case Family::mlp:
      if (kernel != 0) throw ConfigError(who + "mlp does not take a kernel size");
      if (low_freq_channels != 0) throw ConfigError(who + "mlp does not consume the low-frequency signal");
      if (query_channels < 1) throw ConfigError(who + "mlp needs query channels");
      break;
    case Family::cnn:
      if (kernel < 1 || kernel % 2 == 0) throw ConfigError(who + "cnn needs an odd kernel >= 1");
      if (low_freq_channels == 0 && query_channels == 0) throw ConfigError(who + "cnn has no input");
      break;
    case Family::qnn:
      if (kernel < 1 || kernel % 2 == 0) throw ConfigError(who + "qnn needs an odd kernel >= 1");
      if (low_freq_channels < 1) throw ConfigError(who + "qnn needs low_freq_channels >= 1");
      if (query_channels < 1) throw ConfigError(who + "qnn needs query channels");
      break;
    }
    if (activation.kind == ActivationKind::siren && !(activation.omega0 > 0.0)) {
      throw ConfigError(who + "siren needs omega0 > 0");
    }
  }

  bool consumes_low_freq() const { return low_freq_channels > 0; }
  bool needs_low_freq() const { return consumes_low_freq() || residual_output; }

  std::size_t encoded_query_channels() const {
    return query_channels == 0 ? 0 : Encoding(encoding, query_channels, 0).output_dim();
  }

  std::size_t input_channels() const { return encoded_query_channels() + low_freq_channels; }

  std::size_t taps() const {
    if (family == Family::mlp) return 1;
    return rank == 1 ? kernel : kernel * kernel;
  }

  /// (fan_in, fan_out) of every layer, in order.
  std::vector<std::pair<std::size_t, std::size_t>> layer_channels() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t c = input_channels();
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t next = l + 1 == depth ? output_channels : width;
      out.emplace_back(c, next);
      c = next;
    }
    return out;
  }

  /// Closed-form parameter count.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto [cin, cout] : layer_channels()) n += cin * cout * taps() + (bias ? cout : 0);
    return n;
  }
};

/// Width for a conv model whose per-layer parameter count matches an MLP of
/// width `mlp_width`: round(w / sqrt(K)) for 1-D kernels, round(w / K) for
/// K x K kernels.
inline std::size_t matched_width(std::size_t mlp_width, std::size_t kernel, std::size_t rank) {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("matched_width: kernel must be odd and >= 1");
  if (rank != 1 && rank != 2) throw ConfigError("matched_width: rank must be 1 or 2");
  const double factor = rank == 1 ? std::sqrt(static_cast<double>(kernel)) : static_cast<double>(kernel);
  if (static_cast<double>(mlp_width) < factor) {
    throw ConfigError("matched_width: width " + std::to_string(mlp_width) + " is below the scaling factor");
  }
  const auto w = static_cast<std::size_t>(std::llround(static_cast<double>(mlp_width) / factor));
  if (w < 1) throw ConfigError("matched_width: result < 1");
  return w;
}

class Model {
public:
  Model() = default;

  /// Builds the layer stack. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
  /// biases zero; the fourier frequency matrix and the weights are drawn from
  /// independent streams seeded by `seed`.
  Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    encoding_ = Encoding(spec_.encoding, spec_.query_channels, seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 rng(seed);
    const std::size_t taps = spec_.taps();
    const auto layers = spec_.layer_channels();
    params_.reserve(layers.size() * 2);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto [cin, cout] = layers[l];
      Shape ws;
      if (spec_.family == Family::mlp) {
        ws = {cin, cout};
      } else if (spec_.rank == 1) {
        ws = {cout, cin, spec_.kernel};
      } else {
        ws = {cout, cin, spec_.kernel, spec_.kernel};
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(cin * taps));
      std::uniform_real_distribution<double> dist(-bound, bound);
      Tensor w(ws);
      for (double& v : w.data()) v = dist(rng);
      if (spec_.zero_output_init && l + 1 == layers.size()) w.fill(0.0);
      params_.emplace_back("layer" + std::to_string(l) + ".weight", std::move(w));
      if (spec_.bias) params_.emplace_back("layer" + std::to_string(l) + ".bias", Tensor({cout}));
    }
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  const Encoding& encoding() const noexcept { return encoding_; }
  Encoding& encoding() noexcept { return encoding_; }

  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }

  std::vector<Parameter*> parameter_ptrs() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
  }

  /// Network input for queries `q` ([d x ...]) and the low-frequency signal:
  /// encode(q) ⊕ low, either part omitted when the spec does not consume it.
  Tensor input(const Tensor& q, const std::optional<Tensor>& low_freq) const {
    check_inputs(q, low_freq);
    std::optional<Tensor> enc;
    if (spec_.query_channels > 0) enc = encoding_.encode(q);
    if (!spec_.consumes_low_freq()) return *enc;
    if (low_freq->dim(0) != spec_.low_freq_channels) {
      throw DimensionError("model '" + spec_.name + "' expects " + std::to_string(spec_.low_freq_channels) +
                           " low-frequency channels, got " + shape_str(low_freq->shape()));
    }
    if (!enc) return *low_freq;
    if (spatial_shape(*enc) != spatial_shape(*low_freq)) {
      throw DimensionError("queries " + shape_str(q.shape()) + " and low-frequency signal " +
                           shape_str(low_freq->shape()) + " disagree spatially");
    }
    Tensor::Storage d(enc->values());
    d.insert(d.end(), low_freq->values().begin(), low_freq->values().end());
    Shape s = enc->shape();
    s[0] += low_freq->dim(0);
    return Tensor(std::move(s), std::move(d));
  }

  /// Forward pass over a precomputed `input()` tensor.
  Var forward_input(Tape& tape, const Tensor& input, const std::optional<Tensor>& low_freq) {
    if (spec_.residual_output && !low_freq) {
      throw ContractError("model '" + spec_.name + "' adds the low-frequency signal to its output but none was given");
    }
    const Shape spatial = spatial_shape(input);
    Var h = tape.constant(input);
    const std::size_t L = spec_.depth;
    const std::size_t stride = spec_.bias ? 2 : 1;
    if (spec_.family == Family::mlp) {
      const std::size_t P = spatial_size(input);
      h = transpose(reshape(h, {input.dim(0), P}));
      for (std::size_t l = 0; l < L; ++l) {
        Var w = tape.param(params_[l * stride]);
        std::optional<Var> b;
        if (spec_.bias) b = tape.param(params_[l * stride + 1]);
        h = linear(h, w, b);
        if (l + 1 < L) h = activation(h, spec_.activation);
      }
      Shape os = spatial;
      os.insert(os.begin(), spec_.output_channels);
      h = reshape(transpose(h), os);
    } else {
      for (std::size_t l = 0; l < L; ++l) {
        Var k = tape.param(params_[l * stride]);
        std::optional<Var> b;
        if (spec_.bias) b = tape.param(params_[l * stride + 1]);
        h = spec_.rank == 1 ? conv1d(h, k, b) : conv2d(h, k, b);
        if (l + 1 < L) h = activation(h, spec_.activation);
      }
    }
    if (spec_.residual_output) {
      if (low_freq->shape() != h.shape()) {
        throw DimensionError("residual output " + shape_str(h.shape()) + " vs low-frequency signal " +
                             shape_str(low_freq->shape()));
      }
      h = add(h, tape.constant(*low_freq));
    }
    return h;
  }

  Var forward(Tape& tape, const Tensor& q, const std::optional<Tensor>& low_freq) {
    return forward_input(tape, input(q, low_freq), low_freq);
  }

  /// Forward pass without gradient bookkeeping the caller cares about.
  Tensor predict(const Tensor& q, const std::optional<Tensor>& low_freq) {
    Tape tape;
    return forward(tape, q, low_freq).value();
  }

private:
  void check_inputs(const Tensor& q, const std::optional<Tensor>& low_freq) const {
    if (spec_.needs_low_freq() && !low_freq) {
      throw ContractError("model '" + spec_.name + "' requires a low-frequency input");
    }
    if (!spec_.needs_low_freq() && low_freq) {
      throw ContractError("model '" + spec_.name + "' does not take a low-frequency input");
    }
    if (q.rank() != spec_.rank + 1) {
      throw DimensionError("model '" + spec_.name + "' is rank " + std::to_string(spec_.rank) +
                           ", queries have shape " + shape_str(q.shape()));
    }
    if (spec_.query_channels > 0 && q.dim(0) != spec_.query_channels) {
      throw ConfigError("model '" + spec_.name + "' expects " + std::to_string(spec_.query_channels) +
                        " query channels, got " + shape_str(q.shape()));
    }
  }

  ModelSpec spec_;
  Encoding encoding_;
  std::vector<Parameter> params_;
};

inline Model build_model(const ModelSpec& spec, std::uint64_t seed) { return Model(spec, seed); }

} // namespace qonv
