#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qonv/autodiff.hpp"
#include "qonv/error.hpp"
#include "qonv/model.hpp"
#include "qonv/ops.hpp"
#include "qonv/tensor.hpp"

namespace qonv {

enum class OptimizerKind { adam, adamw };

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "adamw") return OptimizerKind::adamw;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam or adamw)");
}

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "adamw"; }

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0; // decoupled, adamw only
};

/// Adam with bias correction; AdamW additionally shrinks each parameter by
/// lr * weight_decay before the Adam update.
class Optimizer {
public:
  Optimizer(OptimizerConfig cfg, const std::vector<Parameter*>& params) : cfg_(cfg) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  const OptimizerConfig& config() const noexcept { return cfg_; }
  std::size_t step_count() const noexcept { return t_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

  void step(const std::vector<Parameter*>& params) {
    if (params.size() != m_.size()) throw ContractError("optimizer: parameter list changed size");
    for (const Parameter* p : params) {
      if (!p->grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + p->id + "'");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double decay = cfg_.kind == OptimizerKind::adamw ? cfg_.lr * cfg_.weight_decay : 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = *params[i];
      if (p.grad.shape() != p.value.shape() || m_[i].shape() != p.value.shape()) {
        throw DimensionError("optimizer: shape of parameter '" + p.id + "' changed");
      }
      auto w = p.value.data();
      auto g = p.grad.data();
      auto m = m_[i].data();
      auto v = v_[i].data();
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (decay != 0.0) w[k] -= decay * w[k];
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        w[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

private:
  OptimizerConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct TrainConfig {
  std::size_t iterations = 2000;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  OptimizerConfig optimizer;
};

/// Full-batch training data. `low` has the layout of `target`; the loss only
/// sees positions where `train_mask` is non-zero.
struct TrainingData {
  Tensor coords;
  Tensor low;
  Tensor target;
  std::vector<std::uint8_t> train_mask;
};

struct TrainResult {
  /// trace[i] is the training loss before optimizer step i+1; the last entry
  /// is the loss after the final step. Length = iterations + 1.
  std::vector<double> loss_trace;
};

inline std::optional<Tensor> low_input_for(const Model& model, const Tensor& low) {
  if (model.spec().needs_low_freq()) return low;
  return std::nullopt;
}

inline TrainResult train(Model& model, const TrainingData& data, const TrainConfig& cfg) {
  const ModelSpec& spec = model.spec();
  if (data.target.rank() != spec.rank + 1) {
    throw ConfigError("model '" + spec.name + "' is rank " + std::to_string(spec.rank) + " but data has shape " +
                      shape_str(data.target.shape()));
  }
  if (data.target.dim(0) != spec.output_channels) {
    throw ConfigError("model '" + spec.name + "' outputs " + std::to_string(spec.output_channels) +
                      " channels, target has " + std::to_string(data.target.dim(0)));
  }
  if (data.train_mask.size() != spatial_size(data.target)) {
    throw DimensionError("train mask does not cover the target's positions");
  }
  const std::optional<Tensor> low = low_input_for(model, data.low);
  const Tensor input = model.input(data.coords, low);
  std::vector<Parameter*> params = model.parameter_ptrs();
  Optimizer opt(cfg.optimizer, params);

  TrainResult result;
  result.loss_trace.reserve(cfg.iterations + 1);
  for (std::size_t it = 0;; ++it) {
    Tape tape;
    try {
      Var pred = model.forward_input(tape, input, low);
      Var loss = masked_mse_loss(pred, data.target, data.train_mask);
      result.loss_trace.push_back(loss.value()[0]);
      if (it == cfg.iterations) break;
      tape.backward(loss, params);
      opt.step(params);
    } catch (const NumericError& e) {
      throw NumericError("training aborted at iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  return result;
}

} // namespace qonv
