#pragma once

// Experiment runners and their CSV artefacts.
//
// Output directory layout of a regression run:
//   run.csv         key,value          experiment, config hash, hyperparameters
//   metrics.csv     model,encoding,split,seed,psnr,ssim
//   summary.csv     model,encoding,params,mean_train_psnr,mean_val_psnr,mean_train_ssim,mean_val_ssim
//                   (sorted by mean_val_psnr, descending)
//   traces.csv      model,seed,iteration,loss
//   assertions.csv  label,expression,lhs,rhs,pass
//   run.log         timestamps and wall-clock seconds (not deterministic)
// Every CSV is deterministic for a given config file and seed offset.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qonv/harness/config.hpp"
#include "qonv/harness/csv.hpp"
#include "qonv/image_io.hpp"
#include "qonv/metrics.hpp"
#include "qonv/model.hpp"
#include "qonv/signals.hpp"
#include "qonv/theory.hpp"
#include "qonv/train.hpp"

namespace qonv::harness {

struct RunOptions {
  std::filesystem::path out_dir; // empty: use the config's output directory
  std::size_t jobs = 1;
  std::uint64_t seed_offset = 0;
  bool write = true;
};

struct MetricRow {
  std::string model;
  std::string encoding;
  std::string split;
  std::uint64_t seed = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct TraceRow {
  std::string model;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  double loss = 0.0;
};

struct SummaryRow {
  std::string model;
  std::string encoding;
  std::size_t params = 0;
  double mean_train_psnr = 0.0, mean_val_psnr = 0.0;
  double mean_train_ssim = 0.0, mean_val_ssim = 0.0;
};

struct AssertionResult {
  std::string label;
  std::string expression;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct TaskTiming {
  std::string model;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

struct RunRecord {
  std::string experiment;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> settings; // run.csv beyond the first two keys
  std::vector<MetricRow> metrics;
  std::vector<TraceRow> traces;
  std::vector<SummaryRow> summary;
  std::vector<AssertionResult> assertions;
  std::vector<TaskTiming> timings;
  double wall_seconds = 0.0;

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const AssertionResult& a) { return a.pass; });
  }

  const SummaryRow& summary_for(const std::string& model) const {
    for (const auto& s : summary) {
      if (s.model == model) return s;
    }
    throw ContractError("no summary row for model '" + model + "'");
  }
};

/// Runs `tasks` on up to `jobs` threads. Each task writes only its own
/// result slot; the first failure (by task index) is rethrown after all
/// threads have joined.
inline void run_parallel(const std::vector<std::function<void()>>& tasks, std::size_t jobs) {
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

inline std::string encoding_label(const ModelSpec& m) {
  return m.query_channels == 0 ? "none" : to_string(m.encoding.kind);
}

/// Fisher-Yates with raw mt19937_64 output so the permutation does not depend
/// on the standard library's distribution implementations.
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  return idx;
}

inline constexpr std::uint64_t kSplitSalt = 0x51a7c0de5eedULL;

inline std::vector<std::uint8_t> signal_train_mask(const SignalParams& sp, std::uint64_t seed) {
  std::vector<std::uint8_t> mask(sp.n, 0);
  if (sp.split == "even_odd") {
    for (std::size_t i = 0; i < sp.n; i += 2) mask[i] = 1;
    return mask;
  }
  const auto idx = permutation(sp.n, seed ^ kSplitSalt);
  auto n_train = static_cast<std::size_t>(std::llround(sp.train_fraction * static_cast<double>(sp.n)));
  n_train = std::clamp<std::size_t>(n_train, 1, sp.n - 1);
  for (std::size_t i = 0; i < n_train; ++i) mask[idx[i]] = 1;
  return mask;
}

inline std::vector<std::uint8_t> image_train_mask(std::size_t pixels, double val_fraction, std::uint64_t seed) {
  std::vector<std::uint8_t> mask(pixels, 1);
  const auto idx = permutation(pixels, seed ^ kSplitSalt);
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pixels)));
  n_val = std::clamp<std::size_t>(n_val, 1, pixels - 1);
  for (std::size_t i = 0; i < n_val; ++i) mask[idx[i]] = 0;
  return mask;
}

inline std::vector<std::uint8_t> invert(const std::vector<std::uint8_t>& m) {
  std::vector<std::uint8_t> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
  return out;
}

inline Tensor clamp01(Tensor t) {
  for (double& v : t.data()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

inline std::vector<TraceRow> trace_rows(const std::string& model, std::uint64_t seed, const std::vector<double>& trace,
                                        std::size_t log_every) {
  std::vector<TraceRow> rows;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i % log_every == 0 || i + 1 == trace.size()) rows.push_back({model, seed, i, round9(trace[i])});
  }
  return rows;
}

/// Everything a (model, seed) task needs, shared read-only between tasks.
struct Sample {
  std::uint64_t seed = 0;
  Tensor coords, low, full;
  std::vector<std::uint8_t> train_mask;
};

struct TaskOutput {
  std::vector<MetricRow> metrics;
  std::vector<TraceRow> traces;
  double seconds = 0.0;
};

struct Evaluator {
  bool image = false;
  double peak = 1.0;

  std::pair<MetricRow, MetricRow> operator()(const std::string& model, const std::string& enc, const Sample& s,
                                             const Tensor& pred) const {
    const auto val_mask = invert(s.train_mask);
    MetricRow tr{model, enc, "train", s.seed, 0.0, std::nan("")};
    MetricRow va{model, enc, "val", s.seed, 0.0, std::nan("")};
    tr.psnr = round9(psnr_masked(pred, s.full, s.train_mask, peak));
    va.psnr = round9(psnr_masked(pred, s.full, val_mask, peak));
    if (image) {
      tr.ssim = round9(ssim_masked(pred, s.full, s.train_mask));
      va.ssim = round9(ssim_masked(pred, s.full, val_mask));
    }
    return {tr, va};
  }
};

inline TaskOutput run_model_task(const ModelSpec& spec, const Sample& s, const TrainConfig& base_cfg,
                                 const Evaluator& eval) {
  const auto t0 = std::chrono::steady_clock::now();
  Model model = build_model(spec, s.seed);
  TrainConfig cfg = base_cfg;
  cfg.seed = s.seed;
  // Without a residual connection the network regresses the residual itself.
  Tensor target = spec.residual_output ? s.full : s.full - s.low;
  TrainResult res = train(model, TrainingData{s.coords, s.low, target, s.train_mask}, cfg);
  Tensor pred = model.predict(s.coords, low_input_for(model, s.low));
  if (!spec.residual_output) pred = pred + s.low;
  if (eval.image) pred = clamp01(std::move(pred));
  TaskOutput out;
  auto [tr, va] = eval(spec.name, encoding_label(spec), s, pred);
  out.metrics = {tr, va};
  out.traces = trace_rows(spec.name, s.seed, res.loss_trace, cfg.log_every);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::vector<SummaryRow> summarize(const ExperimentConfig& cfg, const std::vector<MetricRow>& metrics) {
  std::vector<SummaryRow> rows;
  auto add = [&](const std::string& name, const std::string& enc, std::size_t params) {
    MetricsReport tr{"train", {}, {}}, va{"val", {}, {}};
    for (const auto& m : metrics) {
      if (m.model != name) continue;
      MetricsReport& r = m.split == "train" ? tr : va;
      r.psnr.push_back(m.psnr);
      r.ssim.push_back(m.ssim);
    }
    rows.push_back({name, enc, params, round9(tr.mean_psnr()), round9(va.mean_psnr()), round9(tr.mean_ssim()),
                    round9(va.mean_ssim())});
  };
  add("lowfreq", "none", 0);
  for (const auto& m : cfg.models) add(m.name, encoding_label(m), m.parameter_count());
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.mean_val_psnr != b.mean_val_psnr) return a.mean_val_psnr > b.mean_val_psnr;
    return a.model < b.model;
  });
  return rows;
}

inline double summary_metric(const SummaryRow& s, Metric m) {
  switch (m) {
  case Metric::val_psnr: return s.mean_val_psnr;
  case Metric::train_psnr: return s.mean_train_psnr;
  case Metric::val_ssim: return s.mean_val_ssim;
  case Metric::train_ssim: return s.mean_train_ssim;
  }
  return 0.0;
}

inline std::vector<AssertionResult> evaluate_assertions(const std::vector<Assertion>& asserts, const RunRecord& rec) {
  std::vector<AssertionResult> out;
  for (const auto& a : asserts) {
    AssertionResult r{a.label, a.text, 0.0, 0.0, false};
    r.lhs = summary_metric(rec.summary_for(a.lhs_model), a.lhs_metric);
    r.rhs = a.rhs_metric ? summary_metric(rec.summary_for(a.rhs_model), *a.rhs_metric) + a.constant : a.constant;
    r.pass = a.holds(r.lhs, r.rhs);
    out.push_back(r);
  }
  return out;
}

inline std::string now_stamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::vector<std::pair<std::string, std::string>> regression_settings(const ExperimentConfig& cfg,
                                                                           std::uint64_t seed_offset) {
  std::vector<std::pair<std::string, std::string>> s;
  s.emplace_back("seed_offset", std::to_string(seed_offset));
  s.emplace_back("optimizer", to_string(cfg.train.optimizer.kind));
  s.emplace_back("lr", fmt9(cfg.train.optimizer.lr));
  s.emplace_back("beta1", fmt9(cfg.train.optimizer.beta1));
  s.emplace_back("beta2", fmt9(cfg.train.optimizer.beta2));
  s.emplace_back("eps", fmt9(cfg.train.optimizer.eps));
  s.emplace_back("weight_decay", fmt9(cfg.train.optimizer.weight_decay));
  s.emplace_back("iterations", std::to_string(cfg.train.iterations));
  s.emplace_back("batch", "full");
  if (cfg.kind == "regress1d") {
    s.emplace_back("n", std::to_string(cfg.signal.n));
    s.emplace_back("alpha", fmt9(cfg.signal.alpha));
    s.emplace_back("cutoff", fmt9(cfg.signal.cutoff));
    s.emplace_back("split", cfg.signal.split);
    if (cfg.signal.split == "random") s.emplace_back("train_fraction", fmt9(cfg.signal.train_fraction));
    s.emplace_back("normalization", "zero_mean_unit_max_abs");
    s.emplace_back("psnr_peak", fmt9(cfg.signal.peak));
  } else {
    s.emplace_back("image", cfg.image.path);
    s.emplace_back("blur_sigma", fmt9(cfg.image.blur_sigma));
    s.emplace_back("val_fraction", fmt9(cfg.image.val_fraction));
    s.emplace_back("psnr_peak", "1");
    s.emplace_back("prediction_clamp", "0..1");
  }
  return s;
}

} // namespace detail

inline std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg, std::uint64_t offset) {
  std::vector<std::uint64_t> s;
  for (auto v : cfg.seeds) s.push_back(v + offset);
  return s;
}

/// Shared driver for the 1-D and 2-D regressions once samples are built.
inline RunRecord run_regression(const ExperimentConfig& cfg, const std::vector<detail::Sample>& samples,
                                const detail::Evaluator& eval, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.experiment = cfg.kind;
  rec.config_hash = hex64(cfg.hash);
  rec.settings = detail::regression_settings(cfg, opt.seed_offset);

  const std::size_t M = cfg.models.size();
  std::vector<detail::TaskOutput> outputs(samples.size() * M);
  std::vector<std::function<void()>> tasks;
  for (std::size_t si = 0; si < samples.size(); ++si) {
    for (std::size_t mi = 0; mi < M; ++mi) {
      tasks.emplace_back([&, si, mi] {
        outputs[si * M + mi] = detail::run_model_task(cfg.models[mi], samples[si], cfg.train, eval);
      });
    }
  }
  run_parallel(tasks, opt.jobs);

  // Rows ordered by model (baseline first), then seed, then split.
  for (const auto& s : samples) {
    auto [tr, va] = eval("lowfreq", "none", s, s.low);
    rec.metrics.push_back(tr);
    rec.metrics.push_back(va);
  }
  for (std::size_t mi = 0; mi < M; ++mi) {
    for (std::size_t si = 0; si < samples.size(); ++si) {
      const auto& o = outputs[si * M + mi];
      rec.metrics.insert(rec.metrics.end(), o.metrics.begin(), o.metrics.end());
      rec.traces.insert(rec.traces.end(), o.traces.begin(), o.traces.end());
      rec.timings.push_back({cfg.models[mi].name, samples[si].seed, o.seconds});
    }
  }
  rec.summary = detail::summarize(cfg, rec.metrics);
  rec.assertions = detail::evaluate_assertions(cfg.assertions, rec);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

inline RunRecord run_regress1d(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  if (cfg.kind != "regress1d") throw ConfigError("run_regress1d: experiment kind is '" + cfg.kind + "'");
  for (const auto& m : cfg.models) {
    if (m.rank != 1) throw ConfigError("model '" + m.name + "' is not a 1-D model");
  }
  std::vector<detail::Sample> samples;
  for (auto seed : effective_seeds(cfg, opt.seed_offset)) {
    SignalPair sp = make_signal_pair(cfg.signal.n, cfg.signal.alpha, cfg.signal.cutoff, seed);
    samples.push_back({seed, sp.coords, sp.low, sp.full, detail::signal_train_mask(cfg.signal, seed)});
  }
  return run_regression(cfg, samples, detail::Evaluator{false, cfg.signal.peak}, opt);
}

inline RunRecord run_regress2d(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  if (cfg.kind != "regress2d") throw ConfigError("run_regress2d: experiment kind is '" + cfg.kind + "'");
  for (const auto& m : cfg.models) {
    if (m.rank != 2) throw ConfigError("model '" + m.name + "' is not a 2-D model");
  }
  Tensor img = load_image(cfg.resolve(cfg.image.path));
  if (img.dim(0) != 3) throw ConfigError(cfg.image.path + ": expected an RGB image");
  const SsimParams ssim_prm;
  if (img.dim(1) < ssim_prm.window || img.dim(2) < ssim_prm.window) {
    throw ConfigError(cfg.image.path + ": image smaller than the " + std::to_string(ssim_prm.window) +
                      "x" + std::to_string(ssim_prm.window) + " SSIM window");
  }
  ImagePair pair = make_image_pair(img, cfg.image.blur_sigma);
  std::vector<detail::Sample> samples;
  for (auto seed : effective_seeds(cfg, opt.seed_offset)) {
    samples.push_back({seed, pair.coords, pair.low, pair.ground_truth,
                       detail::image_train_mask(img.dim(1) * img.dim(2), cfg.image.val_fraction, seed)});
  }
  return run_regression(cfg, samples, detail::Evaluator{true, 1.0}, opt);
}

// ---------------------------------------------------------------- theory --

struct TheoryRow {
  std::size_t index = 0;
  std::string kind; // uniform_example | strict_gap | single_point | random
  std::size_t size = 0;
  std::size_t delta = 0;
  RiskChain risks;
  bool violated = false;
  std::string record; // instance dump when violated
};

struct TheoryReport {
  std::uint64_t seed = 0;
  std::vector<TheoryRow> rows;
  std::size_t violations = 0;
  std::size_t strict_gaps = 0; // instances with r1 > r2
  double max_r3 = 0.0;

  bool passed() const { return violations == 0; }
};

/// Three fixed instances (uniform example, strict gap, M = 1) followed by
/// `instances` random ones with M in [3, max_size].
inline TheoryReport run_theory(std::size_t instances, std::size_t max_size, std::uint64_t seed = 0) {
  if (max_size < 3) throw ConfigError("theory: max_size must be >= 3");
  std::vector<std::pair<std::string, LatticeProblem>> probs;
  LatticeProblem uniform{{0.25, 0.25, 0.25, 0.25}, {0.0, 1.0, 0.0, 1.0}, {0.5, 0.5, 0.5, 0.5}, 1, false};
  probs.emplace_back("uniform_example", uniform);
  probs.emplace_back("strict_gap", strict_gap_instance());
  probs.emplace_back("single_point", LatticeProblem{{1.0}, {0.5}, {0.25}, 1, false});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i) probs.emplace_back("random", random_lattice_problem(rng, max_size));

  TheoryReport rep;
  rep.seed = seed;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& [kind, prob] = probs[i];
    TheoryRow row{i, kind, prob.size(), prob.delta, {}, false, {}};
    try {
      row.risks = verify_monotone_chain(prob);
    } catch (const VerificationError& e) {
      row.violated = true;
      row.record = e.record();
      row.risks = {optimal_risk(prob, FeatureMap::phi1_approx), optimal_risk(prob, FeatureMap::phi2_neighborhood),
                   optimal_risk(prob, FeatureMap::phi3_neighborhood_and_queries)};
      ++rep.violations;
    }
    if (row.risks.r1 > row.risks.r2) ++rep.strict_gaps;
    rep.max_r3 = std::max(rep.max_r3, row.risks.r3);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline std::string theory_csv(const TheoryReport& rep) {
  CsvWriter w({"instance", "kind", "size", "delta", "r1", "r2", "r3", "violated"});
  for (const auto& r : rep.rows) {
    w.row({std::to_string(r.index), r.kind, std::to_string(r.size), std::to_string(r.delta), fmt9(r.risks.r1),
           fmt9(r.risks.r2), fmt9(r.risks.r3), r.violated ? "1" : "0"});
  }
  return w.str();
}

inline std::string theory_summary_csv(const TheoryReport& rep) {
  CsvWriter w({"instances", "violations", "strict_gaps", "max_r3", "seed"});
  w.row({std::to_string(rep.rows.size()), std::to_string(rep.violations), std::to_string(rep.strict_gaps),
         fmt9(rep.max_r3), std::to_string(rep.seed)});
  return w.str();
}

// ----------------------------------------------------------------- bound --

struct BoundRow {
  double eps = 0.0;
  double n_bound = 0.0;
  double ratio = 0.0; // n(eps/2) / n(eps)
};

inline std::vector<BoundRow> run_bound_table(double c, const std::vector<double>& eps) {
  std::vector<BoundRow> rows;
  for (double e : eps) {
    const double n = gaussian_count_bound(e, c);
    rows.push_back({e, n, gaussian_count_bound(e / 2.0, c) / n});
  }
  return rows;
}

inline std::string bound_csv(const std::vector<BoundRow>& rows) {
  CsvWriter w({"eps", "n_bound", "ratio"});
  for (const auto& r : rows) w.row({fmt9(r.eps), fmt9(r.n_bound), fmt9(r.ratio)});
  return w.str();
}

// ----------------------------------------------------------- record I/O --

inline std::string run_csv(const RunRecord& rec) {
  CsvWriter w({"key", "value"});
  w.row({"experiment", rec.experiment});
  w.row({"config_hash", rec.config_hash});
  for (const auto& [k, v] : rec.settings) w.row({k, v});
  return w.str();
}

inline std::string metrics_csv(const RunRecord& rec) {
  CsvWriter w({"model", "encoding", "split", "seed", "psnr", "ssim"});
  for (const auto& m : rec.metrics) {
    w.row({m.model, m.encoding, m.split, std::to_string(m.seed), fmt9(m.psnr), fmt9(m.ssim)});
  }
  return w.str();
}

inline std::string summary_csv(const RunRecord& rec) {
  CsvWriter w({"model", "encoding", "params", "mean_train_psnr", "mean_val_psnr", "mean_train_ssim",
               "mean_val_ssim"});
  for (const auto& s : rec.summary) {
    w.row({s.model, s.encoding, std::to_string(s.params), fmt9(s.mean_train_psnr), fmt9(s.mean_val_psnr),
           fmt9(s.mean_train_ssim), fmt9(s.mean_val_ssim)});
  }
  return w.str();
}

inline std::string traces_csv(const RunRecord& rec) {
  CsvWriter w({"model", "seed", "iteration", "loss"});
  for (const auto& t : rec.traces) w.row({t.model, std::to_string(t.seed), std::to_string(t.iteration), fmt9(t.loss)});
  return w.str();
}

inline std::string assertions_csv(const RunRecord& rec) {
  CsvWriter w({"label", "expression", "lhs", "rhs", "pass"});
  for (const auto& a : rec.assertions) {
    std::string expr = a.expression;
    std::replace(expr.begin(), expr.end(), ',', ';');
    w.row({a.label, expr, fmt9(a.lhs), fmt9(a.rhs), a.pass ? "1" : "0"});
  }
  return w.str();
}

inline std::string run_log(const RunRecord& rec) {
  std::ostringstream os;
  os << "finished " << detail::now_stamp() << "\n";
  os << "experiment " << rec.experiment << " config_hash " << rec.config_hash << "\n";
  for (const auto& [k, v] : rec.settings) os << k << " " << v << "\n";
  for (const auto& t : rec.timings) {
    os << "task model=" << t.model << " seed=" << t.seed << " seconds=" << fmt9(t.seconds) << "\n";
  }
  for (const auto& a : rec.assertions) {
    os << (a.pass ? "PASS " : "FAIL ") << a.label << ": " << a.expression << " (" << fmt9(a.lhs) << " vs "
       << fmt9(a.rhs) << ")\n";
  }
  os << "wall_seconds " << fmt9(rec.wall_seconds) << "\n";
  return os.str();
}

inline void write_run_record(const std::filesystem::path& dir, const RunRecord& rec) {
  write_atomic(dir / "run.csv", run_csv(rec));
  write_atomic(dir / "metrics.csv", metrics_csv(rec));
  write_atomic(dir / "summary.csv", summary_csv(rec));
  write_atomic(dir / "traces.csv", traces_csv(rec));
  write_atomic(dir / "assertions.csv", assertions_csv(rec));
  write_atomic(dir / "run.log", run_log(rec));
}

/// Rebuilds the deterministic part of a RunRecord (identity, settings,
/// metrics, traces) from an output directory.
inline RunRecord read_run_record(const std::filesystem::path& dir) {
  RunRecord rec;
  {
    const auto t = parse_csv(read_file(dir / "run.csv"), "run.csv");
    for (const auto& r : t.rows) {
      if (r[0] == "experiment") rec.experiment = r[1];
      else if (r[0] == "config_hash") rec.config_hash = r[1];
      else rec.settings.emplace_back(r[0], r[1]);
    }
  }
  {
    const auto t = parse_csv(read_file(dir / "metrics.csv"), "metrics.csv");
    const auto cm = t.column("model"), ce = t.column("encoding"), cs = t.column("split"), cd = t.column("seed"),
               cp = t.column("psnr"), cq = t.column("ssim");
    for (const auto& r : t.rows) {
      rec.metrics.push_back({r[cm], r[ce], r[cs], std::stoull(r[cd]), parse_csv_double(r[cp]),
                             parse_csv_double(r[cq])});
    }
  }
  {
    const auto t = parse_csv(read_file(dir / "traces.csv"), "traces.csv");
    const auto cm = t.column("model"), cd = t.column("seed"), ci = t.column("iteration"), cl = t.column("loss");
    for (const auto& r : t.rows) {
      rec.traces.push_back({r[cm], std::stoull(r[cd]), std::stoull(r[ci]), parse_csv_double(r[cl])});
    }
  }
  return rec;
}

inline bool same_record(const RunRecord& a, const RunRecord& b) {
  if (a.experiment != b.experiment || a.config_hash != b.config_hash || a.settings != b.settings) return false;
  if (a.metrics.size() != b.metrics.size() || a.traces.size() != b.traces.size()) return false;
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    const auto &x = a.metrics[i], &y = b.metrics[i];
    if (x.model != y.model || x.encoding != y.encoding || x.split != y.split || x.seed != y.seed ||
        !same_value(x.psnr, y.psnr) || !same_value(x.ssim, y.ssim)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    const auto &x = a.traces[i], &y = b.traces[i];
    if (x.model != y.model || x.seed != y.seed || x.iteration != y.iteration || !same_value(x.loss, y.loss)) {
      return false;
    }
  }
  return true;
}

// -------------------------------------------------------------- dispatch --

struct Outcome {
  int exit_code = 0;
  std::string report; // human-readable summary for stdout
};

inline Outcome run_config(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::filesystem::path dir = opt.out_dir.empty() ? cfg.resolve(cfg.output_dir) : opt.out_dir;
  std::ostringstream os;
  if (cfg.kind == "regress1d" || cfg.kind == "regress2d") {
    RunRecord rec = cfg.kind == "regress1d" ? run_regress1d(cfg, opt) : run_regress2d(cfg, opt);
    if (opt.write) write_run_record(dir, rec);
    os << summary_csv(rec);
    for (const auto& a : rec.assertions) {
      os << (a.pass ? "PASS " : "FAIL ") << a.label << ": " << fmt9(a.lhs) << " " << a.expression << " -> rhs "
         << fmt9(a.rhs) << "\n";
    }
    return {rec.passed() ? 0 : 1, os.str()};
  }
  if (cfg.kind == "theory") {
    const TheoryReport rep = run_theory(cfg.theory.instances, cfg.theory.max_size, cfg.theory.seed + opt.seed_offset);
    if (opt.write) {
      write_atomic(dir / "theory.csv", theory_csv(rep));
      write_atomic(dir / "theory_summary.csv", theory_summary_csv(rep));
      std::string dump;
      for (const auto& r : rep.rows) {
        if (r.violated) dump += "instance " + std::to_string(r.index) + "\n" + r.record;
      }
      if (!dump.empty()) write_atomic(dir / "violations.txt", dump);
    }
    os << theory_summary_csv(rep);
    return {rep.passed() ? 0 : 1, os.str()};
  }
  const auto rows = run_bound_table(cfg.bound.c, cfg.bound.eps);
  if (opt.write) write_atomic(dir / "bound.csv", bound_csv(rows));
  os << bound_csv(rows);
  return {0, os.str()};
}

} // namespace qonv::harness
