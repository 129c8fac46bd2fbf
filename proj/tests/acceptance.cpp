// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits 1 if any criterion fails.
//
//   acceptance [--out DIR] [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qonv/autodiff.hpp"
#include "qonv/harness/config.hpp"
#include "qonv/harness/csv.hpp"
#include "qonv/harness/experiments.hpp"
#include "qonv/metrics.hpp"
#include "qonv/model.hpp"
#include "qonv/ops.hpp"
#include "qonv/platform.hpp"
#include "qonv/signals.hpp"
#include "qonv/theory.hpp"

#ifndef QONV_SOURCE_DIR
#define QONV_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;
using namespace qonv;
using namespace qonv::harness;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v) { return fmt9(v); }

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.data()) v = d(rng);
  return t;
}

// ---------------------------------------------------------------- 1: grads

struct FdStats {
  std::size_t probes = 0;
  double worst = 0.0;
  std::string worst_at;
};

// Central differences with step 1e-6 on `probes` random entries across all
// parameters; relative error |a-b| / max(|a|, |b|, 1e-6).
void fd_check(const std::string& label, const std::vector<Parameter*>& params,
              const std::function<Var(Tape&)>& loss_fn, std::size_t probes, std::uint64_t seed, FdStats& st) {
  {
    Tape t;
    t.backward(loss_fn(t), params);
  }
  auto eval = [&] {
    Tape t;
    return loss_fn(t).value()[0];
  };
  std::vector<std::pair<Parameter*, std::size_t>> entries;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.numel(); ++i) entries.emplace_back(p, i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);
  if (entries.size() > probes) entries.resize(probes);
  const double h = 1e-6;
  for (auto [p, i] : entries) {
    const double orig = p->value[i];
    p->value[i] = orig + h;
    const double up = eval();
    p->value[i] = orig - h;
    const double down = eval();
    p->value[i] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double a = p->grad[i];
    const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
    ++st.probes;
    if (err > st.worst) {
      st.worst = err;
      st.worst_at = label + ":" + p->id + "[" + std::to_string(i) + "]";
    }
  }
}

ModelSpec small_spec(Family fam, std::size_t rank, const char* act, EncodingKind enc = EncodingKind::vanilla) {
  ModelSpec s;
  s.name = to_string(fam);
  s.family = fam;
  s.rank = rank;
  s.depth = 3;
  s.width = 6;
  s.kernel = fam == Family::mlp ? 0 : 3;
  s.query_channels = rank;
  s.low_freq_channels = fam == Family::mlp ? 0 : (rank == 1 ? 1 : 3);
  s.output_channels = rank == 1 ? 1 : 3;
  s.activation = Activation::parse(act, 3.0);
  s.encoding.kind = enc;
  s.encoding.num_features = 8;
  s.encoding.sigma = 2.0;
  s.encoding.num_octaves = 3;
  return s;
}

Verdict criterion_gradients() {
  const auto t0 = Clock::now();
  FdStats st;
  std::map<std::string, std::size_t> per_case;
  const std::size_t probes = 40;
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    std::mt19937_64 rng(seed);
    auto count = [&](const std::string& label, const std::size_t before) { per_case[label] += st.probes - before; };

    // single layers
    {
      Parameter x("x", random_tensor({8, 4}, rng)), w("w", random_tensor({4, 3}, rng)), b("b", random_tensor({3}, rng));
      const Tensor target = random_tensor({8, 3}, rng);
      const std::size_t before = st.probes;
      fd_check("linear", {&x, &w, &b},
               [&](Tape& t) { return mse_loss(linear(t.param(x), t.param(w), t.param(b)), target); }, probes, seed,
               st);
      count("linear", before);
    }
    {
      Parameter x("x", random_tensor({2, 9}, rng)), k("k", random_tensor({3, 2, 3}, rng)),
          b("b", random_tensor({3}, rng));
      const Tensor target = random_tensor({3, 9}, rng);
      const std::size_t before = st.probes;
      fd_check("conv1d", {&x, &k, &b},
               [&](Tape& t) { return mse_loss(conv1d(t.param(x), t.param(k), t.param(b)), target); }, probes, seed,
               st);
      count("conv1d", before);
    }
    {
      Parameter x("x", random_tensor({2, 5, 6}, rng)), k("k", random_tensor({3, 2, 3, 3}, rng)),
          b("b", random_tensor({3}, rng));
      const Tensor target = random_tensor({3, 5, 6}, rng);
      const std::size_t before = st.probes;
      fd_check("conv2d", {&x, &k, &b},
               [&](Tape& t) { return mse_loss(conv2d(t.param(x), t.param(k), t.param(b)), target); }, probes, seed,
               st);
      count("conv2d", before);
    }
    for (const char* act : {"relu", "siren", "sinc", "erf"}) {
      Tensor v = random_tensor({5, 8}, rng);
      if (std::string(act) == "relu") {
        for (double& e : v.data()) e += e >= 0 ? 0.05 : -0.05;
      }
      Parameter x("x", v);
      const Activation a = Activation::parse(act, 3.0);
      const Tensor target = random_tensor({5, 8}, rng);
      const std::size_t before = st.probes;
      fd_check(act, {&x}, [&](Tape& t) { return mse_loss(activation(t.param(x), a), target); }, probes, seed, st);
      count(std::string("act_") + act, before);
    }
    {
      Parameter a("a", random_tensor({2, 9}, rng)), b("b", random_tensor({1, 9}, rng)),
          k("k", random_tensor({2, 3, 3}, rng));
      const Tensor target = random_tensor({2, 9}, rng);
      const std::size_t before = st.probes;
      fd_check("concat", {&a, &b, &k},
               [&](Tape& t) { return mse_loss(conv1d(concat_channels(t.param(a), t.param(b)), t.param(k)), target); },
               probes, seed, st);
      count("concat", before);
    }
    {
      Parameter x("x", random_tensor({5, 8}, rng));
      const Tensor target = random_tensor({5, 8}, rng);
      std::vector<std::uint8_t> mask(8);
      for (std::size_t i = 0; i < 8; ++i) mask[i] = i % 3 != 0;
      const std::size_t before = st.probes;
      fd_check("masked_mse", {&x}, [&](Tape& t) { return masked_mse_loss(t.param(x), target, mask); }, probes, seed,
               st);
      count("masked_mse", before);
    }

    // full models
    struct Case {
      std::string label;
      ModelSpec spec;
    };
    std::vector<Case> cases{
        {"mlp_relu_1d", small_spec(Family::mlp, 1, "relu")},
        {"mlp_fourier_1d", small_spec(Family::mlp, 1, "relu", EncodingKind::fourier)},
        {"mlp_siren_2d", small_spec(Family::mlp, 2, "siren")},
        {"cnn_sinc_1d", small_spec(Family::cnn, 1, "sinc")},
        {"cnn_erf_2d", small_spec(Family::cnn, 2, "erf")},
        {"qnn_relu_1d", small_spec(Family::qnn, 1, "relu")},
        {"qnn_exponential_1d", small_spec(Family::qnn, 1, "sinc", EncodingKind::exponential)},
        {"qnn_relu_2d", small_spec(Family::qnn, 2, "relu", EncodingKind::per_axis_fourier)},
    };
    for (auto& c : cases) {
      Model m(c.spec, seed);
      // zero biases put relu pre-activations exactly on the kink at x = 0
      for (Parameter& p : m.parameters()) {
        if (p.value.rank() == 1) p.value = random_tensor(p.value.shape(), rng, -0.5, 0.5);
      }
      const std::size_t n = 9;
      const Tensor q = c.spec.rank == 1 ? sample_coords(n) : sample_coords(n, 2, 7);
      const Shape sp = spatial_shape(q);
      Shape lo_shape{c.spec.output_channels};
      lo_shape.insert(lo_shape.end(), sp.begin(), sp.end());
      const Tensor low = random_tensor(lo_shape, rng, 0.0, 1.0);
      const Tensor target = random_tensor(lo_shape, rng, 0.0, 1.0);
      const std::optional<Tensor> lo = c.spec.needs_low_freq() ? std::optional<Tensor>(low) : std::nullopt;
      const std::size_t before = st.probes;
      fd_check(c.label, m.parameter_ptrs(), [&](Tape& t) { return mse_loss(m.forward(t, q, lo), target); }, probes,
               seed, st);
      count(c.label, before);
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  std::size_t fewest = st.probes;
  for (const auto& [k, n] : per_case) fewest = std::min(fewest, n);
  v.require(st.worst <= 1e-4, "worst relative error " + num(st.worst) + " at " + st.worst_at);
  v.require(fewest >= 100, "a case has only " + std::to_string(fewest) + " probes");
  v.require(secs < 30.0, "took " + num(secs) + " s");
  v.note(std::to_string(per_case.size()) + " cases x 3 seeds, " + std::to_string(st.probes) + " probes (>= " +
         std::to_string(fewest) + " per case), worst rel err " + num(st.worst) + ", " + num(secs) + " s");
  return v;
}

// ---------------------------------------------------------------- 2: chain

Verdict criterion_risk_chain() {
  const auto t0 = Clock::now();
  const TheoryReport rep = run_theory(1000, 16, 0);
  std::size_t random_rows = 0;
  bool strict_row = false;
  double worst_r3 = 0.0;
  for (const auto& r : rep.rows) {
    if (r.kind == "random") ++random_rows;
    if (r.kind == "strict_gap") strict_row = r.risks.r1 > r.risks.r2 + 1e-12 && r.risks.r3 == 0.0;
    worst_r3 = std::max(worst_r3, std::abs(r.risks.r3));
  }
  // independent replay of the strict-gap instance
  const LatticeProblem gap = strict_gap_instance();
  const double r1 = optimal_risk(gap, FeatureMap::phi1_approx), r2 = optimal_risk(gap, FeatureMap::phi2_neighborhood);
  const double secs = seconds_since(t0);
  Verdict v;
  v.require(random_rows >= 1000, "only " + std::to_string(random_rows) + " random instances");
  v.require(rep.violations == 0, std::to_string(rep.violations) + " chain violations");
  v.require(worst_r3 <= 1e-12, "max |r3| " + num(worst_r3));
  v.require(strict_row && r1 > r2, "strict-gap instance does not separate r1 and r2");
  v.require(secs < 10.0, "took " + num(secs) + " s");
  v.note(std::to_string(rep.rows.size()) + " instances, 0 violations expected, got " + std::to_string(rep.violations) +
         "; strict gap r1=" + num(r1) + " r2=" + num(r2) + "; " + std::to_string(rep.strict_gaps) +
         " instances with r1>r2; " + num(secs) + " s");
  return v;
}

// ----------------------------------------------------- 3: best predictor

Verdict criterion_predictor() {
  Verdict v;
  std::mt19937_64 rng(777);
  const std::array<FeatureMap, 3> maps{FeatureMap::phi1_approx, FeatureMap::phi2_neighborhood,
                                       FeatureMap::phi3_neighborhood_and_queries};
  double worst_gap = 0.0, worst_increase = -1.0;
  for (int i = 0; i < 100; ++i) {
    const LatticeProblem prob = random_lattice_problem(rng, 16);
    const FeatureMap phi = maps[static_cast<std::size_t>(i) % 3];
    const FeatureRows rows = feature_rows(prob, phi);
    const double achieved = expected_risk(prob, rows, best_predictor(prob, rows));
    worst_gap = std::max(worst_gap, std::abs(achieved - optimal_risk(prob, rows)));
  }
  std::uniform_int_distribution<int> extra(0, 2);
  for (int i = 0; i < 200; ++i) {
    const LatticeProblem prob = random_lattice_problem(rng, 16);
    const FeatureMap phi = maps[static_cast<std::size_t>(i) % 3];
    FeatureRows base = feature_rows(prob, phi), aug = base;
    // augment with either an arbitrary extra column or the next richer map
    if (i % 2 == 0 || phi == FeatureMap::phi3_neighborhood_and_queries) {
      for (auto& r : aug) r.push_back(static_cast<double>(extra(rng)));
    } else {
      aug = feature_rows(prob, maps[static_cast<std::size_t>(i) % 3 + 1]);
    }
    worst_increase = std::max(worst_increase, optimal_risk(prob, aug) - optimal_risk(prob, base));
  }
  v.require(worst_gap <= 1e-12, "predictor risk gap " + num(worst_gap));
  v.require(worst_increase <= 1e-12, "augmentation increased risk by " + num(worst_increase));
  v.note("100 instances, max |risk(h*) - optimal| " + num(worst_gap) + "; 200 augmentations, max increase " +
         num(worst_increase));
  return v;
}

// -------------------------------------------------------- 4, 5: regression

struct RegressionRuns {
  RunRecord first;
  fs::path dir;
  double seconds = 0.0;
};

std::string summary_line(const RunRecord& rec) {
  std::string s;
  for (const auto& r : rec.summary) {
    s += (s.empty() ? "" : ", ") + r.model + " val " + num(r.mean_val_psnr) + "/train " + num(r.mean_train_psnr);
  }
  return s;
}

Verdict check_assertions(const RunRecord& rec) {
  Verdict v;
  for (const auto& a : rec.assertions) {
    v.require(a.pass, a.label + ": " + num(a.lhs) + " vs " + num(a.rhs));
  }
  return v;
}

RegressionRuns run_experiment(const fs::path& config, const fs::path& out) {
  const ExperimentConfig cfg = load_config(config);
  RunOptions opt;
  opt.out_dir = out;
  const auto t0 = Clock::now();
  RunRecord rec = cfg.kind == "regress1d" ? run_regress1d(cfg, opt) : run_regress2d(cfg, opt);
  const double secs = seconds_since(t0);
  write_run_record(out, rec);
  return {std::move(rec), out, secs};
}

Verdict criterion_regress1d(const RegressionRuns& r) {
  Verdict v = check_assertions(r.first);
  v.require(r.seconds < 300.0, "took " + num(r.seconds) + " s");
  v.note("mean PSNR dB (" + summary_line(r.first) + "); " + num(r.seconds) + " s");
  return v;
}

// Train-split ordering, reported for context only.
std::string regress1d_train_ordering(const RunRecord& rec) {
  const SummaryRow* q = &rec.summary_for("qnn");
  const SummaryRow* f = &rec.summary_for("mlp_fourier");
  const SummaryRow* m = &rec.summary_for("mlp");
  const SummaryRow* c = &rec.summary_for("cnn");
  const bool ok = q->mean_train_psnr >= f->mean_train_psnr + 0.5 && q->mean_train_psnr >= m->mean_train_psnr + 0.5 &&
                  c->mean_train_psnr >= m->mean_train_psnr + 0.5;
  return std::string(ok ? "holds" : "does not hold") + " on the training split: qnn " + num(q->mean_train_psnr) +
         ", mlp_fourier " + num(f->mean_train_psnr) + ", cnn " + num(c->mean_train_psnr) + ", mlp " +
         num(m->mean_train_psnr);
}

Verdict criterion_regress2d(const RegressionRuns& r) {
  Verdict v = check_assertions(r.first);
  v.require(r.seconds < 900.0, "took " + num(r.seconds) + " s");
  std::string ssim;
  for (const auto& s : r.first.summary) ssim += (ssim.empty() ? "" : ", ") + s.model + " " + num(s.mean_val_ssim);
  v.note("mean val PSNR dB (" + summary_line(r.first) + "); val SSIM (" + ssim + "); " + num(r.seconds) + " s");
  return v;
}

// ------------------------------------------------------ 6: matched widths

Verdict criterion_matched_width() {
  Verdict v;
  v.require(matched_width(256, 3, 1) == 148, "1-D width " + std::to_string(matched_width(256, 3, 1)));
  v.require(matched_width(256, 3, 2) == 85, "2-D width " + std::to_string(matched_width(256, 3, 2)));
  std::string counts;
  for (std::size_t rank : {1u, 2u}) {
    ModelSpec mlp;
    mlp.family = Family::mlp;
    mlp.depth = 4;
    mlp.width = 256;
    mlp.rank = rank;
    mlp.query_channels = rank;
    mlp.output_channels = rank == 1 ? 1 : 3;
    ModelSpec conv = mlp;
    conv.family = Family::cnn;
    conv.kernel = 3;
    conv.width = matched_width(256, 3, rank);
    const double ratio = static_cast<double>(conv.parameter_count()) / static_cast<double>(mlp.parameter_count());
    v.require(std::abs(ratio - 1.0) <= 0.01, "rank " + std::to_string(rank) + " ratio " + num(ratio));
    counts += (counts.empty() ? "" : "; ") + std::to_string(rank) + "-D mlp " + std::to_string(mlp.parameter_count()) +
              " vs conv " + std::to_string(conv.parameter_count()) + " (ratio " + num(ratio) + ")";
  }
  v.note("widths 148/85; " + counts);
  return v;
}

// --------------------------------------------------------------- 7: metrics

Verdict criterion_metrics() {
  Verdict v;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 5; ++i) {
    const Tensor x = random_tensor({3, 16, 16}, rng, 0.0, 1.0);
    v.require(ssim(x, x) == 1.0, "ssim(x,x) = " + num(ssim(x, x)));
  }
  const Tensor zero({1, 4, 4});
  const Tensor off({1, 4, 4}, 0.1); // mse 0.01
  const double p = psnr(off, zero, 1.0);
  v.require(std::abs(p - 20.0) <= 1e-12, "psnr at mse 0.01 = " + num(p));
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Tensor a = random_tensor({3, 16, 16}, rng, 0.0, 1.0);
    Tensor b = a;
    std::normal_distribution<double> noise(0.0, 0.05 * (i + 1));
    for (double& e : b.data()) e = std::clamp(e + noise(rng), 0.0, 1.0);
    worst = std::max(worst, std::abs(ssim(a, b) - oracle::ssim_direct(a, b)));
  }
  v.require(worst <= 1e-9, "ssim vs direct oracle differs by " + num(worst));
  v.note("ssim(x,x)=1 exactly; psnr(mse 0.01)=" + num(p) + "; max |ssim - oracle| " + num(worst) + " on 10 pairs");
  return v;
}

// ------------------------------------------------------------- 8: bound

Verdict criterion_bound() {
  Verdict v;
  double worst = 0.0;
  for (int i = 0; i < 13; ++i) {
    const double x = std::pow(10.0, -6.0 + i);
    const double w = lambert_w0(x);
    worst = std::max(worst, std::abs(w * std::exp(w) - x) / x);
  }
  v.require(worst <= 1e-12, "lambert round trip rel err " + num(worst));
  const ExperimentConfig cfg = load_config(fs::path(QONV_SOURCE_DIR) / "configs/bound.ini");
  std::string table;
  for (const auto& r : run_bound_table(cfg.bound.c, cfg.bound.eps)) {
    const double y = (cfg.bound.c / r.eps) * (cfg.bound.c / r.eps);
    if (y >= 1.0) v.require(r.ratio > 2.0, "eps " + num(r.eps) + " ratio " + num(r.ratio) + " (c/eps)^2 " + num(y));
    table += (table.empty() ? "" : ", ") + num(r.eps) + ":" + num(r.ratio);
  }
  v.note("round trip max rel err " + num(worst) + " over 13 points; c=" + num(cfg.bound.c) + " ratios (eps:ratio) " +
         table);
  return v;
}

// ------------------------------------------------------- 9: determinism

std::vector<std::string> csv_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void compare_dirs(const fs::path& a, const fs::path& b, const std::string& label, Verdict& v, std::size_t& files) {
  const auto fa = csv_files(a), fb = csv_files(b);
  v.require(fa == fb && !fa.empty(), label + ": different file sets");
  for (const auto& f : fa) {
    ++files;
    v.require(read_file(a / f) == read_file(b / f), label + "/" + f + " differs");
  }
}

std::vector<std::string> seed_rows(const std::string& csv, const std::string& seed) {
  const CsvTable t = parse_csv(csv);
  const std::size_t col = t.column("seed");
  std::vector<std::string> out;
  for (const auto& r : t.rows) {
    if (col < r.size() && r[col] == seed) {
      std::string line;
      for (const auto& c : r) line += c + ",";
      out.push_back(line);
    }
  }
  return out;
}

Verdict criterion_determinism(const RegressionRuns* r1d, const RegressionRuns* r2d, const fs::path& out) {
  Verdict v;
  std::size_t files = 0;
  const fs::path src(QONV_SOURCE_DIR);
  if (r1d) {
    const RegressionRuns again = run_experiment(src / "configs/regress1d.ini", out / "regress1d_rerun");
    compare_dirs(r1d->dir, again.dir, "regress1d", v, files);
  }
  if (r2d) {
    // Per-seed rows are independent of the other seeds, so a seed-0 rerun
    // must reproduce the seed-0 rows of the full run byte for byte.
    const fs::path cfg_path = src / "configs/regress2d.ini";
    ExperimentConfig cfg = load_config(cfg_path);
    cfg.seeds = {cfg.seeds.front()};
    RunOptions opt;
    const RunRecord rec = run_regress2d(cfg, opt);
    const std::string seed = std::to_string(cfg.seeds.front());
    v.require(seed_rows(metrics_csv(rec), seed) == seed_rows(read_file(r2d->dir / "metrics.csv"), seed),
              "regress2d seed " + seed + " metrics rows differ");
    v.require(seed_rows(traces_csv(rec), seed) == seed_rows(read_file(r2d->dir / "traces.csv"), seed),
              "regress2d seed " + seed + " trace rows differ");
    files += 2;
  }
  for (const char* name : {"theory", "bound"}) {
    const fs::path cfg_path = src / "configs" / (std::string(name) + ".ini");
    const ExperimentConfig cfg = load_config(cfg_path);
    for (const char* pass : {"a", "b"}) {
      RunOptions opt;
      opt.out_dir = out / (std::string(name) + "_" + pass);
      run_config(cfg, opt);
    }
    compare_dirs(out / (std::string(name) + "_a"), out / (std::string(name) + "_b"), name, v, files);
  }
  v.note(std::to_string(files) + " CSV bodies compared byte for byte across reruns");
  return v;
}

} // namespace

int main(int argc, char** argv) {
  tune_allocator();
  fs::path out = "acceptance_out";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      for (const auto& s : split_list(argv[++i])) only.insert(std::stoi(s));
    } else {
      std::fprintf(stderr, "usage: acceptance [--out DIR] [--only N[,N...]]\n");
      return 2;
    }
  }
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };
  fs::create_directories(out);
  const fs::path src(QONV_SOURCE_DIR);

  bool all = true;
  auto report = [&](int n, const char* title, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    all = all && v.pass;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", n, title, v.detail.c_str());
    std::fflush(stdout);
  };

  if (wanted(1)) report(1, "gradients vs finite differences", criterion_gradients);
  if (wanted(2)) report(2, "risk chain on random lattices", criterion_risk_chain);
  if (wanted(3)) report(3, "conditional-mean predictor and augmentation", criterion_predictor);

  std::optional<RegressionRuns> r1d, r2d;
  if (wanted(4) || wanted(9)) {
    try {
      r1d = run_experiment(src / "configs/regress1d.ini", out / "regress1d");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "regress1d run failed: %s\n", e.what());
    }
  }
  if (wanted(4)) {
    report(4, "1-D regression ordering", [&] {
      if (!r1d) throw Error("regress1d run failed");
      return criterion_regress1d(*r1d);
    });
    if (r1d) std::printf("INFO criterion 4 ordering %s\n", regress1d_train_ordering(r1d->first).c_str());
  }
  if (wanted(5) || wanted(9)) {
    try {
      r2d = run_experiment(src / "configs/regress2d.ini", out / "regress2d");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "regress2d run failed: %s\n", e.what());
    }
  }
  if (wanted(5)) {
    report(5, "2-D image regression", [&] {
      if (!r2d) throw Error("regress2d run failed");
      return criterion_regress2d(*r2d);
    });
  }
  if (wanted(6)) report(6, "matched widths", criterion_matched_width);
  if (wanted(7)) report(7, "image metrics", criterion_metrics);
  if (wanted(8)) report(8, "Gaussian count bound", criterion_bound);
  if (wanted(9)) {
    report(9, "deterministic reruns", [&] {
      return criterion_determinism(r1d ? &*r1d : nullptr, r2d ? &*r2d : nullptr, out);
    });
  }
  return all ? 0 : 1;
}
