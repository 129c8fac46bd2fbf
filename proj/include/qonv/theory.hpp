#pragma once

// Exact optimal-risk computations on finite lattices.
//
// For a feature map phi the best achievable squared risk over all
// deterministic predictors h(phi(x)) is E[Var(f(X) | Z)], Z = phi(X), and the
// minimiser is the conditional mean E[f(X) | Z]. On a finite lattice both are
// computed by grouping lattice points with bitwise-identical feature tuples.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qonv/error.hpp"

namespace qonv {

struct LatticeProblem {
  std::vector<double> p; // probability of each lattice point
  std::vector<double> f; // target, in [0,1]
  std::vector<double> g; // low-frequency approximation of f, in [0,1]
  std::size_t delta = 1;
  bool clamped_shifts = false; // default: x +- delta wraps mod M

  std::size_t size() const noexcept { return p.size(); }

  void validate() const {
    const std::size_t M = p.size();
    if (M == 0) throw ConfigError("lattice problem needs at least one point");
    if (f.size() != M || g.size() != M) throw ConfigError("lattice problem: p, f and g differ in length");
    if (delta == 0) throw ConfigError("lattice problem: delta must be positive");
    double s = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      if (!(p[i] >= 0.0)) throw ConfigError("lattice problem: negative probability");
      if (!(f[i] >= 0.0 && f[i] <= 1.0)) throw ConfigError("lattice problem: f outside [0,1]");
      if (!(g[i] >= 0.0 && g[i] <= 1.0)) throw ConfigError("lattice problem: g outside [0,1]");
      s += p[i];
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("lattice problem: probabilities do not sum to 1");
  }

  /// Lattice index of x + offset (offset may be negative).
  std::size_t shift(std::size_t x, long offset) const {
    const long M = static_cast<long>(size());
    long y = static_cast<long>(x) + offset;
    if (clamped_shifts) return static_cast<std::size_t>(y < 0 ? 0 : (y >= M ? M - 1 : y));
    y %= M;
    if (y < 0) y += M;
    return static_cast<std::size_t>(y);
  }

  /// Deterministic text dump, enough to rebuild the instance bit for bit.
  std::string record() const {
    auto row = [](const char* name, const std::vector<double>& v) {
      std::string s = name;
      char buf[40];
      for (double x : v) {
        std::snprintf(buf, sizeof buf, " %.17g", x);
        s += buf;
      }
      return s + "\n";
    };
    std::string s = "M=" + std::to_string(size()) + " delta=" + std::to_string(delta) +
                    " shifts=" + (clamped_shifts ? "clamped" : "circular") + "\n";
    return s + row("p", p) + row("f", f) + row("g", g);
  }
};

enum class FeatureMap { phi1_approx, phi2_neighborhood, phi3_neighborhood_and_queries };

inline std::string to_string(FeatureMap phi) {
  switch (phi) {
  case FeatureMap::phi1_approx: return "phi1_approx";
  case FeatureMap::phi2_neighborhood: return "phi2_neighborhood";
  case FeatureMap::phi3_neighborhood_and_queries: return "phi3_neighborhood_and_queries";
  }
  return "?";
}

/// One feature tuple per lattice point.
using FeatureRows = std::vector<std::vector<double>>;

/// phi1 = (g(x)); phi2 = (g(x-d), g(x), g(x+d)); phi3 = (phi2, x, x-d, x+d).
inline FeatureRows feature_rows(const LatticeProblem& prob, FeatureMap phi) {
  const std::size_t M = prob.size();
  const long d = static_cast<long>(prob.delta);
  FeatureRows rows(M);
  for (std::size_t x = 0; x < M; ++x) {
    const std::size_t lo = prob.shift(x, -d), hi = prob.shift(x, d);
    switch (phi) {
    case FeatureMap::phi1_approx: rows[x] = {prob.g[x]}; break;
    case FeatureMap::phi2_neighborhood: rows[x] = {prob.g[lo], prob.g[x], prob.g[hi]}; break;
    case FeatureMap::phi3_neighborhood_and_queries:
      rows[x] = {prob.g[lo], prob.g[x], prob.g[hi], static_cast<double>(x), static_cast<double>(lo),
                 static_cast<double>(hi)};
      break;
    }
  }
  return rows;
}

namespace detail {

using FeatureKey = std::vector<std::uint64_t>;

inline FeatureKey feature_key(const std::vector<double>& z) {
  FeatureKey k(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) k[i] = std::bit_cast<std::uint64_t>(z[i] == 0.0 ? 0.0 : z[i]);
  return k;
}

struct Group {
  std::vector<std::size_t> members;
  double mass = 0.0;
};

inline std::map<FeatureKey, Group> group_points(const LatticeProblem& prob, const FeatureRows& rows) {
  if (rows.size() != prob.size()) throw DimensionError("one feature row per lattice point required");
  std::map<FeatureKey, Group> groups;
  for (std::size_t x = 0; x < rows.size(); ++x) {
    Group& grp = groups[feature_key(rows[x])];
    grp.members.push_back(x);
    grp.mass += prob.p[x];
  }
  return groups;
}

inline bool constant_target(const LatticeProblem& prob, const Group& grp) {
  const double f0 = prob.f[grp.members.front()];
  return std::all_of(grp.members.begin(), grp.members.end(), [&](std::size_t x) { return prob.f[x] == f0; });
}

inline double conditional_mean(const LatticeProblem& prob, const Group& grp) {
  if (constant_target(prob, grp)) return prob.f[grp.members.front()];
  double s = 0.0;
  if (grp.mass > 0.0) {
    for (auto x : grp.members) s += prob.p[x] * prob.f[x];
    return s / grp.mass;
  }
  for (auto x : grp.members) s += prob.f[x];
  return s / static_cast<double>(grp.members.size());
}

} // namespace detail

/// Sum over feature groups of P(group) * Var(f | group).
inline double optimal_risk(const LatticeProblem& prob, const FeatureRows& rows) {
  prob.validate();
  double risk = 0.0;
  for (const auto& [key, grp] : detail::group_points(prob, rows)) {
    if (grp.mass <= 0.0) continue;
    // exact zero rather than the rounding residue of p*f/p
    if (detail::constant_target(prob, grp)) continue;
    const double mu = detail::conditional_mean(prob, grp);
    double var = 0.0;
    for (auto x : grp.members) var += (prob.p[x] / grp.mass) * (prob.f[x] - mu) * (prob.f[x] - mu);
    risk += grp.mass * var;
  }
  return risk;
}

inline double optimal_risk(const LatticeProblem& prob, FeatureMap phi) {
  return optimal_risk(prob, feature_rows(prob, phi));
}

/// Conditional-mean predictor h*(z) = E[f(X) | Z = z] as a lookup table.
class Predictor {
public:
  double operator()(const std::vector<double>& z) const {
    auto it = table_.find(detail::feature_key(z));
    if (it == table_.end()) throw ContractError("predictor queried at a feature value never observed");
    return it->second;
  }
  std::size_t size() const noexcept { return table_.size(); }

private:
  friend Predictor best_predictor(const LatticeProblem&, const FeatureRows&);
  std::map<detail::FeatureKey, double> table_;
};

inline Predictor best_predictor(const LatticeProblem& prob, const FeatureRows& rows) {
  prob.validate();
  Predictor h;
  for (const auto& [key, grp] : detail::group_points(prob, rows)) h.table_[key] = detail::conditional_mean(prob, grp);
  return h;
}

inline Predictor best_predictor(const LatticeProblem& prob, FeatureMap phi) {
  return best_predictor(prob, feature_rows(prob, phi));
}

/// E[(f(X) - h(phi(X)))^2] under the lattice distribution.
inline double expected_risk(const LatticeProblem& prob, const FeatureRows& rows, const Predictor& h) {
  double r = 0.0;
  for (std::size_t x = 0; x < prob.size(); ++x) {
    const double e = prob.f[x] - h(rows[x]);
    r += prob.p[x] * e * e;
  }
  return r;
}

struct RiskChain {
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
};

/// Computes the three risks and throws VerificationError unless
/// r1 >= r2 >= r3 == 0 within `slack`.
inline RiskChain verify_monotone_chain(const LatticeProblem& prob, double slack = 1e-12) {
  RiskChain c{optimal_risk(prob, FeatureMap::phi1_approx), optimal_risk(prob, FeatureMap::phi2_neighborhood),
              optimal_risk(prob, FeatureMap::phi3_neighborhood_and_queries)};
  if (c.r1 + slack < c.r2 || c.r2 + slack < c.r3 || std::abs(c.r3) > slack) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "risk chain violated: r1=%.17g r2=%.17g r3=%.17g", c.r1, c.r2, c.r3);
    throw VerificationError(buf, prob.record());
  }
  return c;
}

/// Random instance with M in [min_size, max_size]. Values come from small
/// dyadic alphabets so that feature collisions (and so non-trivial groups)
/// are common and grouping stays exact.
template <class Rng>
LatticeProblem random_lattice_problem(Rng& rng, std::size_t max_size, std::size_t min_size = 3) {
  std::uniform_int_distribution<std::size_t> size_dist(min_size, max_size);
  const std::size_t M = size_dist(rng);
  std::uniform_int_distribution<int> f_dist(0, 8), g_dist(0, 4), p_dist(0, 16);
  std::uniform_int_distribution<std::size_t> d_dist(1, std::max<std::size_t>(1, M - 1));
  LatticeProblem prob;
  prob.delta = d_dist(rng);
  prob.p.resize(M);
  prob.f.resize(M);
  prob.g.resize(M);
  double total = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    prob.p[i] = static_cast<double>(p_dist(rng) + (i == 0 ? 1 : 0));
    total += prob.p[i];
    prob.f[i] = f_dist(rng) / 8.0;
    prob.g[i] = g_dist(rng) / 4.0;
  }
  for (double& v : prob.p) v /= total;
  return prob;
}

/// Instance with r1 = 1/4 > r2 = 0: g cannot separate the targets pointwise
/// but its neighbourhood pattern can.
inline LatticeProblem strict_gap_instance() {
  LatticeProblem prob;
  prob.p = {0.25, 0.25, 0.25, 0.25};
  prob.f = {0.0, 1.0, 0.0, 1.0};
  prob.g = {0.0, 0.0, 1.0, 1.0};
  prob.delta = 1;
  return prob;
}

/// Principal branch W0 on x >= 0 via Halley's iteration.
inline double lambert_w0(double x) {
  if (!(x >= 0.0) || std::isinf(x)) throw ConfigError("lambert_w0: x must be finite and >= 0");
  if (x == 0.0) return 0.0;
  double w;
  if (x < 3.0) {
    w = std::log1p(x);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  for (int i = 0; i < 50; ++i) {
    const double ew = std::exp(w);
    const double fval = w * ew - x;
    const double step = fval / (ew * (w + 1.0) - (w + 2.0) * fval / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) return w;
  }
  const double check = w * std::exp(w);
  if (std::abs(check - x) <= 1e-12 * x) return w;
  throw NumericError("lambert_w0 did not converge for x=" + std::to_string(x));
}

/// Lower bound on the number of splatted Gaussians for target MSE `eps`:
/// exp(W0((c / eps)^2)).
inline double gaussian_count_bound(double eps, double c) {
  if (!(eps > 0.0) || !(c > 0.0)) throw ConfigError("gaussian_count_bound: eps and c must be > 0");
  const double r = c / eps;
  return std::exp(lambert_w0(r * r));
}

} // namespace qonv
