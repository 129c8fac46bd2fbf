#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qonv/theory.hpp"

using namespace qonv;

namespace {

LatticeProblem uniform_example() {
  return LatticeProblem{{0.25, 0.25, 0.25, 0.25}, {0.0, 1.0, 0.0, 1.0}, {0.5, 0.5, 0.5, 0.5}, 1, false};
}

// Brute-force risk: for each point, the conditional mean over all points with
// an equal feature tuple, found by pairwise comparison.
double brute_force_risk(const LatticeProblem& prob, const FeatureRows& rows) {
  double risk = 0.0;
  for (std::size_t x = 0; x < prob.size(); ++x) {
    double mass = 0.0, acc = 0.0;
    for (std::size_t y = 0; y < prob.size(); ++y) {
      if (rows[y] == rows[x]) {
        mass += prob.p[y];
        acc += prob.p[y] * prob.f[y];
      }
    }
    if (mass == 0.0) continue;
    const double e = prob.f[x] - acc / mass;
    risk += prob.p[x] * e * e;
  }
  return risk;
}

} // namespace

TEST(OptimalRisk, UniformExample) {
  const auto prob = uniform_example();
  EXPECT_DOUBLE_EQ(optimal_risk(prob, FeatureMap::phi1_approx), 0.25);
  EXPECT_DOUBLE_EQ(optimal_risk(prob, FeatureMap::phi2_neighborhood), 0.25);
  EXPECT_EQ(optimal_risk(prob, FeatureMap::phi3_neighborhood_and_queries), 0.0);
}

TEST(OptimalRisk, ExactApproximationGivesZero) {
  LatticeProblem prob{{0.1, 0.2, 0.3, 0.4}, {0.0, 0.25, 0.5, 1.0}, {0.0, 0.25, 0.5, 1.0}, 1, false};
  for (auto phi : {FeatureMap::phi1_approx, FeatureMap::phi2_neighborhood, FeatureMap::phi3_neighborhood_and_queries}) {
    EXPECT_EQ(optimal_risk(prob, phi), 0.0);
  }
}

TEST(OptimalRisk, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto prob = random_lattice_problem(rng, 16);
    for (auto phi : {FeatureMap::phi1_approx, FeatureMap::phi2_neighborhood}) {
      const auto rows = feature_rows(prob, phi);
      EXPECT_NEAR(optimal_risk(prob, rows), brute_force_risk(prob, rows), 1e-12);
    }
  }
}

TEST(OptimalRisk, InvalidProblems) {
  LatticeProblem p = uniform_example();
  p.p[0] = 0.5;
  EXPECT_THROW(optimal_risk(p, FeatureMap::phi1_approx), ConfigError);
  p = uniform_example();
  p.f[1] = 1.5;
  EXPECT_THROW(optimal_risk(p, FeatureMap::phi1_approx), ConfigError);
}

TEST(RiskChain, RandomInstancesAreMonotone) {
  std::mt19937_64 rng(2024);
  std::size_t strict = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto prob = random_lattice_problem(rng, 16);
    RiskChain c;
    ASSERT_NO_THROW(c = verify_monotone_chain(prob)) << prob.record();
    EXPECT_EQ(c.r3, 0.0);
    strict += c.r1 > c.r2;
  }
  EXPECT_GT(strict, 0u);
}

TEST(RiskChain, StrictGap) {
  const auto c = verify_monotone_chain(strict_gap_instance());
  EXPECT_DOUBLE_EQ(c.r1, 0.25);
  EXPECT_EQ(c.r2, 0.0);
  EXPECT_GT(c.r1, c.r2);
}

TEST(RiskChain, SinglePoint) {
  const auto c = verify_monotone_chain(LatticeProblem{{1.0}, {0.7}, {0.2}, 1, false});
  EXPECT_EQ(c.r1, 0.0);
  EXPECT_EQ(c.r2, 0.0);
  EXPECT_EQ(c.r3, 0.0);
}

TEST(RiskChain, ClampedShiftsStillMonotone) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto prob = random_lattice_problem(rng, 16);
    prob.clamped_shifts = true;
    EXPECT_NO_THROW(verify_monotone_chain(prob));
  }
}

TEST(RiskChain, ViolationCarriesRecord) {
  try {
    throw VerificationError("risk chain violated", uniform_example().record());
  } catch (const VerificationError& e) {
    EXPECT_NE(e.record().find("M=4"), std::string::npos);
    EXPECT_NE(e.record().find("f 0 1 0 1"), std::string::npos);
  }
}

TEST(BestPredictor, RiskEqualsOptimalRisk) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto prob = random_lattice_problem(rng, 16);
    for (auto phi : {FeatureMap::phi1_approx, FeatureMap::phi2_neighborhood, FeatureMap::phi3_neighborhood_and_queries}) {
      const auto rows = feature_rows(prob, phi);
      EXPECT_NEAR(expected_risk(prob, rows, best_predictor(prob, rows)), optimal_risk(prob, rows), 1e-12);
    }
  }
}

TEST(BestPredictor, QueriesReproduceTarget) {
  std::mt19937_64 rng(3);
  const auto prob = random_lattice_problem(rng, 12);
  const auto rows = feature_rows(prob, FeatureMap::phi3_neighborhood_and_queries);
  const auto h = best_predictor(prob, rows);
  for (std::size_t x = 0; x < prob.size(); ++x) EXPECT_EQ(h(rows[x]), prob.f[x]);
}

TEST(BestPredictor, UniformExampleIsConstant) {
  const auto prob = uniform_example();
  const auto h = best_predictor(prob, FeatureMap::phi1_approx);
  EXPECT_EQ(h.size(), 1u);
  EXPECT_DOUBLE_EQ(h({0.5}), 0.5);
  EXPECT_THROW(h({0.25}), ContractError);
}

TEST(FeatureAugmentation, NeverIncreasesRisk) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> col(0, 3);
  for (int i = 0; i < 200; ++i) {
    const auto prob = random_lattice_problem(rng, 16);
    for (auto phi : {FeatureMap::phi1_approx, FeatureMap::phi2_neighborhood}) {
      const auto base = feature_rows(prob, phi);
      auto aug = base;
      for (auto& r : aug) r.push_back(col(rng) / 4.0);
      EXPECT_LE(optimal_risk(prob, aug), optimal_risk(prob, base) + 1e-12);
    }
  }
}

TEST(LambertW, FixedPoints) {
  EXPECT_EQ(lambert_w0(0.0), 0.0);
  EXPECT_NEAR(lambert_w0(std::numbers::e), 1.0, 1e-15);
  // Omega constant by the contraction w <- exp(-w).
  double w = 0.5;
  for (int i = 0; i < 200; ++i) w = std::exp(-w);
  EXPECT_NEAR(lambert_w0(1.0), w, 1e-15);
  EXPECT_NEAR(lambert_w0(1.0), 0.567143290409, 1e-12);
}

TEST(LambertW, RoundTrip) {
  for (int k = 0; k <= 12; ++k) {
    const double x = std::pow(10.0, -6.0 + k);
    const double w = lambert_w0(x);
    EXPECT_LE(std::abs(w * std::exp(w) - x) / x, 1e-12) << "x=" << x;
    EXPECT_GE(w, 0.0);
  }
}

TEST(LambertW, DomainErrors) {
  EXPECT_THROW(lambert_w0(-1.0), ConfigError);
  EXPECT_THROW(lambert_w0(std::nan("")), ConfigError);
}

TEST(GaussianBound, KnownValue) { EXPECT_NEAR(gaussian_count_bound(1.0, 1.0), 1.7632228343518967, 1e-12); }

TEST(GaussianBound, MonotoneInEps) {
  double prev = gaussian_count_bound(1e-3, 1.0);
  for (double eps : {1e-2, 0.1, 0.5, 1.0, 2.0, 10.0}) {
    const double n = gaussian_count_bound(eps, 1.0);
    EXPECT_LT(n, prev);
    prev = n;
  }
  EXPECT_GT(gaussian_count_bound(0.1, 1.0) / gaussian_count_bound(0.2, 1.0), 2.0);
  EXPECT_THROW(gaussian_count_bound(0.0, 1.0), ConfigError);
}
