#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "dwlab/thermo.hpp"
#include "oracles.hpp"

using namespace dwlab;
using namespace dwlab::thermo;

namespace {

const double kLog2 = std::log(2.0);
const double kGolden = std::log((1.0 + std::sqrt(5.0)) / 2.0);

MarkovModel coin() { return MarkovModel::full_shift_by_target({0.0, 1.0}); }

std::vector<oracle::WeightedEdge> oracle_edges(const MarkovModel& m) {
  std::vector<oracle::WeightedEdge> out;
  for (const auto& e : m.edges()) out.push_back({e.from, e.to, e.q});
  return out;
}

// Strongly connected random graph: a Hamiltonian ring plus random extras.
MarkovModel random_model(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> w(-2.0, 2.0);
  std::bernoulli_distribution extra(0.35);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j == (i + 1) % n || extra(rng)) edges.push_back({i, j, w(rng), 1.0});
  return MarkovModel(n, edges);
}

}  // namespace

TEST(Model, ValidationRejectsBadGraphs) {
  EXPECT_THROW(MarkovModel(2, {{0, 1, 0, 1}, {1, 1, 0, 1}}), DomainError);
  EXPECT_THROW(MarkovModel(1, {{0, 0, 0, 0.0}}), DomainError);
  EXPECT_THROW(MarkovModel(1, {{0, 0, 0, 1}, {0, 0, 1, 1}}), DomainError);
  EXPECT_THROW(MarkovModel(1, {{0, 2, 0, 1}}), DomainError);
  const auto m = MarkovModel::from_json(coin().to_json());
  EXPECT_EQ(m.edges().size(), 4u);
}

TEST(Pressure, Examples) {
  EXPECT_NEAR(pressure_transfer(MarkovModel::full_shift(2), 3.7), kLog2, 1e-12);
  EXPECT_NEAR(pressure_transfer(coin(), 1.0), std::log(1.0 + std::exp(1.0)), 1e-12);
  EXPECT_NEAR(pressure_transfer(MarkovModel::golden_mean(), 0.0), kGolden, 1e-12);
  EXPECT_NEAR(pressure_transfer(MarkovModel::golden_mean(), 0.0), 0.481211825, 1e-9);
}

TEST(Pressure, BowenRootForSymbolRoof) {
  const auto m = MarkovModel::full_shift(2).with_roof({1.0, 2.0, 1.0, 2.0});
  EXPECT_NEAR(pressure_transfer(m, 0.0), kGolden, 1e-10);
}

TEST(Pressure, CurveIsConvexWithSlopesInRange) {
  const auto curve = pressure_curve(MarkovModel::golden_mean().with_q({0.0, 1.0, -0.5}), default_beta_grid());
  EXPECT_GE(curve.min_second_difference(), -1e-9);
  for (double s : curve.slopes) {
    EXPECT_GE(s, -0.5 - 1e-9);
    EXPECT_LE(s, 1.0 + 1e-9);
  }
}

TEST(OrbitSum, SingleFamily) {
  std::vector<Orbit> orbits;
  for (int k = 1; k <= 30; ++k) orbits.push_back({double(k), 0.0});
  EXPECT_NEAR(pressure_orbit_sum(orbits, 20.0), std::log(20.0) / 20.0, 1e-12);
  EXPECT_NEAR(pressure_orbit_sum(orbits, 20.0), 0.1498, 1e-4);
  EXPECT_THROW(pressure_orbit_sum(orbits, 0.5), DomainError);
}

TEST(OrbitSum, CycleEnumerationMatchesPressure) {
  const auto zero = MarkovModel::full_shift(2);
  const auto orbits = periodic_orbits(zero, 14, 1.0);
  EXPECT_NEAR(pressure_orbit_sum(orbits, 14.0), kLog2, 0.05);

  const auto m = coin();
  const auto lib = periodic_orbits(m, 14, 1.0);
  const auto ref = oracle::periodic_points(2, oracle_edges(m), 14);
  ASSERT_EQ(lib.size(), ref.size());
  double lib_sum = 0.0, ref_sum = 0.0;
  for (const auto& o : lib) lib_sum += std::exp(o.integral);
  for (const auto& [len, s] : ref) ref_sum += std::exp(s);
  EXPECT_NEAR(lib_sum / ref_sum, 1.0, 1e-12);
  EXPECT_NEAR(pressure_orbit_sum(lib, 14.0), std::log(1.0 + std::exp(1.0)), 0.05);
}

TEST(Legendre, CoinExamples) {
  const auto rate = legendre_rate(pressure_curve(coin(), default_beta_grid()));
  EXPECT_NEAR(rate.value_at(0.5), kLog2, 1e-8);
  EXPECT_NEAR(rate.value_at(0.0), 0.0, 1e-6);
  EXPECT_NEAR(rate.value_at(1.0), 0.0, 1e-6);
  EXPECT_NEAR(rate.value_at(0.6), oracle::markov2_max_entropy(0.6), 1e-6);
  EXPECT_NEAR(rate.value_at(0.6), 0.673011668, 1e-6);
  EXPECT_TRUE(is_neg_inf(rate.value_at(1.2)));
  EXPECT_TRUE(is_neg_inf(rate.value_at(-0.01)));
  EXPECT_LE(rate.max_second_difference(), 1e-9);
}

TEST(Legendre, GoldenMeanMatchesMarkovOracle) {
  // q = 1 on transitions into state 1, so alpha is the visit frequency
  const auto m = MarkovModel::golden_mean().with_q({0.0, 1.0, 0.0});
  const auto rate = legendre_rate(pressure_curve(m, default_beta_grid()));
  for (double a : {0.1, 0.2, 0.3, 0.4})
    EXPECT_NEAR(rate.value_at(a), oracle::golden_mean_entropy(a), 1e-6) << a;
  EXPECT_NEAR(rate.q_plus, 0.5, 1e-6);
}

TEST(Legendre, NarrowGridIsRejected) {
  std::vector<double> betas;
  for (int i = -10; i <= 10; ++i) betas.push_back(0.1 * i);
  EXPECT_THROW(legendre_rate(pressure_curve(coin(), betas)), ConvergenceError);
}

TEST(Legendre, RoundTripAndMaximum) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const auto m = random_model(rng, 4);
    const auto rate = legendre_rate(pressure_curve(m, default_beta_grid()));
    for (double beta : {-5.0, -1.0, 0.0, 0.7, 3.0})
      EXPECT_NEAR(legendre_dual(rate, beta), pressure_transfer(m, beta), 1e-6);
    const double htop = pressure_transfer(m, 0.0);
    const double qbar = equilibrium_state(m, 0.0, 0.0).integrate(m, [&] {
      std::vector<double> q;
      for (const auto& e : m.edges()) q.push_back(e.q);
      return q;
    }());
    EXPECT_NEAR(rate.value_at(qbar), htop, 1e-8);
  }
}

TEST(Legendre, EndpointEntropyFromHighBeta) {
  const auto m = MarkovModel::golden_mean().with_q({0.0, 1.0, 0.0});
  const auto rate = legendre_rate(pressure_curve(m, default_beta_grid()));
  const double qp = q_extremes(m).second;
  EXPECT_NEAR(rate.q_plus, qp, 1e-6);
  EXPECT_NEAR(pressure_transfer(m, 40.0) - 40.0 * qp, rate.value_at(rate.q_plus), 1e-6);
}

TEST(Extremes, Examples) {
  const auto [lo, hi] = q_extremes(coin());
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
  const MarkovModel loops(2, {{0, 0, 1.0, 1}, {1, 1, 3.0, 1}, {0, 1, 2.0, 1}, {1, 0, 2.0, 1}});
  const auto [a, b] = q_extremes(loops);
  const auto ref = oracle::simple_cycle_mean_extremes(2, oracle_edges(loops));
  EXPECT_NEAR(a, ref.first, 1e-12);
  EXPECT_NEAR(b, ref.second, 1e-12);
  EXPECT_NEAR(a, 1.0, 1e-12);
  EXPECT_NEAR(b, 3.0, 1e-12);
  const MarkovModel ring(3, {{0, 1, 1.0, 1}, {1, 2, 2.0, 1}, {2, 0, 3.0, 1}});
  EXPECT_NEAR(q_extremes(ring).first, 2.0, 1e-12);
  EXPECT_NEAR(q_extremes(ring).second, 2.0, 1e-12);
}

TEST(Extremes, KarpMatchesCycleEnumeration) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    const auto m = random_model(rng, n);
    const auto [lo, hi] = q_extremes(m);
    const auto ref = oracle::simple_cycle_mean_extremes(n, oracle_edges(m));
    EXPECT_NEAR(lo, ref.first, 1e-10);
    EXPECT_NEAR(hi, ref.second, 1e-10);
  }
}

TEST(LargeDeviation, FullIntervalHasRateZero) {
  const auto r = birkhoff_ld_montecarlo(coin(), 50, {0.0, 1.0}, 10000, 1);
  EXPECT_EQ(r.hits, r.nsamples);
  EXPECT_EQ(r.rate, 0.0);
}

TEST(LargeDeviation, MatchesExactBinomialTail) {
  const auto r = birkhoff_ld_montecarlo(coin(), 50, {0.6, 1.0}, 1000000, 7);
  const double exact = oracle::log_binomial_tail_half(50, 30) / 50.0;
  EXPECT_NEAR(r.rate, exact, 4.0 * r.std_error + 1e-4);
  EXPECT_NEAR(r.rate, -0.045840, 5e-4);
  EXPECT_NEAR(r.predicted, oracle::binary_entropy(0.6) - kLog2, 1e-6);
}

TEST(LargeDeviation, DeterministicAcrossThreads) {
  const auto a = birkhoff_ld_montecarlo(coin(), 20, {0.55, 0.7}, 20000, 3, 1);
  const auto b = birkhoff_ld_montecarlo(coin(), 20, {0.55, 0.7}, 20000, 3, 4);
  EXPECT_EQ(a.hits, b.hits);
}

TEST(LargeDeviation, TypicalWindowRateShrinks) {
  const auto short_run = birkhoff_ld_montecarlo(coin(), 20, {0.49, 0.51}, 20000, 9);
  const auto long_run = birkhoff_ld_montecarlo(coin(), 400, {0.45, 0.55}, 20000, 9);
  EXPECT_GT(long_run.rate, short_run.rate);
  EXPECT_GT(long_run.rate, -0.01);
}

TEST(LargeDeviation, RejectsTooFewSamples) {
  EXPECT_THROW(birkhoff_ld_montecarlo(coin(), 20, {0.6, 1.0}, 100, 1), DomainError);
}

TEST(Abramov, Examples) {
  const auto unit = abramov_timechange(coin());
  EXPECT_NEAR(unit.h_timechanged, unit.h_base, 1e-12);
  EXPECT_NEAR(unit.h_base, kLog2, 1e-10);

  const auto doubled = abramov_timechange(coin().with_roof({2, 2, 2, 2}));
  EXPECT_NEAR(doubled.h_timechanged, doubled.h_base / 2.0, 1e-12);

  const auto sym = abramov_timechange(MarkovModel::full_shift(2).with_roof({1, 2, 1, 2}));
  EXPECT_NEAR(sym.h_timechanged, kGolden, 1e-8);
  EXPECT_LE(sym.ratio_check, 1e-8);
}

TEST(Abramov, HoldsAwayFromZeroBeta) {
  const auto m = coin().with_roof({1.0, 1.5, 0.7, 2.0});
  for (double beta : {-1.0, 0.5, 2.0}) EXPECT_LE(abramov_timechange(m, beta).ratio_check, 1e-8);
}

TEST(StableNorm, Examples) {
  std::vector<Orbit> prop, zero, mixed;
  for (int k = 1; k <= 6; ++k) {
    prop.push_back({double(k), 0.8 * k});
    zero.push_back({double(k), 0.0});
    mixed.push_back({double(k), (k == 4 ? 0.95 : 0.3) * k});
  }
  EXPECT_NEAR(stable_norm(prop), 0.8, 1e-15);
  EXPECT_EQ(stable_norm(zero), 0.0);
  EXPECT_NEAR(stable_norm(mixed), 0.95, 1e-15);
  EXPECT_THROW(stable_norm({}), DomainError);
}

TEST(StableNorm, ConvergesFromBelowToExtreme) {
  const MarkovModel m(2, {{0, 0, 0.2, 1}, {0, 1, 1.0, 1}, {1, 0, 0.6, 1}});
  double prev = -INFINITY;
  for (int n : {1, 2, 4, 8}) {
    const double s = stable_norm(periodic_orbits(m, n, 1.0));
    EXPECT_GE(s, prev - 1e-15);
    EXPECT_LE(s, q_extremes(m).second + 1e-12);
    prev = s;
  }
  EXPECT_NEAR(prev, q_extremes(m).second, 1e-12);
}

TEST(Csv, NegInfIsSpelledOut) {
  const auto csv = curve_to_csv({0.0, 1.0}, {kNegInf, 0.5});
  EXPECT_NE(csv.find("-inf"), std::string::npos);
  EXPECT_EQ(csv.substr(0, 7), "x,value");
}
