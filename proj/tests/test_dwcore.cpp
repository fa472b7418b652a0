#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "dwlab/dwcore.hpp"
#include "oracles.hpp"

using namespace dwlab;
using namespace dwlab::dwcore;

namespace {

DampingProfile cos_profile() {
  DampingProfile p;
  p.mean = 0.5;
  p.cosine_coeffs = {0.4};
  return p;
}

double nearest(const std::vector<cplx>& set, cplx z) {
  double best = INFINITY;
  for (const cplx& s : set) best = std::min(best, std::abs(s - z));
  return best;
}

}  // namespace

TEST(Profile, EvaluatesAndBracketsExtremes) {
  DampingProfile p;
  p.mean = 0.3;
  p.cosine_coeffs = {0.2, 0.0, -0.1};
  p.sine_coeffs = {0.05};
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < 200000; ++i) {
    const double x = 2.0 * std::numbers::pi * i / 200000;
    lo = std::min(lo, p(x));
    hi = std::max(hi, p(x));
  }
  EXPECT_NEAR(p.min_value(), lo, 1e-6);
  EXPECT_NEAR(p.max_value(), hi, 1e-6);
  EXPECT_LE(p.min_value(), lo + 1e-12);
  EXPECT_EQ(p.degree(), 3);
}

TEST(Profile, JsonRoundTripAndStrictKeys) {
  const auto p = cos_profile();
  const auto q = DampingProfile::from_json(p.to_json());
  EXPECT_EQ(q.mean, p.mean);
  EXPECT_EQ(q.cosine_coeffs, p.cosine_coeffs);
  EXPECT_EQ(q.hash(), p.hash());
  EXPECT_THROW(DampingProfile::from_json(nlohmann::json{{"mean", 1.0}, {"amp", 2}}), DomainError);
}

TEST(Assemble, ConstantDampingIsScaledIdentity) {
  const auto pen = assemble_pencil(DampingProfile::constant(0.5), 4);
  ASSERT_EQ(pen.damping_op.rows(), 9);
  EXPECT_LT((pen.damping_op - 0.5 * Eigen::MatrixXcd::Identity(9, 9)).norm(), 1e-15);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(pen.laplacian(i, i).real(), (i - 4) * (i - 4));
}

TEST(Assemble, CosineGivesHalfOnFirstOffDiagonals) {
  DampingProfile p;
  p.cosine_coeffs = {1.0};
  const auto pen = assemble_pencil(p, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double expect = std::abs(i - j) == 1 ? 0.5 : 0.0;
      EXPECT_NEAR(std::abs(pen.damping_op(i, j) - expect), 0.0, 1e-15);
    }
  EXPECT_TRUE(pen.damping_op.isApprox(pen.damping_op.adjoint()));
}

TEST(Assemble, RejectsAliasing) {
  DampingProfile p;
  p.cosine_coeffs = {0.0, 0.0, 0.1};
  EXPECT_THROW(assemble_pencil(p, 2), DomainError);
}

TEST(Assemble, TwistMatchesClosedForm) {
  const auto spec = damped_wave_spectrum(DampingProfile::twisted(0.3), 6);
  const auto ref = twisted_circle_reference(0.3, 6);
  // pencil roots tau = +-(n + ic) square to the twisted eigenvalues
  for (const cplx& t : spec.values) EXPECT_LT(nearest(ref.values, t * t), 1e-8);
  EXPECT_EQ(spec.size(), 2 * ref.size());
}

TEST(Linearize, SingleModeExamples) {
  QuadraticPencil pen;
  pen.K = 0;
  pen.laplacian = Eigen::MatrixXcd::Constant(1, 1, 4.0);
  pen.damping_op = Eigen::MatrixXcd::Zero(1, 1);
  pen.twist_term = Eigen::VectorXcd::Zero(1);
  auto s = solve_spectrum(linearize_pencil(pen));
  EXPECT_NEAR(std::abs(s.values[0] - cplx(-2, 0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s.values[1] - cplx(2, 0)), 0.0, 1e-12);

  pen.laplacian(0, 0) = 9.0;
  pen.damping_op(0, 0) = 0.5;
  s = solve_spectrum(linearize_pencil(pen));
  const double r = std::sqrt(9.0 - 0.25);
  EXPECT_LT(nearest(s.values, cplx(r, 0.5)), 1e-12);
  EXPECT_LT(nearest(s.values, cplx(-r, 0.5)), 1e-12);
}

TEST(Linearize, RandomHermitianMatchesDeterminantRoots) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.3);
  QuadraticPencil pen;
  pen.K = 2;
  pen.laplacian = Eigen::MatrixXcd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) pen.laplacian(i, i) = (i - 2) * (i - 2);
  Eigen::MatrixXcd B(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) B(i, j) = cplx(g(rng), g(rng));
  pen.damping_op = 0.5 * (B + B.adjoint());
  pen.twist_term = Eigen::VectorXcd::Zero(5);
  const auto comp = solve_spectrum(linearize_pencil(pen));
  const auto bal = solve_spectrum(linearize_pencil_balanced(pen));

  auto det = [&](cplx tau) {
    Eigen::MatrixXcd m = pen.laplacian - tau * tau * Eigen::MatrixXcd::Identity(5, 5) +
                         cplx(0, 2) * tau * pen.damping_op;
    return m.determinant();
  };
  double re = 0.0, im = 0.0;
  for (const cplx& t : comp.values) {
    re = std::max(re, std::abs(t.real()));
    im = std::max(im, std::abs(t.imag()));
  }
  const auto roots = oracle::grid_roots(det, -re - 1, re + 1, -im - 1, im + 1, 0.01);
  for (const cplx& t : comp.values) EXPECT_LT(nearest(roots, t), 1e-8) << t;
  for (const cplx& t : bal.values) EXPECT_LT(nearest(comp.values, t), 1e-10);
}

TEST(Solve, IdentityAndResidualReporting) {
  const auto s = solve_spectrum(Eigen::MatrixXcd::Identity(6, 6));
  for (const cplx& v : s.values) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-14);
  EXPECT_LE(s.max_residual, 1e-8);
}

TEST(Solve, UndampedSpectrumIsRealAndSymmetric) {
  const auto s = damped_wave_spectrum(DampingProfile{}, 16);
  for (const cplx& v : s.values) {
    EXPECT_LT(std::abs(v.imag()), 1e-10);
    EXPECT_LT(nearest(s.values, -v), 1e-10);
  }
}

TEST(Reference, ConstantDampingExamples) {
  const auto r = constant_damping_reference(0.5, 3);
  EXPECT_LT(nearest(r.values, cplx(2.95804, 0.5)), 1e-5);
  EXPECT_LT(nearest(r.values, cplx(-2.95804, 0.5)), 1e-5);
  const auto z = constant_damping_reference(0.0, 4);
  for (const cplx& v : z.values) EXPECT_NEAR(v.real(), std::round(v.real()), 1e-15);
  const auto over = constant_damping_reference(2.0, 1);
  EXPECT_LT(nearest(over.values, cplx(0, 2 + std::sqrt(3.0))), 1e-12);
  EXPECT_LT(nearest(over.values, cplx(0, 2 - std::sqrt(3.0))), 1e-12);
}

TEST(Reference, TwistedExamples) {
  const auto r = twisted_circle_reference(0.3, 5);
  EXPECT_LT(nearest(r.values, cplx(24.91, 3.0)), 1e-12);
  const auto z = twisted_circle_reference(0.0, 3);
  EXPECT_LT(nearest(z.values, cplx(9.0, 0.0)), 1e-15);
}

TEST(Semiclassical, DirectArithmetic) {
  ComplexSpectrum s;
  s.values = {cplx(100, 0.5), cplx(80, 0.0)};
  const auto sc = to_semiclassical(s, 0.01);
  EXPECT_NEAR(sc.points[0].z.real(), 0.4999875, 1e-12);
  EXPECT_NEAR(sc.points[0].z.imag(), 0.005, 1e-12);
  EXPECT_NEAR(sc.points[0].im_over_hbar, 0.5, 1e-12);
  EXPECT_EQ(sc.points[1].im_over_hbar, 0.0);
  EXPECT_EQ(sc.near_half(1.0).size(), 1u);
}

TEST(Semiclassical, ConstantDampingLadderApproachesA0) {
  const auto spec = damped_wave_spectrum(DampingProfile::constant(0.5), 64);
  for (int n : {8, 16, 32}) {
    const double hbar = 1.0 / n;
    const auto sc = to_semiclassical(spec, hbar);
    const auto near = sc.near_half(2.0);
    ASSERT_FALSE(near.empty());
    // the mirrored roots -conj(tau) land at the same Re z with Im z flipped
    for (const auto& p : near) EXPECT_NEAR(std::abs(p.im_over_hbar), 0.5, 2.0 * hbar);
  }
}

TEST(Weyl, UndampedCountHasOffsetTwo) {
  const auto spec = damped_wave_spectrum(DampingProfile{}, 32);
  const auto ref = constant_damping_reference(0.0, 32);
  long oracle = 0;
  for (const cplx& t : ref.values) oracle += t.real() >= 0.0 && t.real() <= 10.0;
  const auto wc = weyl_window_count(spec, 10.0);
  EXPECT_EQ(wc.count, oracle);
  EXPECT_EQ(wc.count, 22);
  EXPECT_EQ(wc.predicted, 20.0);
  EXPECT_FALSE(wc.beyond_trust_horizon);
  EXPECT_TRUE(weyl_window_count(spec, 20.0).beyond_trust_horizon);
}

TEST(Weyl, LambdaZeroCountsImaginaryAxis) {
  const auto spec = damped_wave_spectrum(DampingProfile::constant(2.5), 8);
  long oracle = 0;
  for (const cplx& t : constant_damping_reference(2.5, 8).values) oracle += std::abs(t.real()) < 1e-9;
  EXPECT_EQ(weyl_window_count(spec, 0.0).count, oracle);
}

TEST(Weyl, ConstantDampingLambda50) {
  const auto spec = damped_wave_spectrum(DampingProfile::constant(0.5), 128);
  const auto wc = weyl_window_count(spec, 50.0);
  EXPECT_LE(std::abs(wc.count - wc.predicted), 3.0);
}

TEST(Lebeau, ClosedFormCases) {
  const auto c = DampingProfile::constant(0.5);
  const auto q = lebeau_quantities(damped_wave_spectrum(c, 8), c);
  EXPECT_NEAR(q.d0, 0.5, 1e-10);
  EXPECT_EQ(q.c_inf, 0.5);
  EXPECT_NEAR(q.rho_pred, 1.0, 1e-10);
  const DampingProfile zero;
  EXPECT_NEAR(lebeau_quantities(damped_wave_spectrum(zero, 8), zero).rho_pred, 0.0, 1e-10);
  const auto p = cos_profile();
  const auto lq = lebeau_quantities(damped_wave_spectrum(p, 128), p);
  EXPECT_EQ(lq.c_inf, 0.5);
  EXPECT_EQ(lq.rho_pred, 2.0 * std::min(lq.d0, lq.c_inf));
  EXPECT_THROW(lebeau_quantities(damped_wave_spectrum(DampingProfile::twisted(0.1), 4),
                                 DampingProfile::twisted(0.1)),
               DomainError);
}

TEST(Invariants, SymmetryBandRayleighAtK128) {
  const auto p = cos_profile();
  const auto spec = damped_wave_spectrum(p, 128);
  EXPECT_LE(reflection_asymmetry(spec), 1e-8);
  for (const cplx& t : spec.values) {
    if (std::abs(t.real()) < 1.0) continue;
    EXPECT_GE(t.imag(), p.min_value() - 1e-6);
    EXPECT_LE(t.imag(), p.max_value() + 1e-6);
  }
  const auto pen = assemble_pencil(p, 128);
  const auto pairs = pencil_eigenpairs(pen);
  for (std::size_t j = 0; j < pairs.values.size(); ++j)
    EXPECT_LE(rayleigh_defect(pen, pairs.values[j], pairs.modes.col(j)), 1e-7);
}

TEST(Invariants, RefinementStability) {
  const auto p = cos_profile();
  const auto s32 = damped_wave_spectrum(p, 32);
  const auto s64 = damped_wave_spectrum(p, 64);
  for (const cplx& t : s32.values)
    if (std::abs(t.real()) <= 8.0) {
      EXPECT_LE(nearest(s64.values, t), 1e-8) << t;
    }
}

TEST(EnergyDecay, SingleModeConstantDamping) {
  const auto e = energy_decay_rate(DampingProfile::constant(0.5), 8, InitialData::single_mode(8, 3), 40.0);
  EXPECT_NEAR(e.rate, 1.0, 0.02);
}

TEST(EnergyDecay, UndampedConserves) {
  const auto e = energy_decay_rate(DampingProfile{}, 8, InitialData::single_mode(8, 3), 20.0);
  EXPECT_LT(std::abs(e.rate), 1e-6);
  const double drift = std::abs(e.energies.back() - e.energies.front()) / e.energies.front();
  EXPECT_LT(drift, 1e-6 * 20.0);
}

TEST(EnergyDecay, RejectsZeroData) {
  InitialData z{Eigen::VectorXcd::Zero(17), Eigen::VectorXcd::Zero(17)};
  EXPECT_THROW(energy_decay_rate(DampingProfile::constant(0.5), 8, z, 10.0), DomainError);
}

TEST(Csv, RoundTrip) {
  auto spec = damped_wave_spectrum(cos_profile(), 8);
  spec.hbar = 0.125;
  const auto back = spectrum_from_csv(spectrum_to_csv(spec));
  ASSERT_EQ(back.size(), spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) EXPECT_EQ(back.values[i], spec.values[i]);
  EXPECT_EQ(back.K, 8);
  EXPECT_EQ(*back.hbar, 0.125);
  EXPECT_EQ(back.profile_hash, spec.profile_hash);
  EXPECT_EQ(spectrum_to_csv(spec).substr(0, 30), "re,im,kind,hbar,K,profile_hash");
}
