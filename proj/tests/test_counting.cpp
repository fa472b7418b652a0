#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dwlab/counting.hpp"
#include "oracles.hpp"

using namespace dwlab;
using namespace dwlab::counting;

namespace {

std::vector<cplx> random_coeffs(std::mt19937_64& rng, int degree) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> c(degree + 1);
  for (auto& v : c) v = cplx(g(rng), g(rng));
  return c;
}

double min_distance_to_circle(const std::vector<cplx>& roots, cplx z0, double r) {
  double d = INFINITY;
  for (const cplx& z : roots) d = std::min(d, std::abs(std::abs(z - z0) - r));
  return d;
}

dwcore::SemiclassicalSpectrum positive_half(const dwcore::ComplexSpectrum& s, double hbar) {
  dwcore::ComplexSpectrum pos = s;
  pos.values.clear();
  for (const cplx& t : s.values)
    if (t.real() > 0.0) pos.values.push_back(t);
  return dwcore::to_semiclassical(pos, hbar);
}

}  // namespace

TEST(Window, ShapesAndBoundary) {
  const auto r = ComplexWindow::rectangle({1.0, 2.0}, 0.5, 0.25);
  EXPECT_TRUE(r.contains({1.4, 2.2}));
  EXPECT_FALSE(r.contains({1.6, 2.0}));
  const auto d = ComplexWindow::disk({0.0, 0.0}, 2.0);
  EXPECT_NEAR(std::abs(d.boundary(0.3)), 2.0, 1e-15);
  EXPECT_THROW(ComplexWindow::rectangle({0, 0}, -1.0, 1.0).validate(), DomainError);
  EXPECT_THROW(ComplexWindow::disk({0, 0}, 0.0).validate(), DomainError);
}

TEST(ArgumentPrinciple, Examples) {
  const auto square = ComplexWindow::rectangle({0, 0}, 2.0, 2.0);
  EXPECT_EQ(argument_principle_zeros(polynomial_sampler({-1.0, 0.0, 0.0, 1.0}), square), 3);
  const HolomorphicSampler ex{[](cplx z) { return std::exp(z); }, square};
  EXPECT_EQ(argument_principle_zeros(ex, square), 0);
  EXPECT_EQ(argument_principle_zeros(polynomial_sampler({-1.0, 0.0, 0.0, 1.0}),
                                     ComplexWindow::disk({1.0, 0.0}, 0.5)),
            1);
}

TEST(ArgumentPrinciple, ZeroOnContourIsReported) {
  EXPECT_THROW(argument_principle_zeros(polynomial_sampler({-1.0, 1.0}), ComplexWindow::rectangle({0, 0}, 1.0, 1.0)),
               DomainError);
}

TEST(ArgumentPrinciple, RandomPolynomialsMatchCompanionRoots) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5), w(0.3, 1.5);
  int checked = 0;
  while (checked < 30) {
    const auto c = random_coeffs(rng, 8);
    const auto rect = ComplexWindow::rectangle({u(rng), u(rng)}, w(rng), w(rng));
    const auto roots = oracle::polynomial_roots(c);
    bool near_edge = false;
    int inside = 0;
    for (const cplx& z : roots) {
      const double dx = std::abs(z.real() - rect.center.real()) - rect.half_width;
      const double dy = std::abs(z.imag() - rect.center.imag()) - rect.half_height;
      if ((std::abs(dx) < 1e-3 && dy < 1e-3) || (std::abs(dy) < 1e-3 && dx < 1e-3)) near_edge = true;
      inside += dx < 0.0 && dy < 0.0;
    }
    if (near_edge) continue;
    EXPECT_EQ(argument_principle_zeros(polynomial_sampler(c), rect), inside);
    ++checked;
  }
}

TEST(ArgumentPrinciple, DeterminantFamily) {
  // det(I + z diag(k)) vanishes at z = -1/k_i
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(3, 3);
  K.diagonal() << 2.0, -1.0, cplx(0.0, 4.0);
  const auto f = determinant_sampler({Eigen::MatrixXcd::Zero(3, 3), K});
  EXPECT_EQ(argument_principle_zeros(f, ComplexWindow::disk({0, 0}, 0.9)), 2);
  EXPECT_EQ(argument_principle_zeros(f, ComplexWindow::disk({0, 0}, 2.0)), 3);
  EXPECT_NEAR(std::abs(f(-0.5)), 0.0, 1e-14);
}

TEST(Jensen, Examples) {
  const double b = jensen_disk_bound(polynomial_sampler({-0.1, 1.0}), 0.0, 1.0, 2.0);
  EXPECT_NEAR(b, std::log(2.1 / 0.1) / std::log(2.0), 1e-6);
  const HolomorphicSampler ex{[](cplx z) { return std::exp(z); }, ComplexWindow::disk({0, 0}, 3.0)};
  const double e = jensen_disk_bound(ex, 0.0, 1.0, 2.0);
  EXPECT_GE(e, 0.0);
  EXPECT_NEAR(e, 2.0 / std::log(2.0), 1e-6);
  EXPECT_THROW(jensen_disk_bound(polynomial_sampler({0.0, 1.0}), 0.0, 1.0, 2.0), DomainError);
  EXPECT_THROW(jensen_disk_bound(polynomial_sampler({1.0, 1.0}), 0.0, 2.0, 1.0), DomainError);
}

TEST(Jensen, DominatesExactCountOnRandomPolynomials) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> deg(1, 10);
  int checked = 0;
  while (checked < 100) {
    const auto c = random_coeffs(rng, deg(rng));
    const auto roots = oracle::polynomial_roots(c);
    if (min_distance_to_circle(roots, 0.0, 1.0) < 1e-3 || std::abs(c[0]) < 1e-3) continue;
    const auto f = polynomial_sampler(c);
    const int exact = argument_principle_zeros(f, ComplexWindow::disk({0, 0}, 1.0));
    EXPECT_GE(jensen_disk_bound(f, 0.0, 1.0, 2.0), exact - 1e-12);
    ++checked;
  }
}

TEST(Jensen, RectangleCoverDominates) {
  const auto c = std::vector<cplx>{cplx(0.3, 0.1), 1.0, cplx(0.0, -0.5), 0.25};
  const auto rect = ComplexWindow::rectangle({0.2, 0.1}, 1.0, 0.5);
  const auto f = polynomial_sampler(c);
  EXPECT_GE(jensen_rectangle_bound(f, rect), argument_principle_zeros(f, rect));
}

TEST(WindowCount, ConstantDampingExamples) {
  const double a0 = 0.5, hbar = 1.0 / 16.0;
  const auto sc = positive_half(dwcore::damped_wave_spectrum(dwcore::DampingProfile::constant(a0), 64), hbar);
  EXPECT_EQ(window_count(sc, hbar, 1.0, a0 + 0.1, Side::Above), 0);
  const long full = static_cast<long>(sc.near_half(1.0).size());
  EXPECT_GT(full, 0);
  EXPECT_EQ(window_count(sc, hbar, 1.0, a0 - 0.1, Side::Above), full);
  EXPECT_EQ(window_count(sc, hbar, 1.0, a0 + 0.1, Side::Below), full);
  EXPECT_THROW(window_count(sc, hbar * (1.0 + 1e-9), 1.0, 0.0, Side::Above), DomainError);
}

TEST(WindowCount, MixedDataMatchesScanAndIsMonotone) {
  dwcore::DampingProfile p;
  p.mean = 0.5;
  p.cosine_coeffs = {0.4};
  const double hbar = 1.0 / 32.0, c = 2.0;
  const auto sc = positive_half(dwcore::damped_wave_spectrum(p, 96), hbar);
  long prev = LONG_MAX;
  for (double alpha = 0.0; alpha <= 1.0; alpha += 0.05) {
    long scan = 0, below = 0;
    for (const auto& pt : sc.points) {
      if (std::abs(pt.z.real() - 0.5) > c * hbar) continue;
      scan += pt.z.imag() / hbar >= alpha;
      below += pt.z.imag() / hbar <= alpha;
    }
    const long above = window_count(sc, hbar, c, alpha, Side::Above);
    EXPECT_EQ(above, scan);
    EXPECT_EQ(window_count(sc, hbar, c, alpha, Side::Below), below);
    EXPECT_LE(above, prev);
    prev = above;
  }
  // additivity over the bins [0.2, 0.5) and [0.5, 0.8)
  const long a = window_count(sc, hbar, c, 0.2, Side::Above), m = window_count(sc, hbar, c, 0.5, Side::Above),
             b = window_count(sc, hbar, c, 0.8, Side::Above);
  long bin1 = 0, bin2 = 0;
  for (const auto& pt : sc.near_half(c)) {
    const double v = pt.im_over_hbar;
    bin1 += v >= 0.2 && v < 0.5;
    bin2 += v >= 0.5 && v < 0.8;
  }
  EXPECT_EQ(a - m, bin1);
  EXPECT_EQ(m - b, bin2);
}

TEST(Exponent, ExactPowerLaws) {
  std::vector<LadderPoint> half, flat;
  for (int k = 1; k <= 6; ++k) {
    const double h = std::pow(2.0, -k);
    half.push_back({h, std::pow(h, -0.5)});
    flat.push_back({h, 7.0});
  }
  const auto fh = deviation_exponent(half);
  EXPECT_NEAR(fh.slope, 0.5, 1e-12);
  EXPECT_NEAR(fh.residual, 0.0, 1e-12);
  EXPECT_NEAR(deviation_exponent(flat).slope, 0.0, 1e-12);
}

TEST(Exponent, NoisyPowerLaw) {
  std::uniform_real_distribution<double> noise(std::log(0.5), std::log(2.0));
  double mean = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<LadderPoint> pts;
    for (int k = 1; k <= 12; ++k) {
      const double h = std::pow(2.0, -k);
      pts.push_back({h, std::pow(h, -0.7) * std::exp(noise(rng))});
    }
    const double s = deviation_exponent(pts).slope;
    if (seed == 1) {
      EXPECT_NEAR(s, 0.7, 0.1);
    }
    mean += s / 20.0;
  }
  EXPECT_NEAR(mean, 0.7, 0.03);
}

TEST(Exponent, ZeroCountGivesNegativeInfinity) {
  std::vector<LadderPoint> pts{{0.5, 3}, {0.25, 2}, {0.125, 0}, {0.0625, 1}};
  EXPECT_TRUE(is_neg_inf(deviation_exponent(pts).slope));
}

TEST(Exponent, RejectsBadLadders) {
  EXPECT_THROW(deviation_exponent({{0.5, 1}, {0.25, 1}, {0.125, 1}}), DomainError);
  EXPECT_THROW(deviation_exponent({{0.5, 1}, {0.3, 1}, {0.1, 1}, {0.05, 1}}), DomainError);
  EXPECT_THROW(deviation_exponent({{2.0, 1}, {0.5, 1}, {0.25, 1}, {0.1, 1}}), DomainError);
}

TEST(Csv, CountRowsWithFit) {
  ExponentFit fit{0.5, 1.0, 0.01};
  const auto csv = count_csv({{0.25, 1.0, 0.3, Side::Above, 4}, {0.125, 1.0, 0.3, Side::Below, 9}}, &fit);
  EXPECT_EQ(csv.substr(0, 24), "hbar,c,alpha,side,count\n");
  EXPECT_NE(csv.find("above"), std::string::npos);
  EXPECT_NE(csv.find("below"), std::string::npos);
  EXPECT_NE(csv.find("# slope=0.5"), std::string::npos);
  EXPECT_EQ(side_from_string(to_string(Side::Below)), Side::Below);
}
