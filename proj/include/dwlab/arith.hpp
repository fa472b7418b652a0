#pragma once

// The cocompact arithmetic group Gamma(A, p) of norm-one elements
// y0 + y1 i + y2 j + y3 k of the quaternion algebra with i^2 = A, j^2 = p,
// and the trace-formula side computations on its length spectrum
// { log x_m }.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dwlab/common.hpp"

namespace dwlab::arith {

using Quad = std::array<std::int64_t, 4>;

/// Throws DomainError unless p is a prime with p = 1 mod 4 and A >= 1 is a
/// quadratic non-residue mod p.
void validate_group(std::int64_t A, std::int64_t p);

struct GroupElement {
  Quad y{1, 0, 0, 0};
  std::int64_t A = 2;
  std::int64_t p = 5;

  /// Validates (A, p) and the norm form.
  static GroupElement make(const Quad& y, std::int64_t A, std::int64_t p);

  GroupElement operator*(const GroupElement& o) const;
  GroupElement inverse() const;  // conjugate, since the norm is 1
  GroupElement pow(int k) const;
  /// [[y0 + y1 sqrt A, y2 sqrt p + y3 sqrt(Ap)], [y2 sqrt p - y3 sqrt(Ap), y0 - y1 sqrt A]]
  Eigen::Matrix2d matrix() const;
  std::int64_t half_trace() const { return y[0]; }

  bool operator==(const GroupElement& o) const { return y == o.y; }
  bool operator<(const GroupElement& o) const { return y < o.y; }
};

/// y0^2 - A y1^2 - p y2^2 + A p y3^2 - 1 in exact integer arithmetic.
std::int64_t norm_form_residual(const Quad& y, std::int64_t A, std::int64_t p);

struct XmResult {
  double x = 1.0;
  double l = 0.0;
  bool hyperbolic = false;
};

/// x_m = 2m^2 - 1 + 2m sqrt(m^2 - 1), l = log x_m = 2 arccosh m.
XmResult xm(std::int64_t m);

/// Chebyshev T_k(m): the half trace of gamma^k when gamma has half trace m.
std::int64_t chebyshev_t(int k, std::int64_t m);

/// All elements with y0 = m and |y1|, |y2|, |y3| <= box, in lexicographic
/// order. Completeness holds only inside the box.
std::vector<GroupElement> enumerate_trace(std::int64_t A, std::int64_t p, std::int64_t m,
                                          std::int64_t box);

/// Elements with 2 <= y0 <= max_y0 inside the box, plus their inverses.
std::vector<GroupElement> conjugator_ball(std::int64_t A, std::int64_t p, std::int64_t max_y0,
                                          std::int64_t box);

struct ConjugacyPartition {
  std::vector<int> class_of;                 // per input element
  std::vector<GroupElement> representatives;  // least element of each class
};

/// Union-find closure of the inputs under gamma -> g gamma g^{-1} for the
/// given conjugators. Classes are distinct only within the tested ball.
ConjugacyPartition classify_conjugacy(const std::vector<GroupElement>& elements,
                                      const std::vector<GroupElement>& conjugators);

enum class WeightMode { ZeroForm, SyntheticHomomorphism, External };

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

struct ClassInfo {
  GroupElement representative;
  int members = 0;                 // elements found inside the box
  int power = 1;                   // k with gamma = delta^k, delta primitive
  std::int64_t root_m = 0;         // half trace of the primitive root
  double primitive_length = 0.0;
  double omega_integral = 0.0;
};

struct LengthEntry {
  std::int64_t m = 0;
  double x = 0.0;
  double l = 0.0;
  std::vector<ClassInfo> classes;
  bool incomplete = false;         // no element found inside the box

  /// sum over classes of e^{omega} * primitive length.
  double mu() const;
};

struct WeightParams {
  double stable_norm = 1.0;  // synthetic ratios lie in [-stable_norm, stable_norm]
  double delta = 0.05;       // near-extremal classes reach (1 - delta) stable_norm
  /// External mode: omega integral for a class at length l.
  std::function<double(const ClassInfo&, double l)> external;
};

struct WeightedLengthSpectrum {
  std::int64_t A = 2;
  std::int64_t p = 5;
  std::int64_t box = 0;
  std::uint64_t seed = 0;
  WeightMode weight_mode = WeightMode::ZeroForm;
  std::vector<LengthEntry> entries;  // m = 2 .. m_max

  const LengthEntry* find(std::int64_t m) const;
  std::int64_t m_max() const { return entries.empty() ? 1 : entries.back().m; }
  /// (length, omega integral) per class, for stable-norm scans.
  std::vector<std::pair<double, double>> orbit_pairs() const;
};

/// Enumerates, classifies and weights classes for every 2 <= m <= m_max.
/// The conjugator ball is every element with y0 <= conjugator_max_y0 in the
/// same box.
WeightedLengthSpectrum build_length_spectrum(std::int64_t A, std::int64_t p, std::int64_t m_max,
                                             std::int64_t box, WeightMode mode,
                                             const WeightParams& params, std::uint64_t seed,
                                             int threads = 1, std::int64_t conjugator_max_y0 = 3);

// -- test function -----------------------------------------------------------

/// khat(x) = 2 max(0, 1 - |x|); k(u) = (1/pi) (sin(u/2) / (u/2))^2, so that
/// khat(r) = int e^{iru} k(u) du.
double fejer_khat(double x);
double fejer_k(double u);
/// Khat_alpha(l) = khat(l - alpha) + khat(l + alpha).
double khat_alpha(double l, double alpha);

// -- R search ------------------------------------------------------------------

struct RSearchResult {
  long double R = 0.0L;
  double min_cos = 0.0;   // min over lengths of cos(R l), verified >= 1/2
  long jumps = 0;
};

/// Largest R the search will consider; above it the phase R*l loses too much
/// precision for an exact check.
inline constexpr long double kRSearchPrecisionCap = 35184372088832.0L;  // 2^45

/// Smallest R >= M with cos(R l) >= 1/2 for every listed length, found by an
/// interval sweep: each length admits R only on [(2 pi k - pi/3)/l,
/// (2 pi k + pi/3)/l], and the sweep jumps to the next admissible interval of
/// whichever length fails. The result is verified before returning and lies
/// in [M, M exp(exp(5T))].
RSearchResult r_search(const std::vector<double>& lengths, double M, double T);

// -- Gaussian-windowed trace identity ------------------------------------------

struct TraceWindowParams {
  double sigma = 1.0;
  double R = 0.0;
  double T = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
  double theta_of_R = 1.0;
  double eps = 0.0;

  void validate() const;
};

struct TraceSides {
  cplx plancherel_term;
  cplx geodesic_sum;
  double modulus_lower_bound = 0.0;
  bool truncated = false;        // spectrum does not cover [T - 5 sigma, T + 5 sigma]
  bool comparison_checked = false;
  bool comparison_holds = false;  // |geodesic_sum| >= modulus_lower_bound
};

/// (area / 4 pi) int r tanh(pi r) [e^{-s^2 (r-R)^2/2} e^{-iTr} + (r -> -r)] dr by
/// Gauss-Kronrod on subintervals.
cplx plancherel_term(double sigma, double R, double T, double area);

/// Both sides of the Gaussian trace identity apart from the spectral sum.
/// When verified_R is set, every length <= 5T satisfies cos(l R) >= 1/2 and
/// the modulus comparison is checked.
TraceSides gaussian_trace_sides(const TraceWindowParams& params, const WeightedLengthSpectrum& wls,
                                double area, bool verified_R = false);

// -- shifted trace sums and the second moment ------------------------------------

/// 2 sum_m mu(m) / (x_m^{1/2} - x_m^{-1/2}) Khat_alpha(log x_m) cos(t log x_m)
/// over e^{alpha-1} <= x_m <= e^{alpha+1}.
double s_alpha(const WeightedLengthSpectrum& wls, double alpha, double t);

/// The same sum taken class by class:
/// sum_gamma e^{omega} l_o / sinh(l/2) Khat_alpha(l) cos(t l).
double s_alpha_classes(const WeightedLengthSpectrum& wls, double alpha, double t);

struct OscillatoryWindow {
  cplx value;
  bool bound_ok = true;
};

/// int_{2T-h}^{2T+h} (1 - |t - 2T|/h) e^{i lambda t} dt with h = T^beta, in
/// closed form e^{2 i lambda T} h sinc^2(lambda h / 2).
OscillatoryWindow oscillatory_window(double lambda, double T, double beta);

/// Module constant C in alpha <= 2 beta log T - C; smallest integer for which
/// |I2| <= I1/100 held on zero-form Gamma(2,5) data for T in [20, 200].
inline constexpr double kCSplit = 4.0;

struct SecondMoment {
  double I = 0.0;        // quadrature of the windowed |S_alpha|^2
  double I1 = 0.0;       // diagonal terms
  double I2 = 0.0;       // off-diagonal terms
  bool in_regime = false;  // alpha <= 2 beta log T - kCSplit
  bool split_holds = false;  // |I2| <= I1/100, meaningful when in_regime
  double c_split = kCSplit;
  int terms = 0;
};

SecondMoment windowed_second_moment(const WeightedLengthSpectrum& wls, double alpha, double beta,
                                    double T);

/// Sums of mu, mu^2 and the term count over e^{alpha-w} <= x_m <= e^{alpha+w}.
struct WindowSums {
  double mu_sum = 0.0;
  double mu2_sum = 0.0;
  long count = 0;
};
WindowSums window_sums(const WeightedLengthSpectrum& wls, double alpha, double half_width);

// -- bounds ----------------------------------------------------------------------

/// Pr - 1/2 - (1 + eps) / (2 beta), for beta in (0, 1] and 0 < eps < beta.
double q3arithm_bound(double pr_omega, double beta, double eps);

/// Smallest s with t^{2 beta s} t^{1+eps} >= C t^{beta (2 Pr - 1)}.
double q3_chain_exponent(double pr_omega, double beta, double eps, double C, double t);

/// True when some r with |Re r - T| <= T^beta has |Im r| >= bound.
bool q3_window_check(const std::vector<cplx>& spectrum, double T, double beta, double bound);

struct SurrogateSpectrum {
  std::vector<cplx> values;
  double theta = 1.0;
  double c = 0.1;        // |Im r| <= c theta
  double x_lo = 0.0;     // values cover Re r in [x_lo, x_hi]
  double x_hi = 0.0;
};

/// Weyl-density surrogate: round(x theta) points in each unit interval
/// [x, x+1] of [x_lo, x_hi], with imaginary parts uniform in [-c theta, c theta].
SurrogateSpectrum weyl_surrogate(double theta, double c, double x_lo, double x_hi,
                                 std::uint64_t seed);

/// Bound asserted on partI and partIII. Surrogates at R = 1e3, c = 0.1 gave
/// tails near 0.04.
inline constexpr double kTailConstant = 1.0;

struct TailParts {
  double partI = 0.0;     // |sum over Re r <= R - f|
  double partII = 0.0;    // |sum over |Re r - R| <= f|
  double partIII = 0.0;   // |sum over Re r >= R + f|
  double majorant_I = 0.0;
  double majorant_III = 0.0;
  long countII = 0;
  bool tails_bounded = false;    // partI, partIII <= kTailConstant
  bool middle_dominates = false;  // partII >= 10 (partI + partIII)
};

/// Splits sum_j e^{-sigma^2 (r_j - R)^2 / 2} e^{-i T r_j} into the three
/// ranges of Re r_j around R with half width f.
TailParts tail_bounds(const SurrogateSpectrum& s, double R, double sigma, double f, double T);

}  // namespace dwlab::arith
