#pragma once

// Damped wave eigenproblem on the circle of length 2*pi.
//
// Stationary solutions v(t,x) = exp(i t tau) u(x) of
//     (d_t^2 - Delta + 2 a(x) d_t) v = 0
// satisfy the quadratic pencil (-Delta - tau^2 + 2 i a tau) u = 0. In the
// Fourier basis e^{inx}, n = -K..K, -Delta is diag(n^2) and multiplication by
// a trigonometric polynomial a is the exact banded convolution matrix
// A(m,n) = a_hat(m-n). The pencil is solved through a 2N x 2N linearization.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwlab/common.hpp"

namespace dwlab::dwcore {

/// a(x) = mean + sum_k cos_k cos(kx) + sin_k sin(kx), plus an optional twist
/// c of the one-form model q(x, xi) = c xi (twisted Laplacian on the circle).
struct DampingProfile {
  double mean = 0.0;
  std::vector<double> cosine_coeffs;  // k = 1, 2, ...
  std::vector<double> sine_coeffs;    // k = 1, 2, ...
  double twist = 0.0;

  static DampingProfile constant(double a0);
  static DampingProfile twisted(double c);

  double operator()(double x) const;
  double derivative(double x) const;
  int degree() const;
  bool has_damping() const;

  /// Fourier coefficient a_hat(k) with a(x) = sum_k a_hat(k) e^{ikx}.
  cplx fourier_coeff(int k) const;

  /// Extremes on the circle: 10^4-point grid scan followed by Newton polish
  /// on a'(x) = 0. Guaranteed within 1e-6 of the true extremes.
  double min_value() const;
  double max_value() const;
  double average() const { return mean; }

  /// Stable content hash (FNV-1a over the canonical JSON form).
  std::uint64_t hash() const;

  nlohmann::json to_json() const;
  static DampingProfile from_json(const nlohmann::json& j);
};

struct QuadraticPencil {
  Eigen::MatrixXcd laplacian;   // diag(n^2), real and nonnegative
  Eigen::MatrixXcd damping_op;  // a_hat(m - n); Hermitian
  Eigen::VectorXcd twist_term;  // 2icn - c^2 per mode (zero without twist)
  int K = 0;

  int dimension() const { return 2 * K + 1; }
  static int mode_of(int index, int K) { return index - K; }

  /// laplacian + diag(twist_term): the tau-independent block of the pencil.
  Eigen::MatrixXcd stiffness() const;
};

enum class SpectrumKind { WaveTau, SpectralR, SemiclassicalZ };

std::string to_string(SpectrumKind kind);
SpectrumKind spectrum_kind_from_string(const std::string& s);

struct ComplexSpectrum {
  std::vector<cplx> values;  // sorted by real part, then imaginary part
  std::optional<double> hbar;
  SpectrumKind kind = SpectrumKind::WaveTau;
  int K = 0;
  std::uint64_t profile_hash = 0;
  double max_residual = 0.0;  // max ||Mv - tau v|| / ||v||, 0 when not computed

  std::size_t size() const { return values.size(); }
};

struct LebeauQuantities {
  double d0 = 0.0;
  double c_inf = 0.0;
  double rho_pred = 0.0;
  std::optional<double> rho_measured;
};

// -- assembly and solve ------------------------------------------------------

/// Builds the pencil for modes n = -K..K. Rejects profiles whose
/// trigonometric degree exceeds K (the convolution would alias).
QuadraticPencil assemble_pencil(const DampingProfile& profile, int K);

/// Companion matrix [[0, I], [L, 2i A]] acting on (u, tau u), with
/// L = stiffness(). Its eigenvalues are exactly the pencil roots.
Eigen::MatrixXcd linearize_pencil(const QuadraticPencil& pencil);

/// Similar form [[0, D], [D, 2i A]] acting on (D u, tau u) where D^2 = L.
/// Same characteristic polynomial as linearize_pencil, norm O(K) instead of
/// O(K^2), so the eigensolver loses less accuracy.
Eigen::MatrixXcd linearize_pencil_balanced(const QuadraticPencil& pencil);

struct SolveOptions {
  bool compute_residuals = true;
  double residual_tol = 1e-8;
};

/// All eigenvalues of a square complex matrix (LAPACK zgeev). With
/// compute_residuals, every eigenpair is checked against residual_tol and a
/// ConvergenceError is raised on violation or solver failure.
ComplexSpectrum solve_spectrum(const Eigen::MatrixXcd& matrix,
                               const SolveOptions& opts = {});

/// assemble -> balanced linearization -> solve, with metadata filled in.
ComplexSpectrum damped_wave_spectrum(const DampingProfile& profile, int K,
                                     const SolveOptions& opts = {});

struct PencilEigenpairs {
  std::vector<cplx> values;
  Eigen::MatrixXcd modes;  // column j is the u-part of eigenpair j
};

/// Eigenpairs from the plain companion, u read off the first block.
PencilEigenpairs pencil_eigenpairs(const QuadraticPencil& pencil);

/// |<L u,u> - tau^2 |u|^2 + 2i tau <A u,u>| / (|u|^2 (1 + |tau|^2)).
double rayleigh_defect(const QuadraticPencil& pencil, cplx tau,
                       const Eigen::VectorXcd& u);

// -- closed forms ------------------------------------------------------------

/// { i a0 +- sqrt(n^2 - a0^2) : |n| <= nmax } with the principal root.
ComplexSpectrum constant_damping_reference(double a0, int nmax);

/// Eigenvalues (n + ic)^2 of the twisted circle Laplacian, |n| <= nmax.
ComplexSpectrum twisted_circle_reference(double c, int nmax);

// -- semiclassical view and checks ------------------------------------------

struct SemiclassicalPoint {
  cplx z;
  double im_over_hbar = 0.0;
};

struct SemiclassicalSpectrum {
  double hbar = 0.0;
  std::vector<SemiclassicalPoint> points;

  /// Points with |Re z - 1/2| <= c hbar.
  std::vector<SemiclassicalPoint> near_half(double c) const;
};

/// z = (hbar tau)^2 / 2 for each tau.
SemiclassicalSpectrum to_semiclassical(const ComplexSpectrum& spectrum, double hbar);

struct WeylCount {
  long count = 0;
  double predicted = 0.0;
  bool beyond_trust_horizon = false;
};

/// #{tau : 0 <= Re tau <= lambda} (with multiplicity) and the d=1 Weyl
/// prediction 2 lambda. Points with |Re tau| below 1e-9 count as Re tau = 0.
WeylCount weyl_window_count(const ComplexSpectrum& spectrum, double lambda);

LebeauQuantities lebeau_quantities(const ComplexSpectrum& spectrum,
                                   const DampingProfile& profile);

/// Largest distance from any eigenvalue to the nearest reflected eigenvalue
/// -conj(tau). Zero for an exactly symmetric spectrum.
double reflection_asymmetry(const ComplexSpectrum& spectrum);

// -- time domain -------------------------------------------------------------

/// Fourier coefficients of u(0) and d_t u(0), modes -K..K.
struct InitialData {
  Eigen::VectorXcd u;
  Eigen::VectorXcd v;

  static InitialData single_mode(int K, int n);
  /// Deterministic mixture of the modes 1 <= |n| <= nmax (real-valued u).
  static InitialData generic(int K, int nmax, std::uint64_t seed);
};

struct EnergyDecay {
  double rate = 0.0;          // fitted -d/dt log E over [Tmax/2, Tmax]
  double fit_rms = 0.0;       // rms residual of the log-linear fit
  double dt = 0.0;
  std::vector<double> times;  // sampled trace, for plotting
  std::vector<double> energies;
};

/// Integrates the damped wave equation with a Strang splitting: Cayley
/// half-steps for the damping around a velocity-Verlet step, dt = 0.2 / K.
/// The discrete energy is nonincreasing for a >= 0; an increase beyond
/// round-off raises a ConvergenceError.
EnergyDecay energy_decay_rate(const DampingProfile& profile, int K,
                              const InitialData& u0, double Tmax);

// -- serialization -----------------------------------------------------------

/// CSV with header `re,im,kind,hbar,K,profile_hash`.
std::string spectrum_to_csv(const ComplexSpectrum& spectrum);
ComplexSpectrum spectrum_from_csv(const std::string& text);

}  // namespace dwlab::dwcore
