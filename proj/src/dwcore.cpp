#include "dwlab/dwcore.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dwlab/lapack.hpp"

namespace dwlab::dwcore {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kExtremaGrid = 10000;

double coeff(const std::vector<double>& c, int k) {
  return (k >= 1 && k <= static_cast<int>(c.size())) ? c[k - 1] : 0.0;
}

double second_derivative(const DampingProfile& a, double x) {
  double s = 0.0;
  for (int k = 1; k <= a.degree(); ++k) {
    const double kk = static_cast<double>(k) * k;
    s -= kk * (coeff(a.cosine_coeffs, k) * std::cos(k * x) +
               coeff(a.sine_coeffs, k) * std::sin(k * x));
  }
  return s;
}

// Grid scan plus Newton on a'(x) = 0 from the best grid point; sign = +1
// finds the maximum, -1 the minimum.
double extreme_value(const DampingProfile& a, double sign) {
  if (a.degree() == 0) return a.mean;
  double best_x = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kExtremaGrid; ++i) {
    const double x = kTwoPi * i / kExtremaGrid;
    const double v = sign * a(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double x = best_x;
  for (int it = 0; it < 50; ++it) {
    const double d2 = second_derivative(a, x);
    if (d2 == 0.0) break;
    const double step = a.derivative(x) / d2;
    x -= step;
    if (std::abs(step) < 1e-15) break;
  }
  // Newton can only improve on the grid value near a nondegenerate extremum;
  // keep the better of the two.
  return sign * std::max(best, sign * a(x));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void sort_spectrum(std::vector<cplx>& v) {
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

}  // namespace

// -- DampingProfile ----------------------------------------------------------

DampingProfile DampingProfile::constant(double a0) {
  DampingProfile p;
  p.mean = a0;
  return p;
}

DampingProfile DampingProfile::twisted(double c) {
  DampingProfile p;
  p.twist = c;
  return p;
}

double DampingProfile::operator()(double x) const {
  double s = mean;
  for (int k = 1; k <= degree(); ++k)
    s += coeff(cosine_coeffs, k) * std::cos(k * x) + coeff(sine_coeffs, k) * std::sin(k * x);
  return s;
}

double DampingProfile::derivative(double x) const {
  double s = 0.0;
  for (int k = 1; k <= degree(); ++k)
    s += k * (-coeff(cosine_coeffs, k) * std::sin(k * x) +
              coeff(sine_coeffs, k) * std::cos(k * x));
  return s;
}

int DampingProfile::degree() const {
  int d = 0;
  for (int k = 1; k <= static_cast<int>(cosine_coeffs.size()); ++k)
    if (cosine_coeffs[k - 1] != 0.0) d = std::max(d, k);
  for (int k = 1; k <= static_cast<int>(sine_coeffs.size()); ++k)
    if (sine_coeffs[k - 1] != 0.0) d = std::max(d, k);
  return d;
}

bool DampingProfile::has_damping() const { return mean != 0.0 || degree() > 0; }

cplx DampingProfile::fourier_coeff(int k) const {
  if (k == 0) return {mean, 0.0};
  const int ak = std::abs(k);
  const double c = coeff(cosine_coeffs, ak);
  const double s = coeff(sine_coeffs, ak);
  // cos kx = (e^{ikx} + e^{-ikx})/2, sin kx = (e^{ikx} - e^{-ikx})/(2i)
  return k > 0 ? cplx(c / 2.0, -s / 2.0) : cplx(c / 2.0, s / 2.0);
}

double DampingProfile::min_value() const { return extreme_value(*this, -1.0); }
double DampingProfile::max_value() const { return extreme_value(*this, 1.0); }

std::uint64_t DampingProfile::hash() const { return fnv1a(to_json().dump()); }

nlohmann::json DampingProfile::to_json() const {
  nlohmann::json j;
  j["mean"] = mean;
  j["cos"] = cosine_coeffs;
  j["sin"] = sine_coeffs;
  j["twist"] = twist;
  return j;
}

DampingProfile DampingProfile::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("damping profile: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "mean" && key != "cos" && key != "sin" && key != "twist")
      throw DomainError("damping profile: unknown field '" + key + "'");
  }
  DampingProfile p;
  p.mean = j.value("mean", 0.0);
  p.cosine_coeffs = j.value("cos", std::vector<double>{});
  p.sine_coeffs = j.value("sin", std::vector<double>{});
  p.twist = j.value("twist", 0.0);
  return p;
}

// -- pencil ------------------------------------------------------------------

Eigen::MatrixXcd QuadraticPencil::stiffness() const {
  Eigen::MatrixXcd s = laplacian;
  s.diagonal() += twist_term;
  return s;
}

QuadraticPencil assemble_pencil(const DampingProfile& profile, int K) {
  if (K < 1) throw DomainError("assemble_pencil: K must be >= 1");
  if (profile.degree() > K) {
    throw DomainError("assemble_pencil: profile degree " + std::to_string(profile.degree()) +
                      " exceeds K = " + std::to_string(K) +
                      "; the truncated convolution would alias");
  }
  const int N = 2 * K + 1;
  QuadraticPencil pencil;
  pencil.K = K;
  pencil.laplacian = Eigen::MatrixXcd::Zero(N, N);
  pencil.damping_op = Eigen::MatrixXcd::Zero(N, N);
  pencil.twist_term = Eigen::VectorXcd::Zero(N);
  const int deg = profile.degree();
  const double c = profile.twist;
  for (int i = 0; i < N; ++i) {
    const double n = QuadraticPencil::mode_of(i, K);
    pencil.laplacian(i, i) = n * n;
    pencil.twist_term(i) = cplx(-c * c, 2.0 * c * n);
    for (int j = std::max(0, i - deg); j <= std::min(N - 1, i + deg); ++j)
      pencil.damping_op(i, j) = profile.fourier_coeff(i - j);
  }
  return pencil;
}

Eigen::MatrixXcd linearize_pencil(const QuadraticPencil& pencil) {
  const int N = pencil.dimension();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
  M.topRightCorner(N, N).setIdentity();
  M.bottomLeftCorner(N, N) = pencil.stiffness();
  M.bottomRightCorner(N, N) = cplx(0.0, 2.0) * pencil.damping_op;
  return M;
}

Eigen::MatrixXcd linearize_pencil_balanced(const QuadraticPencil& pencil) {
  const int N = pencil.dimension();
  const Eigen::MatrixXcd L = pencil.stiffness();
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j && L(i, j) != cplx(0.0))
        throw DomainError("linearize_pencil_balanced: stiffness must be diagonal");
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
  for (int i = 0; i < N; ++i) {
    const cplx d = std::sqrt(L(i, i));
    M(i, N + i) = d;
    M(N + i, i) = d;
  }
  M.bottomRightCorner(N, N) = cplx(0.0, 2.0) * pencil.damping_op;
  return M;
}

ComplexSpectrum solve_spectrum(const Eigen::MatrixXcd& matrix, const SolveOptions& opts) {
  if (matrix.rows() != matrix.cols()) throw DomainError("solve_spectrum: matrix must be square");
  const auto eig = lapack::eigen_decompose(matrix, opts.compute_residuals);
  ComplexSpectrum out;
  out.values = eig.values;
  if (opts.compute_residuals) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < matrix.rows(); ++k) {
      const Eigen::VectorXcd v = eig.vectors.col(k);
      const double r = (matrix * v - eig.values[k] * v).norm() / v.norm();
      worst = std::max(worst, r);
    }
    out.max_residual = worst;
    if (!(worst <= opts.residual_tol)) {
      std::ostringstream msg;
      msg << "solve_spectrum: eigenpair residual " << worst << " exceeds tolerance "
          << opts.residual_tol << " (n = " << matrix.rows() << ")";
      throw ConvergenceError(msg.str());
    }
  }
  for (const cplx& v : out.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw ConvergenceError("solve_spectrum: non-finite eigenvalue");
  sort_spectrum(out.values);
  return out;
}

ComplexSpectrum damped_wave_spectrum(const DampingProfile& profile, int K,
                                     const SolveOptions& opts) {
  const QuadraticPencil pencil = assemble_pencil(profile, K);
  ComplexSpectrum s = solve_spectrum(linearize_pencil_balanced(pencil), opts);
  s.kind = SpectrumKind::WaveTau;
  s.K = K;
  s.profile_hash = profile.hash();
  return s;
}

PencilEigenpairs pencil_eigenpairs(const QuadraticPencil& pencil) {
  const Eigen::MatrixXcd M = linearize_pencil(pencil);
  const auto eig = lapack::eigen_decompose(M, true);
  const int N = pencil.dimension();
  PencilEigenpairs out;
  out.values = eig.values;
  out.modes = eig.vectors.topRows(N);
  return out;
}

double rayleigh_defect(const QuadraticPencil& pencil, cplx tau, const Eigen::VectorXcd& u) {
  const double uu = u.squaredNorm();
  const cplx lu = u.dot(pencil.stiffness() * u);  // dot conjugates the left side
  const cplx au = u.dot(pencil.damping_op * u);
  const cplx r = lu - tau * tau * uu + cplx(0.0, 2.0) * tau * au;
  return std::abs(r) / (uu * (1.0 + std::norm(tau)));
}

// -- closed forms ------------------------------------------------------------

ComplexSpectrum constant_damping_reference(double a0, int nmax) {
  ComplexSpectrum s;
  s.kind = SpectrumKind::WaveTau;
  s.K = nmax;
  s.profile_hash = DampingProfile::constant(a0).hash();
  for (int n = -nmax; n <= nmax; ++n) {
    const cplx root = std::sqrt(cplx(static_cast<double>(n) * n - a0 * a0, 0.0));
    s.values.push_back(cplx(0.0, a0) + root);
    s.values.push_back(cplx(0.0, a0) - root);
  }
  sort_spectrum(s.values);
  return s;
}

ComplexSpectrum twisted_circle_reference(double c, int nmax) {
  ComplexSpectrum s;
  s.kind = SpectrumKind::SpectralR;
  s.K = nmax;
  s.profile_hash = DampingProfile::twisted(c).hash();
  for (int n = -nmax; n <= nmax; ++n) {
    const cplx w(n, c);
    s.values.push_back(w * w);
  }
  sort_spectrum(s.values);
  return s;
}

// -- semiclassical -----------------------------------------------------------

std::vector<SemiclassicalPoint> SemiclassicalSpectrum::near_half(double c) const {
  std::vector<SemiclassicalPoint> out;
  for (const auto& p : points)
    if (std::abs(p.z.real() - 0.5) <= c * hbar) out.push_back(p);
  return out;
}

SemiclassicalSpectrum to_semiclassical(const ComplexSpectrum& spectrum, double hbar) {
  if (!(hbar > 0.0)) throw DomainError("to_semiclassical: hbar must be positive");
  SemiclassicalSpectrum out;
  out.hbar = hbar;
  out.points.reserve(spectrum.size());
  for (const cplx& tau : spectrum.values) {
    const cplx lam = hbar * tau;
    const cplx z = lam * lam / 2.0;
    out.points.push_back({z, z.imag() / hbar});
  }
  return out;
}

WeylCount weyl_window_count(const ComplexSpectrum& spectrum, double lambda) {
  if (spectrum.kind != SpectrumKind::WaveTau)
    throw DomainError("weyl_window_count: spectrum must be of kind wave-tau");
  constexpr double kZeroTol = 1e-9;
  WeylCount out;
  for (const cplx& t : spectrum.values)
    if (t.real() >= -kZeroTol && t.real() <= lambda) ++out.count;
  out.predicted = 2.0 * lambda;  // (lambda / 2 pi)^1 * |{|xi| < 1}| * 2 pi
  out.beyond_trust_horizon = lambda > spectrum.K / 2.0;
  return out;
}

LebeauQuantities lebeau_quantities(const ComplexSpectrum& spectrum,
                                   const DampingProfile& profile) {
  if (profile.twist != 0.0) throw DomainError("lebeau_quantities: twist must be zero");
  if (profile.min_value() < -1e-12)
    throw DomainError("lebeau_quantities: damping must be nonnegative");
  const double horizon = spectrum.K / 2.0;
  double d0 = std::numeric_limits<double>::infinity();
  for (const cplx& t : spectrum.values) {
    if (std::abs(t) <= 1e-8 || std::abs(t.real()) > horizon) continue;
    d0 = std::min(d0, t.imag());
  }
  if (!std::isfinite(d0)) throw DomainError("lebeau_quantities: no eigenvalues in the trusted window");
  LebeauQuantities q;
  q.d0 = d0;
  // Every unit-speed geodesic of the circle equidistributes, so the Birkhoff
  // averages of a converge uniformly to its mean.
  q.c_inf = profile.average();
  q.rho_pred = 2.0 * std::min(q.d0, q.c_inf);
  return q;
}

double reflection_asymmetry(const ComplexSpectrum& spectrum) {
  double worst = 0.0;
  for (const cplx& t : spectrum.values) {
    const cplx r = -std::conj(t);
    double best = std::numeric_limits<double>::infinity();
    // values are sorted by real part: search the neighbourhood of Re r
    auto it = std::lower_bound(spectrum.values.begin(), spectrum.values.end(), r.real() - 1e-6,
                               [](cplx a, double x) { return a.real() < x; });
    for (; it != spectrum.values.end() && it->real() <= r.real() + 1e-6; ++it)
      best = std::min(best, std::abs(*it - r));
    if (!std::isfinite(best)) {
      for (const cplx& s : spectrum.values) best = std::min(best, std::abs(s - r));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

// -- serialization -----------------------------------------------------------

std::string to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::WaveTau: return "wave-tau";
    case SpectrumKind::SpectralR: return "spectral-r";
    case SpectrumKind::SemiclassicalZ: return "semiclassical-z";
  }
  return "unknown";
}

SpectrumKind spectrum_kind_from_string(const std::string& s) {
  if (s == "wave-tau") return SpectrumKind::WaveTau;
  if (s == "spectral-r") return SpectrumKind::SpectralR;
  if (s == "semiclassical-z") return SpectrumKind::SemiclassicalZ;
  throw DomainError("unknown spectrum kind '" + s + "'");
}

std::string spectrum_to_csv(const ComplexSpectrum& spectrum) {
  std::ostringstream os;
  os << "re,im,kind,hbar,K,profile_hash\n" << std::setprecision(17);
  const std::string kind = to_string(spectrum.kind);
  for (const cplx& v : spectrum.values) {
    os << v.real() << ',' << v.imag() << ',' << kind << ',';
    if (spectrum.hbar) os << *spectrum.hbar;
    os << ',' << spectrum.K << ',' << spectrum.profile_hash << '\n';
  }
  return os.str();
}

ComplexSpectrum spectrum_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "re,im,kind,hbar,K,profile_hash")
    throw DomainError("spectrum csv: bad header");
  ComplexSpectrum s;
  int lineno = 1;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw DomainError("spectrum csv: malformed line " + std::to_string(lineno));
    try {
      s.values.emplace_back(std::stod(f[0]), std::stod(f[1]));
      if (first) {
        s.kind = spectrum_kind_from_string(f[2]);
        if (!f[3].empty()) s.hbar = std::stod(f[3]);
        s.K = std::stoi(f[4]);
        s.profile_hash = std::stoull(f[5]);
        first = false;
      }
    } catch (const std::logic_error&) {
      throw DomainError("spectrum csv: unparsable value on line " + std::to_string(lineno));
    }
  }
  return s;
}

}  // namespace dwlab::dwcore
