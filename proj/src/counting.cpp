#include "dwlab/counting.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace dwlab::counting {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cplx checked(const HolomorphicSampler& f, cplx z) {
  const cplx v = f(z);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    std::ostringstream msg;
    msg << "sampler is not finite at z = " << z;
    throw DomainError(msg.str());
  }
  return v;
}

struct ContourWalk {
  const HolomorphicSampler& f;
  const ComplexWindow& w;
  double floor = 0.0;

  // phase change of f along boundary(s0) -> boundary(s1), resolved by bisection
  double phase(double s0, cplx f0, double s1, cplx f1, int depth) const {
    const double d = std::arg(f1 / f0);
    if (std::abs(d) <= std::numbers::pi / 4.0) return d;
    if (depth >= 40) {
      std::ostringstream msg;
      msg << "argument_principle_zeros: zero suspected near the contour at z = "
          << w.boundary(0.5 * (s0 + s1));
      throw DomainError(msg.str());
    }
    const double sm = 0.5 * (s0 + s1);
    const cplx fm = checked(f, w.boundary(sm));
    if (std::abs(fm) < floor) {
      std::ostringstream msg;
      msg << "argument_principle_zeros: |f| below floor near z = " << w.boundary(sm);
      throw DomainError(msg.str());
    }
    return phase(s0, f0, sm, fm, depth + 1) + phase(sm, fm, s1, f1, depth + 1);
  }
};

double winding(const HolomorphicSampler& f, const ComplexWindow& w, int n) {
  std::vector<cplx> vals(static_cast<std::size_t>(n));
  double fmax = 0.0;
  for (int k = 0; k < n; ++k) {
    vals[k] = checked(f, w.boundary(static_cast<double>(k) / n));
    fmax = std::max(fmax, std::abs(vals[k]));
  }
  ContourWalk walk{f, w, 1e-10 * fmax};
  for (int k = 0; k < n; ++k) {
    if (std::abs(vals[k]) < walk.floor || fmax == 0.0) {
      std::ostringstream msg;
      msg << "argument_principle_zeros: |f| below floor at z = "
          << w.boundary(static_cast<double>(k) / n);
      throw DomainError(msg.str());
    }
  }
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s0 = static_cast<double>(k) / n, s1 = static_cast<double>(k + 1) / n;
    total += walk.phase(s0, vals[k], s1, vals[(k + 1) % n], 0);
  }
  return total / kTwoPi;
}

double circle_modulus(const HolomorphicSampler& f, cplx z0, double R, double theta) {
  return std::abs(checked(f, z0 + std::polar(R, theta)));
}

double golden_max(const HolomorphicSampler& f, cplx z0, double R, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = circle_modulus(f, z0, R, x1), f2 = circle_modulus(f, z0, R, x2);
  for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = circle_modulus(f, z0, R, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = circle_modulus(f, z0, R, x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

ComplexWindow ComplexWindow::rectangle(cplx center, double half_width, double half_height) {
  ComplexWindow w;
  w.shape = Shape::Rectangle;
  w.center = center;
  w.half_width = half_width;
  w.half_height = half_height;
  w.validate();
  return w;
}

ComplexWindow ComplexWindow::disk(cplx center, double radius) {
  ComplexWindow w;
  w.shape = Shape::Disk;
  w.center = center;
  w.radius = radius;
  w.validate();
  return w;
}

void ComplexWindow::validate() const {
  if (shape == Shape::Rectangle) {
    if (!(half_width > 0.0) || !(half_height > 0.0))
      throw DomainError("ComplexWindow: rectangle dimensions must be positive");
  } else if (!(radius > 0.0)) {
    throw DomainError("ComplexWindow: radius must be positive");
  }
}

bool ComplexWindow::contains(cplx z) const {
  const cplx d = z - center;
  if (shape == Shape::Disk) return std::abs(d) <= radius;
  return std::abs(d.real()) <= half_width && std::abs(d.imag()) <= half_height;
}

cplx ComplexWindow::boundary(double s) const {
  s -= std::floor(s);
  if (shape == Shape::Disk) return center + std::polar(radius, kTwoPi * s);
  const double w = 2.0 * half_width, h = 2.0 * half_height;
  double t = s * 2.0 * (w + h);
  const cplx corner = center + cplx(-half_width, -half_height);
  if (t < w) return corner + cplx(t, 0.0);
  t -= w;
  if (t < h) return corner + cplx(w, t);
  t -= h;
  if (t < w) return corner + cplx(w - t, h);
  t -= w;
  return corner + cplx(0.0, h - t);
}

HolomorphicSampler polynomial_sampler(std::vector<cplx> coeffs) {
  if (coeffs.empty()) throw DomainError("polynomial_sampler: need at least one coefficient");
  HolomorphicSampler f;
  f.eval = [c = std::move(coeffs)](cplx z) {
    cplx v = c.back();
    for (std::size_t k = c.size() - 1; k-- > 0;) v = v * z + c[k];
    return v;
  };
  f.domain = ComplexWindow::disk({0.0, 0.0}, 1e300);
  return f;
}

HolomorphicSampler determinant_sampler(std::vector<Eigen::MatrixXcd> coeffs) {
  if (coeffs.empty()) throw DomainError("determinant_sampler: need at least one matrix");
  const auto n = coeffs.front().rows();
  for (const auto& m : coeffs)
    if (m.rows() != n || m.cols() != n)
      throw DomainError("determinant_sampler: matrices must be square of one size");
  HolomorphicSampler f;
  f.eval = [c = std::move(coeffs), n](cplx z) {
    Eigen::MatrixXcd m = c.back();
    for (std::size_t k = c.size() - 1; k-- > 0;) m = m * z + c[k];
    m += Eigen::MatrixXcd::Identity(n, n);
    return m.partialPivLu().determinant();
  };
  f.domain = ComplexWindow::disk({0.0, 0.0}, 1e300);
  return f;
}

int argument_principle_zeros(const HolomorphicSampler& f, const ComplexWindow& contour,
                             int n_points) {
  contour.validate();
  if (n_points < 8) throw DomainError("argument_principle_zeros: n_points must be >= 8");
  int n = n_points;
  for (int attempt = 0; attempt <= 4; ++attempt, n *= 2) {
    const double w = winding(f, contour, n);
    const double k = std::round(w);
    if (std::abs(w - k) <= 0.01) return static_cast<int>(k);
  }
  throw ConvergenceError("argument_principle_zeros: winding number is not near an integer");
}

double jensen_disk_bound(const HolomorphicSampler& f, cplx z0, double r, double R_big,
                         int n_boundary) {
  if (!(r > 0.0) || !(R_big > r)) throw DomainError("jensen_disk_bound: need 0 < r < R_big");
  if (n_boundary < 8) throw DomainError("jensen_disk_bound: n_boundary must be >= 8");
  const double f0 = std::abs(checked(f, z0));
  if (!(f0 >= 1e-300)) throw DomainError("jensen_disk_bound: |f(z0)| is below 1e-300");
  const int n = n_boundary;
  const double step = kTwoPi / n;
  std::vector<double> m(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) m[k] = circle_modulus(f, z0, R_big, k * step);
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    const double prev = m[(k + n - 1) % n], next = m[(k + 1) % n];
    best = std::max(best, m[k]);
    if (m[k] >= prev && m[k] >= next)
      best = std::max(best, golden_max(f, z0, R_big, (k - 1) * step, (k + 1) * step));
  }
  return (std::log(best) - std::log(f0)) / std::log(R_big / r);
}

double jensen_rectangle_bound(const HolomorphicSampler& f, const ComplexWindow& rect,
                              double ratio, int n_boundary) {
  rect.validate();
  if (rect.shape != ComplexWindow::Shape::Rectangle)
    throw DomainError("jensen_rectangle_bound: window must be a rectangle");
  if (!(ratio > 1.0)) throw DomainError("jensen_rectangle_bound: ratio must exceed 1");
  const double hw = rect.half_width / 2.0, hh = rect.half_height / 2.0;
  const double r = std::hypot(hw, hh);
  double total = 0.0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      total += jensen_disk_bound(f, rect.center + cplx(sx * hw, sy * hh), r, ratio * r, n_boundary);
  return total;
}

std::string to_string(Side side) { return side == Side::Above ? "above" : "below"; }

Side side_from_string(const std::string& s) {
  if (s == "above") return Side::Above;
  if (s == "below") return Side::Below;
  throw DomainError("unknown side '" + s + "' (expected above or below)");
}

long window_count(const dwcore::SemiclassicalSpectrum& spectrum, double hbar, double c,
                  double alpha, Side side) {
  if (!(hbar > 0.0) || !(c > 0.0)) throw DomainError("window_count: hbar and c must be positive");
  if (std::abs(spectrum.hbar - hbar) > 1e-12 * hbar)
    throw DomainError("window_count: spectrum hbar does not match the requested hbar");
  long n = 0;
  for (const auto& p : spectrum.points) {
    if (std::abs(p.z.real() - 0.5) > c * hbar) continue;
    const double v = p.z.imag() / hbar;
    if (side == Side::Above ? v >= alpha : v <= alpha) ++n;
  }
  return n;
}

ExponentFit deviation_exponent(const std::vector<LadderPoint>& ladder) {
  if (ladder.size() < 4) throw DomainError("deviation_exponent: need at least 4 ladder points");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const auto& p = ladder[i];
    if (!(p.hbar > 0.0 && p.hbar < 1.0))
      throw DomainError("deviation_exponent: hbar must lie in (0, 1)");
    if (p.count < 0.0 || !std::isfinite(p.count))
      throw DomainError("deviation_exponent: counts must be finite and nonnegative");
    if (i > 0 && ladder[i].hbar > ladder[i - 1].hbar / 2.0)
      throw DomainError("deviation_exponent: hbar must decrease by a factor >= 2 per step");
  }
  ExponentFit fit;
  for (const auto& p : ladder) {
    if (p.count == 0.0) {
      fit.slope = kNegInf;
      fit.intercept = kNegInf;
      return fit;
    }
  }
  const double n = static_cast<double>(ladder.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : ladder) {
    sx += std::abs(std::log(p.hbar));
    sy += std::log(p.count);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : ladder) {
    const double dx = std::abs(std::log(p.hbar)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.count) - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& p : ladder) {
    const double e = std::log(p.count) - fit.intercept - fit.slope * std::abs(std::log(p.hbar));
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

std::string count_csv(const std::vector<CountRow>& rows, const ExponentFit* fit) {
  std::ostringstream os;
  os << std::setprecision(17) << "hbar,c,alpha,side,count\n";
  for (const auto& r : rows)
    os << r.hbar << ',' << r.c << ',' << r.alpha << ',' << to_string(r.side) << ',' << r.count
       << '\n';
  if (fit) os << "# slope=" << fit->slope << ",residual=" << fit->residual << '\n';
  return os.str();
}

}  // namespace dwlab::counting
