#include "dwlab/flowavg.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace dwlab::flowavg {

namespace {

constexpr double kMaxFlowTime = 600.0;

// Composite Simpson on [a, b] with at most `step` spacing and an even panel
// count. Returns 0 for an empty interval.
template <class F>
double simpson(F&& f, double a, double b, double step) {
  if (a == b) return 0.0;
  long n = static_cast<long>(std::ceil(std::abs(b - a) / step));
  if (n < 2) n = 2;
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (long i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

void check_window(double T, double step) {
  if (!(T > 0.0)) throw DomainError("T must be positive");
  if (!(step > 0.0)) throw DomainError("quadrature step must be positive");
}

Mat2 flow_matrix(const Mat2& g, double t) {
  Mat2 out = g;
  out.col(0) *= std::exp(t / 2.0);
  out.col(1) *= std::exp(-t / 2.0);
  return out;
}

double along(const Observable& q, const FlowPoint& p, double s) {
  return q.eval(flow_matrix(p.g, s));
}

}  // namespace

FlowPoint FlowPoint::from_matrix(const Mat2& m) {
  const double d = m.determinant();
  if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("FlowPoint: determinant must be positive");
  FlowPoint p;
  p.g = m / std::sqrt(d);
  return p;
}

FlowPoint geodesic_flow(const FlowPoint& p, double t) {
  if (!std::isfinite(t) || std::abs(t) > kMaxFlowTime)
    throw DomainError("geodesic_flow: |t| must be finite and at most 600");
  FlowPoint out;
  out.g = flow_matrix(p.g, t);
  const double d = out.g.determinant();
  if (std::abs(d - 1.0) > 1e-15) out.g /= std::sqrt(d);
  return out;
}

Observable constant_observable(double c) {
  return {[c](const Mat2&) { return c; }, "constant"};
}

Observable test_observable(int which) {
  switch (which) {
    case 0:
      return {[](const Mat2& g) {
                const double a = g(0, 0), b = g(0, 1);
                return a * a / (1.0 + a * a + b * b);
              },
              "g11^2/(1+g11^2+g12^2)"};
    case 1:
      return {[](const Mat2& g) {
                return (g(0, 0) * g(1, 1) + g(0, 1) * g(1, 0)) / g.squaredNorm();
              },
              "(g11 g22+g12 g21)/|g|^2"};
    case 2:
      return {[](const Mat2& g) {
                return std::sin(g(0, 0) * g(1, 0) / (1.0 + g(1, 0) * g(1, 0)));
              },
              "sin(g11 g21/(1+g21^2))"};
    default:
      throw DomainError("test_observable: index must be 0, 1 or 2");
  }
}

Observable periodize(const Observable& q, const std::vector<Mat2>& elements) {
  if (elements.empty()) throw DomainError("periodize: need at least one element");
  return {[q, elements](const Mat2& g) {
            double s = 0.0;
            for (const Mat2& h : elements) s += q.eval(h * g);
            return s;
          },
          "periodized " + q.name};
}

double birkhoff_average(const Observable& q, const FlowPoint& p, double T, double step) {
  check_window(T, step);
  if (step > T / 100.0) throw DomainError("birkhoff_average: step must be <= T/100");
  auto f = [&](double s) { return along(q, p, s); };
  return (simpson(f, -T / 2.0, 0.0, step) + simpson(f, 0.0, T / 2.0, step)) / T;
}

double averaging_corrector(const Observable& q, const FlowPoint& p, double T, double step) {
  check_window(T, step);
  const double right = simpson([&](double s) { return (2.0 * s / T - 1.0) * along(q, p, s); },
                               0.0, T / 2.0, step);
  const double left = simpson([&](double s) { return (2.0 * s / T + 1.0) * along(q, p, s); },
                              -T / 2.0, 0.0, step);
  return 0.5 * (right + left);
}

double cohomology_residual(const Observable& q, const FlowPoint& p, double T, double fd_step,
                           double step) {
  if (!(fd_step >= 1e-6 && fd_step <= 1e-3))
    throw DomainError("cohomology_residual: fd_step must lie in [1e-6, 1e-3]");
  const double gp = averaging_corrector(q, geodesic_flow(p, fd_step), T, step);
  const double gm = averaging_corrector(q, geodesic_flow(p, -fd_step), T, step);
  const double deriv = (gp - gm) / (2.0 * fd_step);
  return std::abs(deriv - (q(p) - birkhoff_average(q, p, T, std::min(step, T / 100.0))));
}

double time_change(const Observable& phi, const FlowPoint& p, double t, double d_minus_1,
                   double step) {
  if (!(d_minus_1 > 0.0)) throw DomainError("time_change: d_minus_1 must be positive");
  if (!(step > 0.0)) throw DomainError("time_change: step must be positive");
  if (t == 0.0) return 0.0;
  const double dir = t > 0.0 ? 1.0 : -1.0;
  const double target = d_minus_1 * std::abs(t);
  auto f = [&](double s) {
    const double v = along(phi, p, s);
    if (!(v > 0.0)) {
      std::ostringstream msg;
      msg << "time_change: phi = " << v << " is not positive at s = " << s;
      throw DomainError(msg.str());
    }
    return v;
  };
  // march Simpson panels of width 2*step until the integral passes the target
  const double panel = 2.0 * step;
  double a = 0.0, acc = 0.0;
  double fa = f(0.0);
  for (;;) {
    if (std::abs(a) > kMaxFlowTime) throw DomainError("time_change: flow time exceeds 600");
    const double b = a + dir * panel;
    const double fm = f(a + dir * step), fb = f(b);
    const double piece = panel * (fa + 4.0 * fm + fb) / 6.0;
    if (acc + piece >= target) break;
    acc += piece;
    a = b;
    fa = fb;
  }
  // Newton inside the last panel on x = |tau - a|
  double x = (target - acc) / fa;
  for (int it = 0; it < 50; ++it) {
    const double integral = dir * simpson(f, a, a + dir * x, step / 8.0);
    const double r = acc + integral - target;
    const double dx = r / f(a + dir * x);
    x -= dx;
    if (std::abs(dx) < 1e-15 * (1.0 + std::abs(a))) break;
  }
  return a + dir * x;
}

double averaging_corrector_variable(const Observable& q, const Observable& phi,
                                    const FlowPoint& p, double T, double d_minus_1,
                                    double step) {
  check_window(T, step);
  const double tp = time_change(phi, p, T / 2.0, d_minus_1, step);
  const double tm = time_change(phi, p, -T / 2.0, d_minus_1, step);
  const double u = -tm;
  const double right =
      simpson([&](double s) { return (s / tp - 1.0) * along(q, p, s); }, 0.0, tp, step);
  const double left =
      simpson([&](double s) { return (s / u + 1.0) * along(q, p, s); }, tm, 0.0, step);
  return 0.5 * (right + left);
}

VariableResidual variable_cohomology_residual(const Observable& q, const Observable& phi,
                                              const FlowPoint& p, double T, double d_minus_1,
                                              double fd_step, double step) {
  if (!(fd_step >= 1e-6 && fd_step <= 1e-3))
    throw DomainError("variable_cohomology_residual: fd_step must lie in [1e-6, 1e-3]");
  VariableResidual r;
  r.tau_plus = time_change(phi, p, T / 2.0, d_minus_1, step);
  r.tau_minus = time_change(phi, p, -T / 2.0, d_minus_1, step);
  const double gp =
      averaging_corrector_variable(q, phi, geodesic_flow(p, fd_step), T, d_minus_1, step);
  const double gm =
      averaging_corrector_variable(q, phi, geodesic_flow(p, -fd_step), T, d_minus_1, step);
  r.derivative = (gp - gm) / (2.0 * fd_step);

  auto F = [&](double s) { return along(q, p, s); };
  const double tp = r.tau_plus, u = -r.tau_minus;
  const double int_right = simpson(F, 0.0, tp, step);
  const double int_left = simpson(F, -u, 0.0, step);
  r.window_average = (int_right + int_left) / (tp + u);
  const double q0 = q(p);
  r.residual = std::abs(r.derivative - (q0 - r.window_average));

  // half-window weighted average and the terms from the moving endpoints
  const double weighted = int_right / (2.0 * tp) + int_left / (2.0 * u);
  const double phi0 = phi(p);
  const double dtp = phi0 / along(phi, p, tp) - 1.0;
  const double dtm = phi0 / along(phi, p, -u) - 1.0;
  const double mom_right = simpson([&](double s) { return s * F(s); }, 0.0, tp, step);
  const double mom_left = simpson([&](double s) { return s * F(s); }, -u, 0.0, step);
  const double moving = -0.5 * mom_right / (tp * tp) * dtp + 0.5 * mom_left / (u * u) * dtm;
  r.correction = (r.window_average - weighted) + moving;
  r.exact_residual = std::abs(r.derivative - (q0 - r.window_average + r.correction));
  return r;
}

std::string trajectory_csv(const Observable& q, const FlowPoint& p, double t0, double t1, int n) {
  if (n < 1) throw DomainError("trajectory_csv: n must be >= 1");
  std::ostringstream os;
  os << "t,g11,g12,g21,g22,q_value\n" << std::setprecision(17);
  for (int i = 0; i <= n; ++i) {
    const double t = t0 + (t1 - t0) * i / n;
    const FlowPoint x = geodesic_flow(p, t);
    os << t << ',' << x.g(0, 0) << ',' << x.g(0, 1) << ',' << x.g(1, 0) << ',' << x.g(1, 1)
       << ',' << q(x) << '\n';
  }
  return os.str();
}

}  // namespace dwlab::flowavg
