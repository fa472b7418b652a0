#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/// Recursive adaptive Simpson with Richardson correction.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 50) {
  auto simpson = [&](double lo, double flo, double hi, double fhi, double& mid, double& fmid) {
    mid = 0.5 * (lo + hi);
    fmid = f(mid);
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  };
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double flo, double hi, double fhi, double whole, double mid, double fmid,
          int d) -> double {
    double lm, flm, rm, frm;
    const double left = simpson(lo, flo, mid, fmid, lm, flm);
    const double right = simpson(mid, fmid, hi, fhi, rm, frm);
    const double delta = left + right - whole;
    if (d <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return rec(lo, flo, mid, fmid, left, lm, flm, d - 1) +
           rec(mid, fmid, hi, fhi, right, rm, frm, d - 1);
  };
  const double fa = f(a), fb = f(b);
  double m, fm;
  const double whole = simpson(a, fa, b, fb, m, fm);
  return rec(a, fa, b, fb, whole, m, fm, depth);
}

/// Adaptive Simpson over [a, b] split into n equal panels.
inline double panel_simpson(const std::function<double(double)>& f, double a, double b, int n,
                            double tol) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += adaptive_simpson(f, a + (b - a) * i / n, a + (b - a) * (i + 1) / n, tol / n);
  return s;
}

/// log P(Bin(n, 1/2) >= k).
inline double log_binomial_tail_half(int n, int k) {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (int j = k; j <= n; ++j) {
    const double t = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) -
                     n * std::log(2.0);
    terms.push_back(t);
    mx = std::max(mx, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

inline double binary_entropy(double a) {
  if (a <= 0.0 || a >= 1.0) return 0.0;
  return -a * std::log(a) - (1.0 - a) * std::log(1.0 - a);
}

/// Largest entropy rate among two-state Markov measures with P(1) = alpha:
/// with a = P(0 -> 1), b = P(1 -> 0) and a = alpha b / (1 - alpha), scans b
/// then refines by golden section.
inline double markov2_max_entropy(double alpha) {
  auto rate = [alpha](double b) {
    const double a = alpha * b / (1.0 - alpha);
    if (a > 1.0 || b > 1.0 || b <= 0.0) return -1.0;
    return (1.0 - alpha) * binary_entropy(a) + alpha * binary_entropy(b);
  };
  const double bmax = std::min(1.0, (1.0 - alpha) / alpha);
  double best_b = bmax / 2.0, best = rate(best_b);
  for (int i = 1; i < 10000; ++i) {
    const double b = bmax * i / 10000.0;
    if (rate(b) > best) {
      best = rate(b);
      best_b = b;
    }
  }
  double lo = std::max(1e-12, best_b - bmax / 10000.0), hi = std::min(bmax, best_b + bmax / 10000.0);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (rate(x1) < rate(x2)) lo = x1; else hi = x2;
  }
  return std::max(best, rate(0.5 * (lo + hi)));
}

/// Golden-mean shift (1 -> 1 forbidden): the chain with P(1) = alpha is
/// unique, P(0 -> 1) = alpha / (1 - alpha) and P(1 -> 0) = 1.
inline double golden_mean_entropy(double alpha) {
  if (alpha < 0.0 || alpha > 0.5) return -std::numeric_limits<double>::infinity();
  return (1.0 - alpha) * binary_entropy(alpha / (1.0 - alpha));
}

struct WeightedEdge {
  int from, to;
  double w;
};

/// (min, max) mean weight over all simple cycles, by depth-first enumeration
/// of cycles whose least vertex is the start.
inline std::pair<double, double> simple_cycle_mean_extremes(int n, const std::vector<WeightedEdge>& edges) {
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& e : edges) adj[e.from].push_back({e.to, e.w});
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<bool> on(n, false);
  std::function<void(int, int, double, int)> dfs = [&](int start, int v, double sum, int len) {
    for (const auto& [u, w] : adj[v]) {
      if (u == start) {
        const double mean = (sum + w) / (len + 1);
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
      } else if (u > start && !on[u]) {
        on[u] = true;
        dfs(start, u, sum + w, len + 1);
        on[u] = false;
      }
    }
  };
  for (int s = 0; s < n; ++s) {
    on[s] = true;
    dfs(s, s, 0.0, 0);
    on[s] = false;
  }
  return {lo, hi};
}

/// Closed walks of each length up to max_len in a graph with per-edge q,
/// reported as (length, sum of q) per periodic point.
inline std::vector<std::pair<int, double>> periodic_points(int n, const std::vector<WeightedEdge>& edges,
                                                           int max_len) {
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& e : edges) adj[e.from].push_back({e.to, e.w});
  std::vector<std::pair<int, double>> out;
  std::function<void(int, int, double, int, int)> walk = [&](int start, int v, double sum, int len,
                                                             int target) {
    if (len == target) {
      if (v == start) out.push_back({len, sum});
      return;
    }
    for (const auto& [u, w] : adj[v]) walk(start, u, sum + w, len + 1, target);
  };
  for (int L = 1; L <= max_len; ++L)
    for (int s = 0; s < n; ++s) walk(s, s, 0.0, 0, L);
  return out;
}

/// Roots of sum c_k z^k from the companion matrix.
inline std::vector<cplx> polynomial_roots(const std::vector<cplx>& c) {
  const int d = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + d);
  return r;
}

/// Smallest R >= M on the grid M + k*step with cos(R l) >= 1/2 for all l.
inline double dense_grid_r(const std::vector<double>& lengths, double M, double step, double R_max) {
  for (long k = 0;; ++k) {
    const double R = M + k * step;
    if (R > R_max) return std::numeric_limits<double>::quiet_NaN();
    bool ok = true;
    for (double l : lengths)
      if (std::cos(R * l) < 0.5) {
        ok = false;
        break;
      }
    if (ok) return R;
  }
}

/// Local minima of |f| on a grid, polished by Newton with a central
/// difference derivative; duplicates within 1e-6 are merged.
inline std::vector<cplx> grid_roots(const std::function<cplx(cplx)>& f, double re0, double re1,
                                    double im0, double im1, double h) {
  const int nx = static_cast<int>((re1 - re0) / h) + 1, ny = static_cast<int>((im1 - im0) / h) + 1;
  std::vector<double> mod(static_cast<std::size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) mod[i * ny + j] = std::abs(f(cplx(re0 + i * h, im0 + j * h)));
  std::vector<cplx> roots;
  for (int i = 1; i + 1 < nx; ++i)
    for (int j = 1; j + 1 < ny; ++j) {
      const double v = mod[i * ny + j];
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          if ((di || dj) && mod[(i + di) * ny + (j + dj)] < v) {
            is_min = false;
            break;
          }
      if (!is_min) continue;
      cplx z(re0 + i * h, im0 + j * h);
      for (int it = 0; it < 60; ++it) {
        const double e = 1e-6;
        const cplx d = (f(z + e) - f(z - e)) / (2.0 * e);
        const cplx step = f(z) / d;
        z -= step;
        if (std::abs(step) < 1e-14) break;
      }
      if (std::none_of(roots.begin(), roots.end(), [&](cplx r) { return std::abs(r - z) < 1e-6; }))
        roots.push_back(z);
    }
  return roots;
}

}  // namespace oracle
