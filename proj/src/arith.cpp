#include "dwlab/arith.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/gauss.hpp>

namespace dwlab::arith {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw DomainError("group arithmetic overflowed 64-bit coordinates");
  return static_cast<std::int64_t>(v);
}

bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

std::int64_t powmod(std::int64_t b, std::int64_t e, std::int64_t m) {
  i128 r = 1, x = ((b % m) + m) % m;
  while (e > 0) {
    if (e & 1) r = r * x % m;
    x = x * x % m;
    e >>= 1;
  }
  return static_cast<std::int64_t>(r);
}

std::int64_t isqrt_exact(i128 v) {
  if (v < 0) return -1;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(v)));
  while (static_cast<i128>(r) * r > v) --r;
  while (static_cast<i128>(r + 1) * (r + 1) <= v) ++r;
  return static_cast<i128>(r) * r == v ? r : -1;
}

template <class F>
double gk_integrate(F&& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13, &err);
}

// fixed 30-point rule, for pieces shorter than a quarter oscillation
template <class F>
double gauss_piece(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace

// -- group -------------------------------------------------------------------

void validate_group(std::int64_t A, std::int64_t p) {
  if (!is_prime(p) || p % 4 != 1) throw DomainError("Gamma(A,p): p must be a prime with p = 1 mod 4");
  if (A < 1) throw DomainError("Gamma(A,p): A must be >= 1");
  if (A % p == 0 || powmod(A, (p - 1) / 2, p) != p - 1)
    throw DomainError("Gamma(A,p): A must be a quadratic non-residue mod p");
}

std::int64_t norm_form_residual(const Quad& y, std::int64_t A, std::int64_t p) {
  const i128 v = static_cast<i128>(y[0]) * y[0] - static_cast<i128>(A) * y[1] * y[1] -
                 static_cast<i128>(p) * y[2] * y[2] + static_cast<i128>(A) * p * y[3] * y[3] - 1;
  return narrow(v);
}

GroupElement GroupElement::make(const Quad& y, std::int64_t A, std::int64_t p) {
  validate_group(A, p);
  if (norm_form_residual(y, A, p) != 0) throw DomainError("GroupElement: norm form is not 1");
  return {y, A, p};
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
  if (A != o.A || p != o.p) throw DomainError("GroupElement: mismatched groups");
  const auto& a = y;
  const auto& b = o.y;
  const i128 Ap = static_cast<i128>(A) * p;
  GroupElement r{{}, A, p};
  r.y[0] = narrow(static_cast<i128>(a[0]) * b[0] + static_cast<i128>(A) * a[1] * b[1] +
                  static_cast<i128>(p) * a[2] * b[2] - Ap * a[3] * b[3]);
  r.y[1] = narrow(static_cast<i128>(a[0]) * b[1] + static_cast<i128>(a[1]) * b[0] -
                  static_cast<i128>(p) * a[2] * b[3] + static_cast<i128>(p) * a[3] * b[2]);
  r.y[2] = narrow(static_cast<i128>(a[0]) * b[2] + static_cast<i128>(a[2]) * b[0] +
                  static_cast<i128>(A) * a[1] * b[3] - static_cast<i128>(A) * a[3] * b[1]);
  r.y[3] = narrow(static_cast<i128>(a[0]) * b[3] + static_cast<i128>(a[3]) * b[0] +
                  static_cast<i128>(a[1]) * b[2] - static_cast<i128>(a[2]) * b[1]);
  return r;
}

GroupElement GroupElement::inverse() const { return {{y[0], -y[1], -y[2], -y[3]}, A, p}; }

GroupElement GroupElement::pow(int k) const {
  if (k < 0) return inverse().pow(-k);
  GroupElement r{{1, 0, 0, 0}, A, p};
  for (int i = 0; i < k; ++i) r = r * *this;
  return r;
}

Eigen::Matrix2d GroupElement::matrix() const {
  const double sa = std::sqrt(static_cast<double>(A));
  const double sp = std::sqrt(static_cast<double>(p));
  const double sap = std::sqrt(static_cast<double>(A * p));
  Eigen::Matrix2d m;
  m << y[0] + y[1] * sa, y[2] * sp + y[3] * sap, y[2] * sp - y[3] * sap, y[0] - y[1] * sa;
  return m;
}

XmResult xm(std::int64_t m) {
  if (m <= 0) throw DomainError("xm: m must be >= 1");
  XmResult r;
  const double md = static_cast<double>(m);
  r.x = 2.0 * md * md - 1.0 + 2.0 * md * std::sqrt(md * md - 1.0);
  r.l = std::log(r.x);
  r.hyperbolic = m >= 2;
  return r;
}

std::int64_t chebyshev_t(int k, std::int64_t m) {
  if (k < 0) throw DomainError("chebyshev_t: k must be >= 0");
  i128 a = 1, b = m;
  if (k == 0) return 1;
  for (int i = 1; i < k; ++i) {
    const i128 c = 2 * static_cast<i128>(m) * b - a;
    a = b;
    b = c;
    if (b > (static_cast<i128>(1) << 62)) throw DomainError("chebyshev_t: overflow");
  }
  return static_cast<std::int64_t>(b);
}

std::vector<GroupElement> enumerate_trace(std::int64_t A, std::int64_t p, std::int64_t m,
                                          std::int64_t box) {
  validate_group(A, p);
  if (box < 1) throw DomainError("enumerate_trace: box must be >= 1");
  std::vector<GroupElement> out;
  const i128 Ap = static_cast<i128>(A) * p;
  for (std::int64_t y1 = -box; y1 <= box; ++y1)
    for (std::int64_t y2 = -box; y2 <= box; ++y2) {
      // A p y3^2 = 1 - m^2 + A y1^2 + p y2^2
      const i128 rhs = 1 - static_cast<i128>(m) * m + static_cast<i128>(A) * y1 * y1 +
                       static_cast<i128>(p) * y2 * y2;
      if (rhs < 0 || rhs % Ap != 0) continue;
      const std::int64_t y3 = isqrt_exact(rhs / Ap);
      if (y3 < 0 || y3 > box) continue;
      if (y3 == 0) {
        out.push_back({{m, y1, y2, 0}, A, p});
      } else {
        out.push_back({{m, y1, y2, -y3}, A, p});
        out.push_back({{m, y1, y2, y3}, A, p});
      }
    }
  return out;
}

std::vector<GroupElement> conjugator_ball(std::int64_t A, std::int64_t p, std::int64_t max_y0,
                                          std::int64_t box) {
  std::vector<GroupElement> out;
  for (std::int64_t m = 2; m <= max_y0; ++m) {
    const auto e = enumerate_trace(A, p, m, box);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;  // closed under inversion: the box is symmetric
}

ConjugacyPartition classify_conjugacy(const std::vector<GroupElement>& elements,
                                      const std::vector<GroupElement>& conjugators) {
  ConjugacyPartition part;
  const std::size_t n = elements.size();
  part.class_of.assign(n, -1);
  if (n == 0) return part;
  for (const auto& e : elements)
    if (e.y[0] != elements[0].y[0]) throw DomainError("classify_conjugacy: mixed traces");
  std::map<Quad, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(elements[i].y, i);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& g : conjugators) {
      GroupElement c;
      try {
        c = g * elements[i] * g.inverse();
      } catch (const DomainError&) {
        continue;  // conjugate far outside any box
      }
      const auto it = index.find(c.y);
      if (it == index.end()) continue;
      const std::size_t a = find(i), b = find(it->second);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  // label classes by their least member
  std::map<std::size_t, Quad> least;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    auto it = least.find(r);
    if (it == least.end() || elements[i].y < it->second) least[r] = elements[i].y;
  }
  std::vector<std::pair<Quad, std::size_t>> order;
  for (const auto& [root, q] : least) order.push_back({q, root});
  std::sort(order.begin(), order.end());
  std::map<std::size_t, int> label;
  for (std::size_t k = 0; k < order.size(); ++k) {
    label[order[k].second] = static_cast<int>(k);
    part.representatives.push_back({order[k].first, elements[0].A, elements[0].p});
  }
  for (std::size_t i = 0; i < n; ++i) part.class_of[i] = label[find(i)];
  return part;
}

std::string to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::ZeroForm: return "zero-form";
    case WeightMode::SyntheticHomomorphism: return "synthetic-homomorphism";
    case WeightMode::External: return "external";
  }
  return "unknown";
}

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "zero-form") return WeightMode::ZeroForm;
  if (s == "synthetic-homomorphism") return WeightMode::SyntheticHomomorphism;
  if (s == "external") return WeightMode::External;
  throw DomainError("unknown weight mode '" + s + "'");
}

double LengthEntry::mu() const {
  double s = 0.0;
  for (const auto& c : classes) s += std::exp(c.omega_integral) * c.primitive_length;
  return s;
}

const LengthEntry* WeightedLengthSpectrum::find(std::int64_t m) const {
  for (const auto& e : entries)
    if (e.m == m) return &e;
  return nullptr;
}

std::vector<std::pair<double, double>> WeightedLengthSpectrum::orbit_pairs() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& e : entries)
    for (const auto& c : e.classes) out.push_back({e.l, c.omega_integral});
  return out;
}

WeightedLengthSpectrum build_length_spectrum(std::int64_t A, std::int64_t p, std::int64_t m_max,
                                             std::int64_t box, WeightMode mode,
                                             const WeightParams& params, std::uint64_t seed,
                                             int threads, std::int64_t conjugator_max_y0) {
  validate_group(A, p);
  if (m_max < 2) throw DomainError("build_length_spectrum: m_max must be >= 2");
  if (mode == WeightMode::External && !params.external)
    throw DomainError("build_length_spectrum: external mode needs a weight function");
  if (mode == WeightMode::SyntheticHomomorphism &&
      !(params.stable_norm >= 0.0 && params.delta > 0.0 && params.delta < 1.0))
    throw DomainError("build_length_spectrum: need stable_norm >= 0 and 0 < delta < 1");

  const auto conjugators = conjugator_ball(A, p, conjugator_max_y0, box);
  const std::size_t count = static_cast<std::size_t>(m_max - 1);
  std::vector<std::vector<GroupElement>> elems(count);
  std::vector<ConjugacyPartition> parts(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::int64_t m = static_cast<std::int64_t>(i) + 2;
    elems[i] = enumerate_trace(A, p, m, box);
    parts[i] = classify_conjugacy(elems[i], conjugators);
  });

  WeightedLengthSpectrum wls;
  wls.A = A;
  wls.p = p;
  wls.box = box;
  wls.seed = seed;
  wls.weight_mode = mode;
  // element -> class id, per m, for root lookups
  std::vector<std::map<Quad, int>> class_index(count);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < elems[i].size(); ++k) class_index[i][elems[i][k].y] = parts[i].class_of[k];

  for (std::size_t i = 0; i < count; ++i) {
    const std::int64_t m = static_cast<std::int64_t>(i) + 2;
    const XmResult xr = xm(m);
    LengthEntry entry;
    entry.m = m;
    entry.x = xr.x;
    entry.l = xr.l;
    entry.incomplete = elems[i].empty();
    entry.classes.resize(parts[i].representatives.size());
    for (std::size_t c = 0; c < entry.classes.size(); ++c) {
      entry.classes[c].representative = parts[i].representatives[c];
      entry.classes[c].root_m = m;
    }
    for (int cid : parts[i].class_of) ++entry.classes[cid].members;
    // primitive roots: gamma = delta^k with half trace m = T_k(m')
    for (auto& cls : entry.classes) {
      for (int k = 2; chebyshev_t(k, 2) <= m; ++k) {
        std::int64_t lo = 2, hi = m;
        while (lo < hi) {
          const std::int64_t mid = (lo + hi) / 2;
          if (chebyshev_t(k, mid) < m) lo = mid + 1; else hi = mid;
        }
        if (chebyshev_t(k, lo) != m || lo >= m) continue;
        const std::size_t j = static_cast<std::size_t>(lo - 2);
        for (const auto& d : elems[j]) {
          GroupElement pw;
          try {
            pw = d.pow(k);
          } catch (const DomainError&) {
            continue;
          }
          if (class_index[i].count(pw.y) && class_index[i].at(pw.y) ==
                                                class_index[i].at(cls.representative.y)) {
            if (lo < cls.root_m) {
              cls.root_m = lo;
              cls.power = k;
            }
            break;
          }
        }
      }
      cls.primitive_length = xm(cls.root_m).l;
    }
    wls.entries.push_back(std::move(entry));
  }

  // weights
  if (mode == WeightMode::ZeroForm) return wls;
  if (mode == WeightMode::External) {
    for (auto& e : wls.entries)
      for (auto& c : e.classes) c.omega_integral = params.external(c, e.l);
    return wls;
  }
  const double S = params.stable_norm;
  // per-class ratio s_gamma, keyed by (m, class id)
  std::vector<std::vector<double>> ratio(count);
  std::map<long, bool> bucket_done;
  for (std::size_t i = 0; i < count; ++i) {
    auto& e = wls.entries[i];
    ratio[i].assign(e.classes.size(), 0.0);
    for (std::size_t c = 0; c < e.classes.size(); ++c) {
      const auto& cls = e.classes[c];
      if (cls.power > 1) {
        // powers inherit the ratio of their primitive root
        const std::size_t j = static_cast<std::size_t>(cls.root_m - 2);
        for (const auto& d : elems[j]) {
          GroupElement pw;
          try {
            pw = d.pow(cls.power);
          } catch (const DomainError&) {
            continue;
          }
          auto it = class_index[i].find(pw.y);
          if (it != class_index[i].end() && it->second == static_cast<int>(c)) {
            ratio[i][c] = ratio[j][class_index[j].at(d.y)];
            break;
          }
        }
        continue;
      }
      const GroupElement inv = cls.representative.inverse();
      const auto it = class_index[i].find(inv.y);
      if (it == class_index[i].end() || it->second == static_cast<int>(c)) continue;  // s = 0
      const std::size_t partner = static_cast<std::size_t>(it->second);
      if (partner < c) continue;  // assigned together with the partner
      const Quad& key = cls.representative.y;
      std::uint64_t h = seed;
      for (auto v : key) h = mix64(h ^ static_cast<std::uint64_t>(v));
      CounterRng rng(seed, h);
      double s = S * (2.0 * rng.uniform() - 1.0);
      const long bucket = static_cast<long>(std::floor(e.l));
      if (!bucket_done[bucket]) {
        s = S * (1.0 - 0.5 * params.delta * rng.uniform());
        bucket_done[bucket] = true;
      }
      ratio[i][c] = s;
      ratio[i][partner] = -s;
    }
    for (std::size_t c = 0; c < e.classes.size(); ++c) e.classes[c].omega_integral = ratio[i][c] * e.l;
  }
  return wls;
}

// -- test function -----------------------------------------------------------

double fejer_khat(double x) { return 2.0 * std::max(0.0, 1.0 - std::abs(x)); }

double fejer_k(double u) {
  const double s = sinc(u / 2.0);
  return s * s / std::numbers::pi;
}

double khat_alpha(double l, double alpha) { return fejer_khat(l - alpha) + fejer_khat(l + alpha); }

// -- R search ------------------------------------------------------------------

RSearchResult r_search(const std::vector<double>& lengths, double M, double T) {
  if (lengths.empty()) throw DomainError("r_search: empty length list");
  if (lengths.size() > 12) throw DomainError("r_search: at most 12 lengths");
  if (!(M >= 1.0)) throw DomainError("r_search: M must be >= 1");
  if (!(T > 0.0)) throw DomainError("r_search: T must be positive");
  for (double l : lengths) {
    if (!(l > 0.0)) throw DomainError("r_search: lengths must be positive");
    if (l > 5.0 * T + 1e-12) throw DomainError("r_search: lengths must be <= 5T");
  }
  const long double two_pi = 2.0L * std::acos(-1.0L);
  const long double third = two_pi / 6.0L;
  // log R - log M <= e^{5T}
  const long double log_cap = std::log(static_cast<long double>(M)) + std::exp(5.0L * T);
  const long double cap = std::min(kRSearchPrecisionCap, std::exp(std::min(log_cap, 11000.0L)));
  RSearchResult res;
  long double R = M;
  for (;;) {
    bool moved = false;
    for (double l : lengths) {
      const long double phase = R * l;
      const long double k = std::floor(phase / two_pi);
      const long double ph = phase - k * two_pi;
      if (ph <= third || ph >= two_pi - third) continue;
      R = (k * two_pi + (two_pi - third)) / l;
      R *= 1.0L + 1e-17L;  // step just inside the admissible interval
      moved = true;
      ++res.jumps;
    }
    if (R > cap) {
      std::ostringstream msg;
      msg << "r_search: exhausted at R = " << static_cast<double>(R) << " after " << res.jumps
          << " jumps (cap " << static_cast<double>(cap) << ")";
      throw ConvergenceError(msg.str());
    }
    if (!moved) break;
  }
  res.R = R;
  res.min_cos = 1.0;
  for (double l : lengths) res.min_cos = std::min(res.min_cos, static_cast<double>(std::cos(R * l)));
  if (!(res.min_cos >= 0.5)) throw ConvergenceError("r_search: verification of cos(R l) >= 1/2 failed");
  if (std::log(R) - std::log(static_cast<long double>(M)) > std::exp(5.0L * T))
    throw ConvergenceError("r_search: R left [M, M exp(exp(5T))]");
  return res;
}

// -- Gaussian trace identity ---------------------------------------------------

void TraceWindowParams::validate() const {
  if (!(sigma > 0.0)) throw DomainError("trace params: sigma must be positive");
  if (!(T > 0.0)) throw DomainError("trace params: T must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("trace params: beta must lie in (0, 1]");
  if (!(theta_of_R >= 1.0)) throw DomainError("trace params: theta_of_R must be >= 1");
}

cplx plancherel_term(double sigma, double R, double T, double area) {
  if (!(sigma > 0.0)) throw DomainError("plancherel_term: sigma must be positive");
  // the (r -> -r) half equals the first after substitution
  const double half = 12.0 / sigma;
  const double a = R - half, b = R + half;
  const double piece = std::min(1.0 / sigma, T > 0 ? std::numbers::pi / T : 1.0 / sigma);
  const long n = std::max(1L, static_cast<long>(std::ceil((b - a) / piece)));
  double re = 0.0, im = 0.0;
  for (long i = 0; i < n; ++i) {
    const double lo = a + (b - a) * i / n, hi = a + (b - a) * (i + 1) / n;
    auto g = [&](double r) { return r * std::tanh(std::numbers::pi * r) * std::exp(-0.5 * sigma * sigma * (r - R) * (r - R)); };
    re += gk_integrate([&](double r) { return g(r) * std::cos(T * r); }, lo, hi);
    im -= gk_integrate([&](double r) { return g(r) * std::sin(T * r); }, lo, hi);
  }
  return area / (4.0 * std::numbers::pi) * 2.0 * cplx(re, im);
}

TraceSides gaussian_trace_sides(const TraceWindowParams& params, const WeightedLengthSpectrum& wls,
                                double area, bool verified_R) {
  params.validate();
  const double s = params.sigma, T = params.T, R = params.R;
  TraceSides out;
  out.plancherel_term = plancherel_term(s, R, T, area);
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * s);
  double main = 0.0, tail = 0.0;
  double max_l = 0.0;
  for (const auto& e : wls.entries) {
    max_l = std::max(max_l, e.l);
    if (e.incomplete && std::abs(e.l - T) <= 5.0 * s) out.truncated = true;
    const double gm = std::exp(-(e.l - T) * (e.l - T) / (2 * s * s));
    const double gp = std::exp(-(e.l + T) * (e.l + T) / (2 * s * s));
    for (const auto& c : e.classes) {
      const double w = std::exp(c.omega_integral) * c.primitive_length / std::sinh(e.l / 2.0);
      out.geodesic_sum += w * norm * (gm * std::exp(cplx(0, e.l * R)) + gp * std::exp(cplx(0, -e.l * R)));
      if (e.l >= T - 1.0 && e.l <= T) main += w * (gm + gp);
      if (e.l >= 5.0 * T) tail += w * norm * (gm + gp) * std::cos(e.l * R);
    }
  }
  if (max_l < T + 5.0 * s) out.truncated = true;
  out.modulus_lower_bound = main / (std::sqrt(8.0 * std::numbers::pi) * s) + tail;
  if (verified_R) {
    out.comparison_checked = true;
    out.comparison_holds = std::abs(out.geodesic_sum) >= out.modulus_lower_bound;
  }
  return out;
}

// -- S_alpha and the second moment ---------------------------------------------

namespace {

void check_coverage(const WeightedLengthSpectrum& wls, double alpha) {
  if (wls.entries.empty() || wls.entries.back().x < std::exp(alpha + 1.0))
    throw DomainError("s_alpha: length spectrum does not reach x = e^{alpha+1}");
}

struct EtaTerm {
  double l;
  double eta;
};

// eta(m) = 2 mu(m) Khat_alpha(log x_m) / (x_m^{1/2} - x_m^{-1/2}); S_alpha(t) = sum eta cos(t l)
std::vector<EtaTerm> eta_terms(const WeightedLengthSpectrum& wls, double alpha) {
  check_coverage(wls, alpha);
  std::vector<EtaTerm> out;
  const double lo = std::exp(alpha - 1.0), hi = std::exp(alpha + 1.0);
  for (const auto& e : wls.entries) {
    if (e.x < lo || e.x > hi) continue;
    const double eta = 2.0 * e.mu() * khat_alpha(e.l, alpha) / (std::sqrt(e.x) - 1.0 / std::sqrt(e.x));
    if (eta != 0.0) out.push_back({e.l, eta});
  }
  return out;
}

}  // namespace

double s_alpha(const WeightedLengthSpectrum& wls, double alpha, double t) {
  double s = 0.0;
  for (const auto& term : eta_terms(wls, alpha)) s += term.eta * std::cos(t * term.l);
  return s;
}

double s_alpha_classes(const WeightedLengthSpectrum& wls, double alpha, double t) {
  check_coverage(wls, alpha);
  double s = 0.0;
  for (const auto& e : wls.entries) {
    const double k = khat_alpha(e.l, alpha);
    if (k == 0.0) continue;
    for (const auto& c : e.classes)
      s += std::exp(c.omega_integral) * c.primitive_length / std::sinh(e.l / 2.0) * k * std::cos(t * e.l);
  }
  return s;
}

OscillatoryWindow oscillatory_window(double lambda, double T, double beta) {
  if (!(T >= 1.0)) throw DomainError("oscillatory_window: T must be >= 1");
  const double h = std::pow(T, beta);
  const double s = sinc(lambda * h / 2.0);
  OscillatoryWindow w;
  w.value = std::exp(cplx(0.0, 2.0 * lambda * T)) * h * s * s;
  const double bound = lambda == 0.0 ? h : std::min(h, 4.0 / (lambda * lambda * h));
  w.bound_ok = std::abs(w.value) <= bound * (1.0 + 1e-12);
  return w;
}

SecondMoment windowed_second_moment(const WeightedLengthSpectrum& wls, double alpha, double beta,
                                    double T) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("windowed_second_moment: beta in (0, 1]");
  if (!(T >= 1.0)) throw DomainError("windowed_second_moment: T must be >= 1");
  const auto terms = eta_terms(wls, alpha);
  SecondMoment sm;
  sm.terms = static_cast<int>(terms.size());
  sm.in_regime = alpha <= 2.0 * beta * std::log(T) - kCSplit + 1e-12;
  const double h = std::pow(T, beta);
  auto reW = [&](double lam) { return oscillatory_window(lam, T, beta).value.real(); };
  for (std::size_t a = 0; a < terms.size(); ++a) {
    sm.I1 += terms[a].eta * terms[a].eta * 0.5 * (h + reW(2.0 * terms[a].l));
    for (std::size_t b = 0; b < a; ++b)
      sm.I2 += terms[a].eta * terms[b].eta *
               (reW(terms[a].l - terms[b].l) + reW(terms[a].l + terms[b].l));
  }
  double lmax = 0.0;
  for (const auto& t : terms) lmax = std::max(lmax, t.l);
  auto integrand = [&](double t) {
    double s = 0.0;
    for (const auto& term : terms) s += term.eta * std::cos(t * term.l);
    return (1.0 - std::abs(t - 2.0 * T) / h) * s * s;
  };
  const double piece = std::min(0.5, lmax > 0 ? std::numbers::pi / (2.0 * lmax) : 0.5);
  for (int side = 0; side < 2; ++side) {
    const double a = side == 0 ? 2.0 * T - h : 2.0 * T;
    const long n = std::max(1L, static_cast<long>(std::ceil(h / piece)));
    for (long i = 0; i < n; ++i)
      sm.I += gauss_piece(integrand, a + h * i / n, a + h * (i + 1) / n);
  }
  sm.split_holds = std::abs(sm.I2) <= sm.I1 / 100.0;
  return sm;
}

WindowSums window_sums(const WeightedLengthSpectrum& wls, double alpha, double half_width) {
  WindowSums ws;
  const double lo = std::exp(alpha - half_width), hi = std::exp(alpha + half_width);
  for (const auto& e : wls.entries) {
    if (e.x < lo || e.x > hi) continue;
    const double mu = e.mu();
    ws.mu_sum += mu;
    ws.mu2_sum += mu * mu;
    ++ws.count;
  }
  return ws;
}

// -- bounds ----------------------------------------------------------------------

double q3arithm_bound(double pr_omega, double beta, double eps) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("q3arithm_bound: beta must lie in (0, 1]");
  if (!(eps > 0.0 && eps < beta)) throw DomainError("q3arithm_bound: need 0 < eps < beta");
  return pr_omega - 0.5 - (1.0 + eps) / (2.0 * beta);
}

double q3_chain_exponent(double pr_omega, double beta, double eps, double C, double t) {
  if (!(t > 1.0) || !(C > 0.0)) throw DomainError("q3_chain_exponent: need t > 1 and C > 0");
  return (beta * (2.0 * pr_omega - 1.0) - 1.0 - eps + std::log(C) / std::log(t)) / (2.0 * beta);
}

bool q3_window_check(const std::vector<cplx>& spectrum, double T, double beta, double bound) {
  const double h = std::pow(T, beta);
  return std::any_of(spectrum.begin(), spectrum.end(), [&](cplx r) {
    return std::abs(r.real() - T) <= h && std::abs(r.imag()) >= bound;
  });
}

SurrogateSpectrum weyl_surrogate(double theta, double c, double x_lo, double x_hi,
                                 std::uint64_t seed) {
  if (!(theta >= 1.0) || !(c >= 0.0) || !(x_hi > x_lo) || x_lo < 0.0)
    throw DomainError("weyl_surrogate: need theta >= 1, c >= 0, 0 <= x_lo < x_hi");
  SurrogateSpectrum s;
  s.theta = theta;
  s.c = c;
  s.x_lo = std::floor(x_lo);
  s.x_hi = std::ceil(x_hi);
  for (long x = static_cast<long>(s.x_lo); x < static_cast<long>(s.x_hi); ++x) {
    const long n = std::lround(static_cast<double>(x) * theta);
    CounterRng rng(seed, static_cast<std::uint64_t>(x));
    for (long k = 0; k < n; ++k) {
      const double re = x + rng.uniform();
      const double im = c * theta * (2.0 * rng.uniform() - 1.0);
      s.values.emplace_back(re, im);
    }
  }
  return s;
}

TailParts tail_bounds(const SurrogateSpectrum& s, double R, double sigma, double f, double T) {
  if (!(sigma > 0.0) || !(f > 0.0) || !(T > 0.0)) throw DomainError("tail_bounds: sigma, f, T must be positive");
  const double bound = s.c * s.theta;
  cplx p1, p2, p3;
  TailParts out;
  for (const cplx& r : s.values) {
    if (std::abs(r.imag()) > bound * (1.0 + 1e-12))
      throw DomainError("tail_bounds: surrogate violates |Im r| <= c theta");
    const cplx d = r - R;
    const cplx term = std::exp(-0.5 * sigma * sigma * d * d - cplx(0.0, T) * r);
    if (r.real() <= R - f) {
      p1 += term;
    } else if (r.real() >= R + f) {
      p3 += term;
    } else {
      p2 += term;
      ++out.countII;
    }
  }
  out.partI = std::abs(p1);
  out.partII = std::abs(p2);
  out.partIII = std::abs(p3);
  const double th = s.theta, c = s.c;
  const double amp = std::exp(0.5 * sigma * sigma * c * c * th * th + c * T * th);
  const double a = f - 1.0;
  const double gauss_tail = R * std::sqrt(std::numbers::pi / 2.0) / sigma * std::erfc(a * sigma / std::sqrt(2.0)) +
                            std::exp(-0.5 * sigma * sigma * a * a) / (sigma * sigma);
  out.majorant_III = amp * th * gauss_tail;
  out.majorant_I = R * R * th * amp * std::exp(-0.5 * sigma * sigma * f * f);
  out.tails_bounded = out.partI <= kTailConstant && out.partIII <= kTailConstant;
  out.middle_dominates = out.partII >= 10.0 * (out.partI + out.partIII);
  return out;
}

}  // namespace dwlab::arith
