#include "dwlab/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <queue>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace dwlab::thermo {

namespace {

bool strongly_connected(int n, const std::vector<Edge>& edges) {
  auto reach = [&](bool forward) {
    std::vector<std::vector<int>> adj(n);
    for (const Edge& e : edges) {
      if (forward)
        adj[e.from].push_back(e.to);
      else
        adj[e.to].push_back(e.from);
    }
    std::vector<char> seen(n, 0);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = 1;
    int count = 1;
    while (!todo.empty()) {
      const int v = todo.front();
      todo.pop();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          todo.push(w);
        }
    }
    return count == n;
  };
  return reach(true) && reach(false);
}

Eigen::VectorXd positive_eigvec(const Eigen::MatrixXd& m, double* root) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) {
    *root = m(0, 0);
    return Eigen::VectorXd::Ones(1);
  }
  // Osborne balancing: D^{-1} m D with equal off-diagonal row and column
  // sums. Weights like e^{beta q} span many decades and an unbalanced solve
  // loses the relative accuracy of a small Perron root.
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd b = m;
  for (int sweep = 0; sweep < 200; ++sweep) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const double c = b.col(i).sum() - b(i, i), r = b.row(i).sum() - b(i, i);
      if (c <= 0.0 || r <= 0.0) continue;
      // bounded steps keep f * b finite when c / r overflows
      const double f = std::clamp(std::sqrt(c / r), 0x1p-64, 0x1p64);
      if (std::abs(f - 1.0) < 1e-3) continue;
      b.row(i) *= f;
      b.col(i) /= f;
      d[i] /= f;
      changed = true;
    }
    if (!changed) break;
  }
  const double bscale = b.maxCoeff();
  b /= bscale;
  Eigen::EigenSolver<Eigen::MatrixXd> es(b, true);
  if (es.info() != Eigen::Success) throw ConvergenceError("perron: eigensolver failed");
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
  *root = es.eigenvalues()[best].real() * bscale;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  if (v.sum() < 0) v = -v;
  v = d.cwiseProduct(v.cwiseAbs());
  return v / v.sum();
}

// Root s of log Perron(weighted(beta, s)) = 0, which is strictly decreasing
// in s because every roof is positive.
double bowen_root(const MarkovModel& model, double beta) {
  auto logrho = [&](double s) { return std::log(perron(model.weighted(beta, s)).root); };
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (const Edge& e : model.edges()) {
    rmin = std::min(rmin, e.roof);
    rmax = std::max(rmax, e.roof);
  }
  const double p0 = logrho(0.0);
  // p0 - s rmax <= logrho(s) <= p0 - s rmin
  double lo = std::min(p0 / rmax, p0 / rmin);
  double hi = std::max(p0 / rmax, p0 / rmin);
  lo -= 1e-9 * (1.0 + std::abs(lo));
  hi += 1e-9 * (1.0 + std::abs(hi));
  double flo = logrho(lo), fhi = logrho(hi);
  if (!(flo >= 0.0 && fhi <= 0.0)) {
    std::ostringstream msg;
    msg << "pressure_transfer: Bowen bracket failed at beta = " << beta << " (f(" << lo
        << ") = " << flo << ", f(" << hi << ") = " << fhi << ")";
    throw ConvergenceError(msg.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (logrho(mid) > 0.0 ? lo : hi) = mid;
  }
  double s = 0.5 * (lo + hi);
  // Newton polish: d/ds log rho = -l^T (roof o M) r / (rho l^T r)
  for (int it = 0; it < 3; ++it) {
    const Eigen::MatrixXd m = model.weighted(beta, s);
    const PerronData pd = perron(m);
    Eigen::MatrixXd rm = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    for (const Edge& e : model.edges()) rm(e.from, e.to) = e.roof * m(e.from, e.to);
    const double deriv = -pd.left.dot(rm * pd.right) / (pd.root * pd.left.dot(pd.right));
    const double step = std::log(pd.root) / deriv;
    if (!std::isfinite(step)) break;
    s -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(s))) break;
  }
  return s;
}

}  // namespace

// -- MarkovModel -------------------------------------------------------------

MarkovModel::MarkovModel(int states, std::vector<Edge> edges, double d_minus_1)
    : states_(states), edges_(std::move(edges)), d_minus_1_(d_minus_1) {
  if (states_ < 1) throw DomainError("MarkovModel: need at least one state");
  if (!(d_minus_1_ > 0.0)) throw DomainError("MarkovModel: d_minus_1 must be positive");
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.from < 0 || e.from >= states_ || e.to < 0 || e.to >= states_)
      throw DomainError("MarkovModel: edge endpoint out of range");
    if (!seen.insert({e.from, e.to}).second)
      throw DomainError("MarkovModel: duplicate edge " + std::to_string(e.from) + "->" +
                        std::to_string(e.to));
    if (!(e.roof > 0.0)) throw DomainError("MarkovModel: roof must be positive on every edge");
    if (!std::isfinite(e.q)) throw DomainError("MarkovModel: q must be finite");
  }
  if (!strongly_connected(states_, edges_))
    throw DomainError("MarkovModel: adjacency is not irreducible");
}

MarkovModel MarkovModel::full_shift(int k) {
  std::vector<Edge> edges;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) edges.push_back({i, j, 0.0, 1.0});
  return MarkovModel(k, edges);
}

MarkovModel MarkovModel::full_shift_by_target(const std::vector<double>& values) {
  const int k = static_cast<int>(values.size());
  std::vector<Edge> edges;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) edges.push_back({i, j, values[j], 1.0});
  return MarkovModel(k, edges);
}

MarkovModel MarkovModel::golden_mean() {
  return MarkovModel(2, {{0, 0, 0.0, 1.0}, {0, 1, 0.0, 1.0}, {1, 0, 0.0, 1.0}});
}

bool MarkovModel::unit_roof() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.roof == 1.0; });
}

Eigen::MatrixXd MarkovModel::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(states_, states_);
  for (const Edge& e : edges_) a(e.from, e.to) = 1.0;
  return a;
}

Eigen::MatrixXd MarkovModel::weighted(double beta, double s) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(states_, states_);
  for (const Edge& e : edges_) m(e.from, e.to) = std::exp(beta * e.q - s * e.roof);
  return m;
}

MarkovModel MarkovModel::with_q(const std::vector<double>& q_per_edge) const {
  if (q_per_edge.size() != edges_.size()) throw DomainError("with_q: size mismatch");
  auto e = edges_;
  for (std::size_t i = 0; i < e.size(); ++i) e[i].q = q_per_edge[i];
  return MarkovModel(states_, e, d_minus_1_);
}

MarkovModel MarkovModel::with_roof(const std::vector<double>& roof_per_edge) const {
  if (roof_per_edge.size() != edges_.size()) throw DomainError("with_roof: size mismatch");
  auto e = edges_;
  for (std::size_t i = 0; i < e.size(); ++i) e[i].roof = roof_per_edge[i];
  return MarkovModel(states_, e, d_minus_1_);
}

nlohmann::json MarkovModel::to_json() const {
  nlohmann::json j;
  j["states"] = states_;
  j["d_minus_1"] = d_minus_1_;
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : edges_)
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"q", e.q}, {"roof", e.roof}});
  return j;
}

MarkovModel MarkovModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("model: expected an object");
  for (const auto& [key, _] : j.items())
    if (key != "states" && key != "edges" && key != "d_minus_1")
      throw DomainError("model: unknown field '" + key + "'");
  if (!j.contains("states") || !j.contains("edges"))
    throw DomainError("model: 'states' and 'edges' are required");
  std::vector<Edge> edges;
  for (const auto& je : j.at("edges")) {
    for (const auto& [key, _] : je.items())
      if (key != "from" && key != "to" && key != "q" && key != "roof")
        throw DomainError("model edge: unknown field '" + key + "'");
    Edge e;
    e.from = je.at("from").get<int>();
    e.to = je.at("to").get<int>();
    e.q = je.value("q", 0.0);
    e.roof = je.value("roof", 1.0);
    edges.push_back(e);
  }
  return MarkovModel(j.at("states").get<int>(), edges, j.value("d_minus_1", 1.0));
}

// -- Perron data and equilibrium states --------------------------------------

PerronData perron(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("perron: need a square matrix");
  if ((m.array() < 0.0).any()) throw DomainError("perron: matrix must be nonnegative");
  const double scale = m.maxCoeff();
  if (!(scale > 0.0)) throw DomainError("perron: zero matrix");
  const Eigen::MatrixXd ms = m / scale;
  PerronData pd;
  double r1 = 0.0, r2 = 0.0;
  pd.right = positive_eigvec(ms, &r1);
  pd.left = positive_eigvec(ms.transpose(), &r2);
  pd.root = r1 * scale;
  return pd;
}

double EquilibriumState::integrate(const MarkovModel& model,
                                   const std::vector<double>& per_edge) const {
  if (per_edge.size() != model.edges().size()) throw DomainError("integrate: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < per_edge.size(); ++k) {
    const Edge& e = model.edges()[k];
    s += stationary[e.from] * transition(e.from, e.to) * per_edge[k];
  }
  return s;
}

double EquilibriumState::entropy() const {
  double h = 0.0;
  for (int i = 0; i < transition.rows(); ++i)
    for (int j = 0; j < transition.cols(); ++j) {
      const double p = transition(i, j);
      if (p > 0.0) h -= stationary[i] * p * std::log(p);
    }
  return h;
}

EquilibriumState equilibrium_state(const MarkovModel& model, double beta, double s) {
  const Eigen::MatrixXd m = model.weighted(beta, s);
  const PerronData pd = perron(m);
  EquilibriumState eq;
  eq.perron_root = pd.root;
  const int n = model.states();
  eq.transition = Eigen::MatrixXd::Zero(n, n);
  // P_ij = M_ij r_j / (rho r_i), normalized row by row so that r_i never
  // divides. At large |beta| whole rows of r underflow; those states carry
  // no stationary mass and keep the plain adjacency row.
  for (const Edge& e : model.edges()) eq.transition(e.from, e.to) = m(e.from, e.to) * pd.right[e.to];
  for (int i = 0; i < n; ++i) {
    const double sum = eq.transition.row(i).sum();
    if (sum > 0.0 && std::isfinite(sum)) {
      eq.transition.row(i) /= sum;
    } else {
      for (int j = 0; j < n; ++j) eq.transition(i, j) = m(i, j) > 0.0 ? 1.0 : 0.0;
      eq.transition.row(i) /= eq.transition.row(i).sum();
    }
  }
  eq.stationary = pd.left.cwiseProduct(pd.right);
  eq.stationary /= eq.stationary.sum();
  return eq;
}

// -- pressure ----------------------------------------------------------------

double pressure_transfer(const MarkovModel& model, double beta) {
  if (model.unit_roof()) return std::log(perron(model.weighted(beta, 0.0)).root);
  return bowen_root(model, beta);
}

double PressureCurve::min_second_difference() const {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < values.size(); ++i)
    worst = std::min(worst, values[i + 1] - 2.0 * values[i] + values[i - 1]);
  return worst;
}

std::vector<double> default_beta_grid() {
  std::vector<double> b(801);
  for (int i = 0; i < 801; ++i) b[i] = -40.0 + 0.1 * i;
  return b;
}

PressureCurve pressure_curve(const MarkovModel& model, const std::vector<double>& betas,
                             int threads) {
  for (std::size_t i = 1; i < betas.size(); ++i)
    if (!(betas[i] > betas[i - 1])) throw DomainError("pressure_curve: betas must increase");
  PressureCurve c;
  c.betas = betas;
  c.values.resize(betas.size());
  c.slopes.resize(betas.size());
  std::vector<double> q, roof;
  for (const Edge& e : model.edges()) {
    q.push_back(e.q);
    roof.push_back(e.roof);
  }
  const bool unit = model.unit_roof();
  parallel_for(betas.size(), threads, [&](std::size_t i) {
    const double p = pressure_transfer(model, betas[i]);
    const EquilibriumState eq = equilibrium_state(model, betas[i], unit ? 0.0 : p);
    c.values[i] = p;
    c.slopes[i] = eq.integrate(model, q) / eq.integrate(model, roof);
  });
  return c;
}

// -- Legendre transform ------------------------------------------------------

double RateFunction::value_at(double alpha) const {
  const auto& b = source.betas;
  const auto& p = source.values;
  const auto& s = source.slopes;
  const double tol = 1e-12 * (1.0 + std::abs(q_plus) + std::abs(q_minus));
  if (alpha < q_minus - tol || alpha > q_plus + tol) return kNegInf;
  if (alpha <= s.front()) return p.front() - alpha * b.front();
  if (alpha >= s.back()) return p.back() - alpha * b.back();
  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), alpha) - s.begin()) - 1;
  const double h = b[i + 1] - b[i];
  const double p0 = p[i], p1 = p[i + 1], m0 = s[i] * h, m1 = s[i + 1] * h;
  auto dp = [&](double t) {
    return p0 * (6 * t * t - 6 * t) + m0 * (3 * t * t - 4 * t + 1) +
           p1 * (-6 * t * t + 6 * t) + m1 * (3 * t * t - 2 * t);
  };
  double lo = 0.0, hi = 1.0;
  const double target = alpha * h;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dp(mid) < target ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  const double t2 = t * t, t3 = t2 * t;
  const double pt = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 +
                    (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
  return pt - alpha * (b[i] + t * h);
}

double RateFunction::max_second_difference() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    if (is_neg_inf(values[i - 1]) || is_neg_inf(values[i]) || is_neg_inf(values[i + 1])) continue;
    worst = std::max(worst, values[i + 1] - 2.0 * values[i] + values[i - 1]);
  }
  return worst;
}

RateFunction legendre_rate(const PressureCurve& curve, int n_alpha) {
  const std::size_t n = curve.betas.size();
  if (n < 4 || curve.values.size() != n || curve.slopes.size() != n)
    throw DomainError("legendre_rate: need at least 4 grid points with slopes");
  if (n_alpha < 2) throw DomainError("legendre_rate: n_alpha must be >= 2");
  if (curve.min_second_difference() < -1e-9)
    throw DomainError("legendre_rate: pressure curve is not convex");
  const auto& s = curve.slopes;
  for (std::size_t i = 1; i < n; ++i)
    if (s[i] < s[i - 1] - 1e-9) throw DomainError("legendre_rate: slopes must be nondecreasing");
  constexpr double kSlopeTol = 1e-6;
  for (int k = 0; k < 3; ++k) {
    const double dlo = std::abs(s[k + 1] - s[k]);
    const double dhi = std::abs(s[n - 1 - k] - s[n - 2 - k]);
    if (dlo >= kSlopeTol || dhi >= kSlopeTol) {
      std::ostringstream msg;
      msg << std::setprecision(6) << "legendre_rate: boundary slopes not converged; low end "
          << s[0] << "," << s[1] << "," << s[2] << "," << s[3] << "; high end " << s[n - 4]
          << "," << s[n - 3] << "," << s[n - 2] << "," << s[n - 1]
          << " (widen the beta grid)";
      throw ConvergenceError(msg.str());
    }
  }
  RateFunction r;
  r.source = curve;
  // monotone slopes for bracketing
  for (std::size_t i = 1; i < n; ++i) r.source.slopes[i] = std::max(r.source.slopes[i], r.source.slopes[i - 1]);
  r.q_minus = r.source.slopes.front();
  r.q_plus = r.source.slopes.back();
  r.alphas.resize(n_alpha);
  r.values.resize(n_alpha);
  for (int k = 0; k < n_alpha; ++k) {
    const double a = r.q_minus + (r.q_plus - r.q_minus) * k / (n_alpha - 1);
    r.alphas[k] = a;
    r.values[k] = r.value_at(a);
  }
  return r;
}

double legendre_dual(const RateFunction& rate, double beta) {
  auto f = [&](double a) { return a * beta + rate.value_at(a); };
  std::size_t best = 0;
  double fbest = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rate.alphas.size(); ++k) {
    const double v = f(rate.alphas[k]);
    if (v > fbest) {
      fbest = v;
      best = k;
    }
  }
  double lo = rate.alphas[best == 0 ? 0 : best - 1];
  double hi = rate.alphas[std::min(best + 1, rate.alphas.size() - 1)];
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
  }
  return std::max({fbest, f1, f2});
}

// -- extremes, orbits, stable norm --------------------------------------------

std::pair<double, double> q_extremes(const MarkovModel& model) {
  const int n = model.states();
  auto min_mean = [&](double sign) {
    const double inf = std::numeric_limits<double>::infinity();
    // D[k][v]: minimum weight of a k-edge walk ending at v, from any start
    std::vector<std::vector<double>> D(n + 1, std::vector<double>(n, inf));
    std::fill(D[0].begin(), D[0].end(), 0.0);
    for (int k = 1; k <= n; ++k)
      for (const Edge& e : model.edges())
        if (D[k - 1][e.from] < inf) D[k][e.to] = std::min(D[k][e.to], D[k - 1][e.from] + sign * e.q);
    double best = inf;
    for (int v = 0; v < n; ++v) {
      if (D[n][v] == inf) continue;
      double worst = -inf;
      for (int k = 0; k < n; ++k)
        if (D[k][v] < inf) worst = std::max(worst, (D[n][v] - D[k][v]) / (n - k));
      best = std::min(best, worst);
    }
    return sign * best;
  };
  return {min_mean(1.0), min_mean(-1.0)};
}

double pressure_orbit_sum(const std::vector<Orbit>& orbits, double t) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const Orbit& o : orbits)
    if (o.length <= t) mx = std::max(mx, o.integral);
  if (mx == -std::numeric_limits<double>::infinity())
    throw DomainError("pressure_orbit_sum: no orbits of length <= t");
  double s = 0.0;
  for (const Orbit& o : orbits)
    if (o.length <= t) s += std::exp(o.integral - mx);
  return (mx + std::log(s)) / t;
}

std::vector<Orbit> periodic_orbits(const MarkovModel& model, int max_period, double beta) {
  if (max_period < 1) throw DomainError("periodic_orbits: max_period must be >= 1");
  std::vector<std::vector<const Edge*>> out_edges(model.states());
  for (const Edge& e : model.edges()) out_edges[e.from].push_back(&e);
  std::vector<Orbit> orbits;
  for (int start = 0; start < model.states(); ++start) {
    // iterative DFS over walks from start
    struct Frame {
      int state;
      int depth;
      double sum;
    };
    std::vector<Frame> stack{{start, 0, 0.0}};
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      if (f.depth == max_period) continue;
      for (const Edge* e : out_edges[f.state]) {
        const double sum = f.sum + e->q;
        if (e->to == start) orbits.push_back({static_cast<double>(f.depth + 1), beta * sum});
        stack.push_back({e->to, f.depth + 1, sum});
      }
    }
  }
  return orbits;
}

double stable_norm(const std::vector<Orbit>& orbits) {
  if (orbits.empty()) throw DomainError("stable_norm: empty orbit list");
  double best = -std::numeric_limits<double>::infinity();
  for (const Orbit& o : orbits) {
    if (!(o.length > 0.0)) throw DomainError("stable_norm: orbit length must be positive");
    best = std::max(best, o.integral / o.length);
  }
  return best;
}

// -- Monte Carlo large deviations --------------------------------------------

LargeDeviationEstimate birkhoff_ld_montecarlo(const MarkovModel& model, int T, Interval I,
                                              long nsamples, std::uint64_t seed, int threads) {
  if (T < 1) throw DomainError("birkhoff_ld_montecarlo: T must be >= 1");
  if (nsamples < 10000) throw DomainError("birkhoff_ld_montecarlo: need nsamples >= 1e4");
  if (!(I.hi > I.lo)) throw DomainError("birkhoff_ld_montecarlo: interval must have interior");
  const MarkovModel base = model.with_roof(std::vector<double>(model.edges().size(), 1.0));
  const auto [qmin, qmax] = q_extremes(base);
  if (I.hi <= qmin || I.lo >= qmax)
    throw DomainError("birkhoff_ld_montecarlo: interval misses (q-, q+)");

  const EquilibriumState mme = equilibrium_state(base, 0.0, 0.0);
  const int n = base.states();
  std::vector<std::vector<double>> cum(n), qv(n);
  std::vector<std::vector<int>> dest(n);
  for (const Edge& e : base.edges()) {
    const double p = mme.transition(e.from, e.to);
    cum[e.from].push_back((cum[e.from].empty() ? 0.0 : cum[e.from].back()) + p);
    qv[e.from].push_back(e.q);
    dest[e.from].push_back(e.to);
  }
  for (int i = 0; i < n; ++i) cum[i].back() = 1.0;
  std::vector<double> start_cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) start_cum[i] = (acc += mme.stationary[i]);
  start_cum.back() = 1.0;

  const double eps = 1e-12 * (1.0 + std::abs(I.lo) + std::abs(I.hi));
  const int workers = std::max(1, threads);
  const std::size_t blocks = static_cast<std::size_t>(std::min<long>(nsamples, 64L * workers));
  std::vector<long> block_hits(blocks, 0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    const long lo = static_cast<long>(b) * nsamples / static_cast<long>(blocks);
    const long hi = static_cast<long>(b + 1) * nsamples / static_cast<long>(blocks);
    long hits = 0;
    for (long k = lo; k < hi; ++k) {
      CounterRng rng(seed, static_cast<std::uint64_t>(k));
      const double u0 = rng.uniform();
      int state = static_cast<int>(std::upper_bound(start_cum.begin(), start_cum.end(), u0) -
                                   start_cum.begin());
      state = std::min(state, n - 1);
      double sum = 0.0;
      for (int t = 0; t < T; ++t) {
        const double u = rng.uniform();
        const auto& c = cum[state];
        std::size_t j = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), u) - c.begin());
        j = std::min(j, c.size() - 1);
        sum += qv[state][j];
        state = dest[state][j];
      }
      const double avg = sum / T;
      if (avg >= I.lo - eps && avg <= I.hi + eps) ++hits;
    }
    block_hits[b] = hits;
  });
  LargeDeviationEstimate est;
  est.nsamples = nsamples;
  for (long h : block_hits) est.hits += h;

  const double h_top = std::log(perron(base.adjacency()).root);
  const RateFunction rf = legendre_rate(pressure_curve(base, default_beta_grid(), threads));
  const double qbar = mme.integrate(base, [&] {
    std::vector<double> q;
    for (const Edge& e : base.edges()) q.push_back(e.q);
    return q;
  }());
  double sup_h = kNegInf;
  const double lo = std::max(I.lo, rf.q_minus), hi = std::min(I.hi, rf.q_plus);
  if (qbar >= lo && qbar <= hi) {
    sup_h = rf.value_at(qbar);
  } else if (lo <= hi) {
    sup_h = std::max(rf.value_at(lo), rf.value_at(hi));
  }
  est.predicted = sup_h - h_top;

  if (est.hits == 0) return est;  // rate stays at the -inf sentinel
  const double p = static_cast<double>(est.hits) / static_cast<double>(nsamples);
  est.rate = std::log(p) / T;
  est.std_error = std::sqrt((1.0 - p) / (p * static_cast<double>(nsamples))) / T;
  return est;
}

// -- Abramov -----------------------------------------------------------------

AbramovResult abramov_timechange(const MarkovModel& model, double beta) {
  std::vector<double> roof_bar, q;
  for (const Edge& e : model.edges()) {
    roof_bar.push_back(e.roof / model.d_minus_1());
    q.push_back(e.q);
  }
  const MarkovModel normalized = model.with_roof(roof_bar);
  AbramovResult r;
  r.s = bowen_root(normalized, beta);
  const EquilibriumState eq = equilibrium_state(normalized, beta, r.s);
  r.h_base = eq.entropy();
  r.mean_roof = eq.integrate(normalized, roof_bar);
  r.mean_q = eq.integrate(normalized, q);
  r.h_timechanged = r.h_base / r.mean_roof;
  r.ratio_check = std::abs(r.s - (r.h_timechanged + beta * r.mean_q / r.mean_roof));
  return r;
}

std::string curve_to_csv(const std::vector<double>& x, const std::vector<double>& value) {
  if (x.size() != value.size()) throw DomainError("curve_to_csv: size mismatch");
  std::ostringstream os;
  os << "x,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << x[i] << ',';
    if (is_neg_inf(value[i]))
      os << "-inf";
    else
      os << value[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace dwlab::thermo
