#pragma once

// Thermodynamic formalism on finite irreducible subshifts of finite type.
// Pressure is a Perron root, the rate function H is its Legendre transform,
// and flow statements use a roof function through Bowen's equation.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dwlab/common.hpp"

namespace dwlab::thermo {

struct Edge {
  int from = 0;
  int to = 0;
  double q = 0.0;
  double roof = 1.0;
};

class MarkovModel {
 public:
  /// Validates: states >= 1, edge endpoints in range, no duplicate edges,
  /// roof > 0, strongly connected graph.
  MarkovModel(int states, std::vector<Edge> edges, double d_minus_1 = 1.0);

  /// Full k-shift with q = 0 and unit roof.
  static MarkovModel full_shift(int k);
  /// Full k-shift with q(i -> j) = values[j].
  static MarkovModel full_shift_by_target(const std::vector<double>& values);
  /// Golden-mean shift: transitions 0->0, 0->1, 1->0.
  static MarkovModel golden_mean();

  int states() const { return states_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double d_minus_1() const { return d_minus_1_; }
  bool unit_roof() const;

  Eigen::MatrixXd adjacency() const;
  /// A_ij exp(beta q_ij - s roof_ij).
  Eigen::MatrixXd weighted(double beta, double s) const;

  MarkovModel with_q(const std::vector<double>& q_per_edge) const;
  MarkovModel with_roof(const std::vector<double>& roof_per_edge) const;

  nlohmann::json to_json() const;
  static MarkovModel from_json(const nlohmann::json& j);

 private:
  int states_;
  std::vector<Edge> edges_;
  double d_minus_1_;
};

struct PerronData {
  double root = 0.0;
  Eigen::VectorXd left;   // positive, l^T M = root l^T
  Eigen::VectorXd right;  // positive, M r = root r
};

/// Perron-Frobenius eigendata of a nonnegative irreducible matrix.
PerronData perron(const Eigen::MatrixXd& m);

/// Markov chain of the equilibrium state of the edge potential beta q - s roof.
struct EquilibriumState {
  Eigen::MatrixXd transition;  // P_ij = M_ij r_j / (rho r_i)
  Eigen::VectorXd stationary;  // pi_i proportional to l_i r_i
  double perron_root = 0.0;

  /// sum_ij pi_i P_ij f(i -> j) for an edge-indexed function.
  double integrate(const MarkovModel& model, const std::vector<double>& per_edge) const;
  double entropy() const;  // -sum pi_i P_ij log P_ij
};

EquilibriumState equilibrium_state(const MarkovModel& model, double beta, double s);

/// Unit roof: log of the Perron root of A_ij e^{beta q_ij}. Otherwise the
/// root s of Perron(A o exp(beta q - s roof)) = 1, to 1e-10 or better.
double pressure_transfer(const MarkovModel& model, double beta);

struct PressureCurve {
  std::vector<double> betas;
  std::vector<double> values;
  std::vector<double> slopes;  // P'(beta) = int q dmu / int roof dmu

  /// Smallest second difference of values, normalized by grid spacing.
  double min_second_difference() const;
};

/// Default grid: [-40, 40], 801 points.
std::vector<double> default_beta_grid();

PressureCurve pressure_curve(const MarkovModel& model, const std::vector<double>& betas,
                             int threads = 1);

struct RateFunction {
  std::vector<double> alphas;
  std::vector<double> values;  // kNegInf outside [q_minus, q_plus]
  double q_minus = 0.0;
  double q_plus = 0.0;
  PressureCurve source;        // the curve the transform was taken from

  /// H(alpha) for any alpha, from the piecewise Hermite model of P.
  double value_at(double alpha) const;
  double max_second_difference() const;
};

/// H(alpha) = inf_beta (P(beta) - alpha beta) sampled on n_alpha points of
/// [q_minus, q_plus]. Throws ConvergenceError when either endpoint slope has
/// not settled (three trailing slope differences must be below 1e-6).
RateFunction legendre_rate(const PressureCurve& curve, int n_alpha = 401);

/// sup_alpha (alpha beta + H(alpha)) by grid scan and golden-section polish.
double legendre_dual(const RateFunction& rate, double beta);

/// Exact extreme cycle means (Karp's algorithm).
std::pair<double, double> q_extremes(const MarkovModel& model);

struct Orbit {
  double length = 0.0;
  double integral = 0.0;
};

/// (1/t) log sum_{length <= t} e^{integral}; a finite-t estimator with O(1/t)
/// bias.
double pressure_orbit_sum(const std::vector<Orbit>& orbits, double t);

/// Periodic points of period n <= max_period (closed walks), with length n
/// and integral beta * sum of q along the walk.
std::vector<Orbit> periodic_orbits(const MarkovModel& model, int max_period, double beta);

/// max integral / length over the list; a lower bound for the stable norm.
double stable_norm(const std::vector<Orbit>& orbits);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct LargeDeviationEstimate {
  double rate = kNegInf;       // (1/T) log(hits / nsamples)
  double std_error = 0.0;      // delta-method error of rate
  long hits = 0;
  long nsamples = 0;
  double predicted = 0.0;      // sup_{alpha in I} H(alpha) - h_top
};

/// Samples length-T paths of the measure of maximal entropy and estimates
/// the exponential rate of P(Birkhoff average of q in I). Results depend only
/// on (model, T, I, nsamples, seed), not on threads.
LargeDeviationEstimate birkhoff_ld_montecarlo(const MarkovModel& model, int T, Interval I,
                                              long nsamples, std::uint64_t seed,
                                              int threads = 1);

struct AbramovResult {
  double s = 0.0;              // Bowen root for beta q - s roof_bar
  double h_base = 0.0;         // Markov entropy of the equilibrium state
  double mean_roof = 0.0;      // int roof_bar dmu
  double h_timechanged = 0.0;  // h_base / mean_roof
  double mean_q = 0.0;         // int q dmu
  double ratio_check = 0.0;    // |s - (h_timechanged + beta mean_q / mean_roof)|
};

/// Equilibrium state of the suspension with normalized roof
/// roof_bar = roof / d_minus_1 at parameter beta.
AbramovResult abramov_timechange(const MarkovModel& model, double beta = 0.0);

/// CSV `x,value`; kNegInf is written as -inf.
std::string curve_to_csv(const std::vector<double>& x, const std::vector<double>& value);

}  // namespace dwlab::thermo
