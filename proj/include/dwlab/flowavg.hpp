#pragma once

// Geodesic flow on the unit tangent bundle of the hyperbolic plane in the
// group model PSL(2,R): G^t(g) = g diag(e^{t/2}, e^{-t/2}). Birkhoff
// averages, the averaging corrector g_T and its time-changed variant.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "dwlab/common.hpp"

namespace dwlab::flowavg {

using Mat2 = Eigen::Matrix2d;

struct FlowPoint {
  Mat2 g = Mat2::Identity();

  static FlowPoint identity() { return {}; }
  /// Rescales g to determinant 1; rejects det <= 0.
  static FlowPoint from_matrix(const Mat2& m);
};

/// Right multiplication by diag(e^{t/2}, e^{-t/2}); |t| > 600 is rejected.
FlowPoint geodesic_flow(const FlowPoint& p, double t);

struct Observable {
  std::function<double(const Mat2&)> eval;
  std::string name;

  double operator()(const FlowPoint& p) const { return eval(p.g); }
};

Observable constant_observable(double c);

/// Three bounded smooth test observables built from matrix coefficients:
///   0: g11^2 / (1 + g11^2 + g12^2)
///   1: (g11 g22 + g12 g21) / |g|_F^2
///   2: sin(g11 g21 / (1 + g21^2))
Observable test_observable(int which);

/// Sum of q(h g) over a finite list of group elements h.
Observable periodize(const Observable& q, const std::vector<Mat2>& elements);

/// (1/T) int_{-T/2}^{T/2} q(G^s p) ds by composite Simpson. The step is
/// shortened so that it divides T/2 into an even number of panels.
double birkhoff_average(const Observable& q, const FlowPoint& p, double T, double step);

/// g_T = 1/2 int_0^{T/2} (2s/T - 1) q(G^s p) ds + 1/2 int_{-T/2}^0 (2s/T + 1) q(G^s p) ds.
double averaging_corrector(const Observable& q, const FlowPoint& p, double T, double step);

/// |(g_T(G^h p) - g_T(G^{-h} p)) / 2h - (q(p) - <q>_T(p))|.
double cohomology_residual(const Observable& q, const FlowPoint& p, double T, double fd_step,
                           double step = 1e-3);

/// Root tau of int_0^tau phi(G^s p) ds = d_minus_1 * t. Throws DomainError
/// when phi is not positive at a sampled node.
double time_change(const Observable& phi, const FlowPoint& p, double t, double d_minus_1,
                   double step = 1e-3);

/// With tau+ = time_change(T/2) and tau- = time_change(-T/2):
/// 1/2 int_0^{tau+} (s/tau+ - 1) q ds + 1/2 int_{tau-}^0 (s/|tau-| + 1) q ds.
double averaging_corrector_variable(const Observable& q, const Observable& phi,
                                    const FlowPoint& p, double T, double d_minus_1,
                                    double step = 1e-3);

struct VariableResidual {
  double tau_minus = 0.0;
  double tau_plus = 0.0;
  double derivative = 0.0;        // central difference of the corrector
  double window_average = 0.0;    // (tau+ - tau-)^{-1} int_{tau-}^{tau+} q
  double residual = 0.0;          // |derivative - (q(p) - window_average)|
  double correction = 0.0;        // endpoint-motion and weighting terms
  double exact_residual = 0.0;    // residual after removing the correction
};

VariableResidual variable_cohomology_residual(const Observable& q, const Observable& phi,
                                              const FlowPoint& p, double T, double d_minus_1,
                                              double fd_step, double step = 1e-3);

/// CSV `t,g11,g12,g21,g22,q_value` at n + 1 equally spaced times.
std::string trajectory_csv(const Observable& q, const FlowPoint& p, double t0, double t1, int n);

}  // namespace dwlab::flowavg
