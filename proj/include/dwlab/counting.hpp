#pragma once

// Counting zeros and eigenvalues in complex windows: exact winding numbers,
// Jensen upper bounds, semiclassical window counts and log-log exponent fits.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "dwlab/common.hpp"
#include "dwlab/dwcore.hpp"

namespace dwlab::counting {

struct ComplexWindow {
  enum class Shape { Rectangle, Disk };

  Shape shape = Shape::Rectangle;
  cplx center{0.0, 0.0};
  double half_width = 1.0;   // rectangle
  double half_height = 1.0;  // rectangle
  double radius = 1.0;       // disk

  static ComplexWindow rectangle(cplx center, double half_width, double half_height);
  static ComplexWindow disk(cplx center, double radius);

  void validate() const;
  bool contains(cplx z) const;
  /// Boundary point at parameter s in [0, 1), counterclockwise.
  cplx boundary(double s) const;
};

struct HolomorphicSampler {
  std::function<cplx(cplx)> eval;
  ComplexWindow domain;  // declared analyticity domain, with margin

  cplx operator()(cplx z) const { return eval(z); }
};

/// Sum of coeffs[k] z^k by Horner's rule; analytic everywhere.
HolomorphicSampler polynomial_sampler(std::vector<cplx> coeffs);

/// det(I + sum_k z^k K_k) for square matrices of a common size.
HolomorphicSampler determinant_sampler(std::vector<Eigen::MatrixXcd> coeffs);

/// Winding number of f along the window boundary. Starts from n_points
/// equally spaced samples and bisects any step whose phase change exceeds
/// pi/4. A step that cannot be resolved, or |f| below 1e-10 of the boundary
/// maximum, is reported as a zero near the contour (DomainError). A winding
/// number that is not within 0.01 of an integer triggers up to four
/// doublings of n_points, then ConvergenceError.
int argument_principle_zeros(const HolomorphicSampler& f, const ComplexWindow& contour,
                             int n_points = 1024);

/// (log max_{|z - z0| = R_big} |f| - log |f(z0)|) / log(R_big / r), an upper
/// bound for the zeros in the closed disk of radius r. The boundary maximum
/// is taken over n_boundary samples, each local maximum refined by golden
/// section in the angle.
double jensen_disk_bound(const HolomorphicSampler& f, cplx z0, double r, double R_big,
                         int n_boundary = 2048);

/// Covers a rectangle by the 4 disks circumscribing its quadrants and sums
/// their Jensen bounds, each with R_big = ratio * r.
double jensen_rectangle_bound(const HolomorphicSampler& f, const ComplexWindow& rect,
                              double ratio = 2.0, int n_boundary = 2048);

enum class Side { Above, Below };

std::string to_string(Side side);
Side side_from_string(const std::string& s);

/// Number of z with |Re z - 1/2| <= c hbar and Im z / hbar >= alpha (Above)
/// or <= alpha (Below). The spectrum's hbar must match to 1e-12 relative.
long window_count(const dwcore::SemiclassicalSpectrum& spectrum, double hbar, double c,
                  double alpha, Side side);

struct LadderPoint {
  double hbar = 0.0;
  double count = 0.0;
};

struct ExponentFit {
  double slope = 0.0;     // kNegInf when some count is zero
  double intercept = 0.0;
  double residual = 0.0;  // rms of log(count) about the fitted line
};

/// Least-squares slope of log(count) against |log hbar|. Needs at least 4
/// points with hbar decreasing by a factor of at least 2 at each step.
ExponentFit deviation_exponent(const std::vector<LadderPoint>& ladder);

struct CountRow {
  double hbar = 0.0;
  double c = 0.0;
  double alpha = 0.0;
  Side side = Side::Above;
  long count = 0;
};

/// CSV `hbar,c,alpha,side,count`; with a fit, appends `# slope=...,residual=...`.
std::string count_csv(const std::vector<CountRow>& rows, const ExponentFit* fit = nullptr);

}  // namespace dwlab::counting
