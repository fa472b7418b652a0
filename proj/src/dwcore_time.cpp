#include <cmath>
#include <sstream>

#include "dwlab/dwcore.hpp"

namespace dwlab::dwcore {

namespace {

// Banded Hermitian damping operator stored by diagonals: y = A x.
struct BandedOp {
  int N = 0;
  int deg = 0;
  std::vector<cplx> coeff;  // coeff[k + deg] = a_hat(k)

  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    y.setZero(N);
    for (int k = -deg; k <= deg; ++k) {
      const cplx c = coeff[k + deg];
      if (c == cplx(0.0)) continue;
      const int lo = std::max(0, k);
      const int hi = std::min(N, N + k);
      for (int i = lo; i < hi; ++i) y[i] += c * x[i - k];
    }
  }
};

// v <- (I + h A)^{-1} (I - h A) v, the Cayley transform of -2A over a
// half step (h = dt/2). The solve is a Neumann series: ||h A|| <= h max|a|
// is small at CFL-sized steps.
void cayley(const BandedOp& A, double h, double norm_a, Eigen::VectorXcd& v,
            Eigen::VectorXcd& work, Eigen::VectorXcd& term) {
  A.apply(v, work);
  const Eigen::VectorXcd rhs = v - h * work;
  if (h * norm_a >= 0.5)
    throw DomainError("energy_decay_rate: damping too large for the time step");
  v = rhs;
  term = rhs;
  for (int it = 0; it < 200; ++it) {
    A.apply(term, work);
    term = -h * work;
    v += term;
    if (term.norm() <= 1e-17 * v.norm()) return;
  }
  throw ConvergenceError("energy_decay_rate: Neumann solve did not converge");
}

}  // namespace

InitialData InitialData::single_mode(int K, int n) {
  if (n == 0 || std::abs(n) > K) throw DomainError("single_mode: need 1 <= |n| <= K");
  InitialData d;
  d.u = Eigen::VectorXcd::Zero(2 * K + 1);
  d.v = Eigen::VectorXcd::Zero(2 * K + 1);
  d.u[K + n] = 0.5;  // cos(nx)
  d.u[K - n] = 0.5;
  return d;
}

InitialData InitialData::generic(int K, int nmax, std::uint64_t seed) {
  if (nmax < 1 || nmax > K) throw DomainError("generic: need 1 <= nmax <= K");
  InitialData d;
  d.u = Eigen::VectorXcd::Zero(2 * K + 1);
  d.v = Eigen::VectorXcd::Zero(2 * K + 1);
  CounterRng rng(seed, 0x5eed);
  for (int n = 1; n <= nmax; ++n) {
    const cplx cu(rng.uniform() - 0.5, rng.uniform() - 0.5);
    const cplx cv(rng.uniform() - 0.5, rng.uniform() - 0.5);
    d.u[K + n] = cu / static_cast<double>(n);
    d.u[K - n] = std::conj(cu) / static_cast<double>(n);
    d.v[K + n] = cv;
    d.v[K - n] = std::conj(cv);
  }
  return d;
}

EnergyDecay energy_decay_rate(const DampingProfile& profile, int K, const InitialData& u0,
                              double Tmax) {
  if (profile.twist != 0.0) throw DomainError("energy_decay_rate: twist must be zero");
  if (profile.min_value() < -1e-12) throw DomainError("energy_decay_rate: damping must be >= 0");
  if (!(Tmax > 0.0)) throw DomainError("energy_decay_rate: Tmax must be positive");
  const int N = 2 * K + 1;
  if (u0.u.size() != N || u0.v.size() != N)
    throw DomainError("energy_decay_rate: initial data size does not match K");
  if (profile.degree() > K) throw DomainError("energy_decay_rate: profile degree exceeds K");

  BandedOp A;
  A.N = N;
  A.deg = profile.degree();
  for (int k = -A.deg; k <= A.deg; ++k) A.coeff.push_back(profile.fourier_coeff(k));
  double norm_a = std::abs(profile.mean);
  for (int k = 1; k <= A.deg; ++k) norm_a += 2.0 * std::abs(profile.fourier_coeff(k));

  const double dt = 0.2 / K;
  const long steps = std::lround(std::ceil(Tmax / dt));
  Eigen::VectorXd n2(N), weight(N);
  for (int i = 0; i < N; ++i) {
    const double n = QuadraticPencil::mode_of(i, K);
    n2[i] = n * n;
    weight[i] = n * n * (1.0 - dt * dt * n * n / 4.0);
  }
  auto energy = [&](const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
    double e = 0.0;
    for (int i = 0; i < N; ++i) e += weight[i] * std::norm(u[i]) + std::norm(v[i]);
    return e;
  };

  Eigen::VectorXcd u = u0.u, v = u0.v, work(N), term(N);
  EnergyDecay out;
  out.dt = dt;
  const double e0 = energy(u, v);
  if (!(e0 > 0.0)) throw DomainError("energy_decay_rate: initial energy is zero");
  const long sample_every = std::max(1L, steps / 2000);
  out.times.push_back(0.0);
  out.energies.push_back(e0);
  double prev = e0;
  for (long s = 1; s <= steps; ++s) {
    cayley(A, dt / 2.0, norm_a, v, work, term);
    v.array() -= (dt / 2.0) * n2.array() * u.array();
    u += dt * v;
    v.array() -= (dt / 2.0) * n2.array() * u.array();
    cayley(A, dt / 2.0, norm_a, v, work, term);
    const double e = energy(u, v);
    if (e > prev * (1.0 + 1e-12) + 1e-300) {
      std::ostringstream msg;
      msg << "energy_decay_rate: energy grew from " << prev << " to " << e << " at t = " << s * dt;
      throw ConvergenceError(msg.str());
    }
    prev = e;
    if (s % sample_every == 0 || s == steps) {
      out.times.push_back(s * dt);
      out.energies.push_back(e);
    }
  }

  // log-linear least squares over [Tmax/2, Tmax]
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long cnt = 0;
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    if (out.times[i] < Tmax / 2.0) continue;
    const double y = std::log(out.energies[i]);
    sx += out.times[i];
    sy += y;
    sxx += out.times[i] * out.times[i];
    sxy += out.times[i] * y;
    ++cnt;
  }
  if (cnt < 2) throw DomainError("energy_decay_rate: too few samples in the fit window");
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / cnt;
  double ss = 0.0;
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    if (out.times[i] < Tmax / 2.0) continue;
    const double r = std::log(out.energies[i]) - (icpt + slope * out.times[i]);
    ss += r * r;
  }
  out.rate = -slope;
  out.fit_rms = std::sqrt(ss / cnt);
  return out;
}

}  // namespace dwlab::dwcore
