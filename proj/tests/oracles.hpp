#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the routine it is used to check.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "sropinf/sropinf.hpp"

namespace oracle {

using namespace sropinf;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// Random real field with geometrically decaying spectrum. The top mode is
/// kept real when it sits on the grid Nyquist frequency.
inline Field random_field(const Grid& grid, Rng& rng, double decay = 0.75) {
  CVector c(grid.size());
  double amp = 1.0;
  for (int k = 0; k < grid.size(); ++k) {
    c(k) = cdouble(amp * gaussian(rng), k == 0 ? 0.0 : amp * gaussian(rng));
    amp *= decay;
  }
  if (2 * grid.n_modes() == grid.n_grid()) c(grid.n_modes()) = c(grid.n_modes()).real();
  return Field(grid, c);
}

inline Vector random_vector(int n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * gaussian(rng);
  return v;
}

/// Distance on the circle of circumference L.
inline double circular_distance(double a, double b, double L) {
  const double d = std::fmod(std::abs(a - b), L);
  return std::min(d, L - d);
}

/// Product of two truncated series by direct convolution over -K..K, then
/// truncated back to K.
inline CVector direct_product(const Field& u, const Field& v) {
  const int K = u.grid().n_modes();
  auto coef = [K](const Field& f, int k) -> cdouble {
    if (k > K || k < -K) return 0.0;
    return k >= 0 ? f.coeff(k) : std::conj(f.coeff(-k));
  };
  CVector out = CVector::Zero(K + 1);
  for (int k = 0; k <= K; ++k)
    for (int p = -K; p <= K; ++p) out(k) += coef(u, p) * coef(v, k - p);
  return out;
}

/// Maximizer of <u, S_c cos x>: the correlation is Re(u_1 e^{i kappa c}), so
/// c = -arg(u_1) / kappa_1.
inline double cosine_template_shift(const Field& u) {
  const double kappa = u.grid().wavenumber(1);
  return -std::arg(u.coeff(1)) / kappa;
}

/// Real coordinates in which the field inner product is Euclidean.
inline Vector euclidean_coordinates(const Field& f) {
  const int n = f.grid().size();
  Vector x(2 * n - 1);
  x(0) = f.coeff(0).real();
  for (int k = 1; k < n; ++k) {
    x(2 * k - 1) = std::sqrt(2.0) * f.coeff(k).real();
    x(2 * k) = std::sqrt(2.0) * f.coeff(k).imag();
  }
  return x;
}

/// Sum over snapshots of the squared distance to the affine subspace
/// mean + span(frame), with frame given in Euclidean coordinates.
inline double subspace_residual(const Matrix& centered, const Matrix& frame) {
  const Matrix r = centered - frame * (frame.transpose() * centered);
  return r.squaredNorm();
}

inline Vector central_difference_gradient(const std::function<double(const Vector&)>& f,
                                          const Vector& x, double h) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Random orthonormal-ish reduced geometry with a safely nonzero slice
/// denominator on |a| <= 1.
inline GeometryCoefficients random_geometry(int n, Rng& rng) {
  GeometryCoefficients g;
  g.b = random_vector(n, rng, 0.5);
  Matrix m = Matrix::NullaryExpr(n, n, [&] { return 0.5 * gaussian(rng); });
  g.C = m - m.transpose();
  g.w = 2.0;
  g.s = random_vector(n, rng, 0.1);
  return g;
}

inline DynamicsCoefficients random_dynamics(int n, Rng& rng) {
  DynamicsCoefficients d = DynamicsCoefficients::zeros(n);
  d.d = random_vector(n, rng, 0.1);
  d.A = -Matrix::Identity(n, n) + 0.2 * Matrix::NullaryExpr(n, n, [&] { return gaussian(rng); });
  d.B = 0.1 * Matrix::NullaryExpr(n, pair_count(n), [&] { return gaussian(rng); });
  d.e = 0.3 * gaussian(rng);
  d.p = random_vector(n, rng, 0.3);
  d.Q = random_vector(pair_count(n), rng, 0.3);
  return d;
}

/// Exact tuples from integrating a'(t) = poly(a) + cdot (b + C a) with the
/// rational speed, over several short trajectories from random starts.
inline std::vector<TrainingTuple> synthetic_tuples(const DynamicsCoefficients& dyn,
                                                   const GeometryCoefficients& geo, Rng& rng,
                                                   int trajectories, double horizon,
                                                   double spread = 0.6) {
  const int n = dyn.dimension();
  auto speed = [&](const Vector& a) { return -dyn.speed_numerator(a) / (geo.w + geo.s.dot(a)); };
  auto rhs = [&](const Vector& a) -> Vector {
    return dyn.polynomial(a) + speed(a) * (geo.b + geo.C * a);
  };
  IntegratorConfig cfg;
  cfg.sample_interval = 0.05;
  std::vector<TrainingTuple> out;
  for (int j = 0; j < trajectories; ++j) {
    const Vector a0 = random_vector(n, rng, spread);
    const RomTrajectory tr = integrate_rkf45(rhs, a0, 0.0, horizon, cfg, [](const Vector&, double) {});
    for (std::size_t m = 0; m < tr.size(); ++m) {
      const Vector& a = tr.states[m];
      out.push_back({tr.times[m], a, dyn.polynomial(a), geo.b + geo.C * a, speed(a)});
    }
  }
  return out;
}

inline double relative_difference(const Vector& x, const Vector& ref) {
  return (x - ref).norm() / ref.norm();
}

}  // namespace oracle
