#pragma once

// Reduced operators of the symmetry-reduced model
//
//   a_i' = d_i + A_ij a_j + B_ijk a_j a_k + cdot(a) (b_i + C_ij a_j),
//   cdot(a) = -(e + p_j a_j + Q_jk a_j a_k) / (w + s_j a_j),
//
// their intrusive (Galerkin) assembly, and adaptive time integration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sropinf/models.hpp"
#include "sropinf/pod.hpp"
#include "sropinf/spectral_field.hpp"
#include "sropinf/symmetry.hpp"

namespace sropinf {

/// Number of index pairs j <= k for n reduced coordinates.
inline int pair_count(int n) { return n * (n + 1) / 2; }

/// Position of the pair (j, k), j <= k, in the row-major packed upper triangle.
inline int sym_index(int j, int k, int n) {
  if (j > k) std::swap(j, k);
  return j * n - j * (j - 1) / 2 + (k - j);
}

/// Quadratic regressors a_j a_k for j <= k, with off-diagonal pairs counted
/// twice so that a packed symmetric tensor contracts as its full form.
inline Vector quadratic_features(const Vector& a) {
  const int n = static_cast<int>(a.size());
  Vector q(pair_count(n));
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) q(idx++) = (j == k ? 1.0 : 2.0) * a(j) * a(k);
  return q;
}

struct GeometryCoefficients {
  Vector b;  // <d/dx u_bar, phi_i>
  Matrix C;  // <d/dx phi_j, phi_i>
  double w = 0.0;  // <d/dx u_bar, d/dx u0>
  Vector s;  // <d/dx phi_j, d/dx u0>
  /// w and every s_j vanish: the reconstruction equation is singular everywhere
  /// on the reduced subspace.
  bool degenerate_slice = false;

  int dimension() const { return static_cast<int>(b.size()); }
};

struct DynamicsCoefficients {
  Vector d;
  Matrix A;
  /// n x n(n+1)/2; column sym_index(j, k) holds B_ijk = B_ikj.
  Matrix B;
  double e = 0.0;
  Vector p;
  /// Packed Q_jk = Q_kj, length n(n+1)/2.
  Vector Q;

  static DynamicsCoefficients zeros(int n) {
    return {Vector::Zero(n), Matrix::Zero(n, n), Matrix::Zero(n, pair_count(n)), 0.0,
            Vector::Zero(n), Vector::Zero(pair_count(n))};
  }

  int dimension() const { return static_cast<int>(d.size()); }
  double b_full(int i, int j, int k) const { return B(i, sym_index(j, k, dimension())); }
  double q_full(int j, int k) const { return Q(sym_index(j, k, dimension())); }

  /// d + A a + B(a, a).
  Vector polynomial(const Vector& a) const { return d + A * a + B * quadratic_features(a); }
  /// e + p.a + a^T Q a.
  double speed_numerator(const Vector& a) const {
    return e + p.dot(a) + Q.dot(quadratic_features(a));
  }

  void check() const {
    const int n = dimension();
    if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != pair_count(n) ||
        p.size() != n || Q.size() != pair_count(n))
      throw DimensionError("inconsistent reduced operator sizes for n=" + std::to_string(n));
  }
};

enum class SpeedModel {
  /// Learned or projected rational model cdot(a) = -(e + p.a + a^T Q a)/(w + s.a).
  rational,
  /// Reconstruct f and u from the polynomial part and evaluate the full-order
  /// reconstruction equation on them. Fails when f leaves span{phi_i}.
  naive,
};

struct SrRomOperators {
  GeometryCoefficients geometry;
  DynamicsCoefficients dynamics;
  ReducedBasis basis;
  Template tpl;
  SpeedModel speed_model = SpeedModel::rational;

  int dimension() const { return dynamics.dimension(); }

  void check() const {
    dynamics.check();
    const int n = dimension();
    if (geometry.dimension() != n || geometry.C.rows() != n || geometry.C.cols() != n ||
        geometry.s.size() != n || basis.dimension() != n)
      throw DimensionError("geometry, dynamics and basis disagree on the reduced dimension");
  }
};

inline GeometryCoefficients assemble_geometry(const ReducedBasis& basis, const Template& tpl) {
  const int n = basis.dimension();
  const Field dmean = derivative(basis.mean, 1);
  const Field& du0 = tpl.derivative_profile();
  GeometryCoefficients g{Vector(n), Matrix(n, n), inner_product(dmean, du0), Vector(n)};
  for (int j = 0; j < n; ++j) {
    const Field dphi = derivative(basis.modes[j], 1);
    g.s(j) = inner_product(dphi, du0);
    for (int i = 0; i < n; ++i) g.C(i, j) = inner_product(dphi, basis.modes[i]);
  }
  for (int i = 0; i < n; ++i) g.b(i) = inner_product(dmean, basis.modes[i]);

  const double scale = norm(dmean) * norm(du0) + 1.0;
  double largest = std::abs(g.w);
  for (int j = 0; j < n; ++j) largest = std::max(largest, std::abs(g.s(j)));
  g.degenerate_slice = largest <= 1e-12 * scale;
  return g;
}

namespace detail {

/// Galerkin coefficients of f(u_bar + sum a_j phi_j) tested against each of
/// `tests`: returns rows (constant, linear n, packed quadratic).
struct ProjectedPolynomial {
  Vector constant;
  Matrix linear;
  Matrix quadratic;
};

inline ProjectedPolynomial project_dynamics(const QuadraticPde& pde, const ReducedBasis& basis,
                                            const std::vector<const Field*>& tests) {
  const int n = basis.dimension();
  const int rows = static_cast<int>(tests.size());
  const Field& mean = basis.mean;

  const Field f0 = pde.constant_term() + pde.apply_linear(mean) + pde.bilinear(mean, mean);
  std::vector<Field> f1;
  for (int j = 0; j < n; ++j) {
    const Field& phi = basis.modes[j];
    f1.push_back(pde.apply_linear(phi) + pde.bilinear(mean, phi) + pde.bilinear(phi, mean));
  }

  ProjectedPolynomial out{Vector(rows), Matrix(rows, n), Matrix(rows, pair_count(n))};
  for (int r = 0; r < rows; ++r) {
    out.constant(r) = inner_product(f0, *tests[r]);
    for (int j = 0; j < n; ++j) out.linear(r, j) = inner_product(f1[j], *tests[r]);
  }
  if (!pde.is_linear()) {
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        const Field& pj = basis.modes[j];
        const Field& pk = basis.modes[k];
        const Field q = (pde.bilinear(pj, pk) + pde.bilinear(pk, pj)) * 0.5;
        for (int r = 0; r < rows; ++r) out.quadratic(r, sym_index(j, k, n)) = inner_product(q, *tests[r]);
      }
    }
  } else {
    out.quadratic.setZero();
  }
  return out;
}

}  // namespace detail

/// Standard Galerkin model a' = d + A a + B(a, a); speed terms are zero.
inline DynamicsCoefficients assemble_standard_galerkin(const QuadraticPde& pde,
                                                       const ReducedBasis& basis) {
  const int n = basis.dimension();
  std::vector<const Field*> tests;
  for (const auto& phi : basis.modes) tests.push_back(&phi);
  const auto proj = detail::project_dynamics(pde, basis, tests);
  DynamicsCoefficients dyn = DynamicsCoefficients::zeros(n);
  dyn.d = proj.constant;
  dyn.A = proj.linear;
  dyn.B = proj.quadratic;
  return dyn;
}

/// Symmetry-reduced Galerkin model: the polynomial part tested against phi_i
/// and the speed numerator tested against d/dx u0.
inline SrRomOperators assemble_sr_galerkin(const QuadraticPde& pde, const ReducedBasis& basis,
                                           const Template& tpl) {
  const int n = basis.dimension();
  std::vector<const Field*> tests;
  for (const auto& phi : basis.modes) tests.push_back(&phi);
  tests.push_back(&tpl.derivative_profile());
  const auto proj = detail::project_dynamics(pde, basis, tests);

  DynamicsCoefficients dyn = DynamicsCoefficients::zeros(n);
  dyn.d = proj.constant.head(n);
  dyn.A = proj.linear.topRows(n);
  dyn.B = proj.quadratic.topRows(n);
  dyn.e = proj.constant(n);
  dyn.p = proj.linear.row(n).transpose();
  dyn.Q = proj.quadratic.row(n).transpose();
  return {assemble_geometry(basis, tpl), std::move(dyn), basis, tpl, SpeedModel::rational};
}

namespace detail {

inline double checked_ratio(double num, double den) {
  if (!(std::abs(den) >= 1e-12))
    throw SliceSingularityError("reduced reconstruction equation is singular (|w + s.a| = " +
                                std::to_string(std::abs(den)) + ")");
  return -num / den;
}

}  // namespace detail

/// Rational speed model. Throws SliceSingularityError when |w + s.a| < 1e-12.
inline double shifting_speed(const SrRomOperators& ops, const Vector& a) {
  const double den = ops.geometry.w + ops.geometry.s.dot(a);
  return detail::checked_ratio(ops.dynamics.speed_numerator(a), den);
}

/// -<f~(a), u0'> / <u~(a)', u0'> with f~ = sum_i f_i(a) phi_i, u~ = u_bar + sum a_i phi_i.
inline double naive_shifting_speed(const DynamicsCoefficients& dyn, const ReducedBasis& basis,
                                   const Template& tpl, const Vector& a) {
  const Field& du0 = tpl.derivative_profile();
  const Vector fa = dyn.polynomial(a);
  double num = 0.0;
  for (int i = 0; i < basis.dimension(); ++i) num += fa(i) * inner_product(basis.modes[i], du0);
  const double den = inner_product(derivative(reconstruct(basis, a), 1), du0);
  return detail::checked_ratio(num, den);
}

inline double rom_speed(const SrRomOperators& ops, const Vector& a) {
  return ops.speed_model == SpeedModel::naive
             ? naive_shifting_speed(ops.dynamics, ops.basis, ops.tpl, a)
             : shifting_speed(ops, a);
}

struct RomRhs {
  Vector adot;
  double cdot = 0.0;
};

inline RomRhs sr_rom_rhs(const SrRomOperators& ops, const Vector& a) {
  if (a.size() != ops.dimension())
    throw DimensionError("reduced state has length " + std::to_string(a.size()) +
                         ", model has n=" + std::to_string(ops.dimension()));
  const double cdot = rom_speed(ops, a);
  return {ops.dynamics.polynomial(a) + cdot * (ops.geometry.b + ops.geometry.C * a), cdot};
}

enum class ShiftAccumulation { per_step, per_sample };

struct IntegratorConfig {
  double initial_step = 1e-3;
  double tolerance = 1e-6;
  double min_step = 1e-5;
  double max_step = std::numeric_limits<double>::infinity();
  double sample_interval = 0.01;
  ShiftAccumulation accumulation = ShiftAccumulation::per_step;
  /// Guard against runaway step counts (each step is at least min_step, so
  /// this is only reached for pathological tolerances).
  long max_steps = 50'000'000;

  void validate() const {
    if (!(initial_step > 0.0) || !(tolerance > 0.0) || !(min_step > 0.0) ||
        !(max_step >= min_step) || !(sample_interval > 0.0))
      throw ConfigError("integrator steps and tolerance must be positive with max_step >= min_step");
  }
};

enum class RomStatus { completed, blow_up, slice_singularity };

inline std::string to_string(RomStatus s) {
  switch (s) {
    case RomStatus::completed:
      return "completed";
    case RomStatus::blow_up:
      return "blow-up";
    case RomStatus::slice_singularity:
      return "slice-singularity";
  }
  return "unknown";
}

struct RomTrajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> shifts;
  std::vector<double> speeds;
  RomStatus status = RomStatus::completed;
  /// Time the integration stopped (t_span end when completed).
  double t_stop = 0.0;
  long accepted_steps = 0;
  long rejected_steps = 0;

  bool completed() const { return status == RomStatus::completed; }
  std::size_t size() const { return times.size(); }
};

namespace detail {

/// Fehlberg's embedded 4(5) pair.
struct Fehlberg {
  static constexpr double c[6] = {0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0};
  static constexpr double a[6][5] = {
      {0, 0, 0, 0, 0},
      {1.0 / 4.0, 0, 0, 0, 0},
      {3.0 / 32.0, 9.0 / 32.0, 0, 0, 0},
      {1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0, 0},
      {439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0},
      {-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0}};
  static constexpr double b4[6] = {25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0,
                                   -1.0 / 5.0, 0.0};
  static constexpr double b5[6] = {16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0,
                                   -9.0 / 50.0, 2.0 / 55.0};
};

}  // namespace detail

/// Generic RKF45 for y' = rhs(y). Returns the trajectory sampled every
/// cfg.sample_interval by linear interpolation between accepted steps.
/// `on_step(y, h)` is called before every accepted step with the step start.
template <class Rhs, class OnStep>
RomTrajectory integrate_rkf45(Rhs&& rhs, const Vector& y0, double t0, double t1,
                              const IntegratorConfig& cfg, OnStep&& on_step) {
  cfg.validate();
  using F = detail::Fehlberg;
  RomTrajectory traj;
  const long n_samples = std::lround((t1 - t0) / cfg.sample_interval);
  if (n_samples < 0) throw ConfigError("forecast window end precedes its start");

  auto sample_time = [&](long m) { return t0 + static_cast<double>(m) * cfg.sample_interval; };

  traj.times.push_back(t0);
  traj.states.push_back(y0);
  long next_sample = 1;
  const double t_end = sample_time(n_samples);

  Vector y = y0;
  double t = t0;
  double h = std::min(cfg.initial_step, cfg.max_step);
  Vector k[6];
  while (next_sample <= n_samples) {
    if (traj.accepted_steps + traj.rejected_steps > cfg.max_steps) {
      traj.status = RomStatus::blow_up;
      break;
    }
    const bool last = t + h >= t_end - 1e-12 * std::max(1.0, std::abs(t_end));
    const double step = last ? t_end - t : h;

    try {
      for (int s = 0; s < 6; ++s) {
        Vector ys = y;
        for (int j = 0; j < s; ++j) ys += step * F::a[s][j] * k[j];
        k[s] = rhs(ys);
      }
    } catch (const SliceSingularityError&) {
      traj.status = RomStatus::slice_singularity;
      break;
    }
    Vector y4 = y, y5 = y;
    for (int s = 0; s < 6; ++s) {
      y4 += step * F::b4[s] * k[s];
      y5 += step * F::b5[s] * k[s];
    }
    const double err = (y5 - y4).lpNorm<Eigen::Infinity>() / step;
    if (!std::isfinite(err) || !y4.allFinite()) {
      traj.status = RomStatus::blow_up;
      break;
    }

    double factor = err > 0.0 ? 0.84 * std::pow(cfg.tolerance / err, 0.25) : 4.0;
    factor = std::clamp(factor, 0.1, 4.0);

    if (err <= cfg.tolerance) {
      on_step(y, step);
      const double t_new = last ? t_end : t + step;
      // Emit every sample in (t, t_new] by linear interpolation.
      while (next_sample <= n_samples && sample_time(next_sample) <= t_new + 1e-12) {
        const double ts = next_sample == n_samples ? t_end : sample_time(next_sample);
        const double theta = std::clamp((ts - t) / (t_new - t), 0.0, 1.0);
        traj.times.push_back(ts);
        traj.states.push_back((1.0 - theta) * y + theta * y4);
        ++next_sample;
      }
      y = std::move(y4);
      t = t_new;
      ++traj.accepted_steps;
      if (!last) h = std::min(step * factor, cfg.max_step);
    } else {
      ++traj.rejected_steps;
      h = step * factor;
    }
    if (h < cfg.min_step) {
      traj.status = RomStatus::blow_up;
      break;
    }
  }
  traj.t_stop = traj.status == RomStatus::completed ? t_end : t;
  return traj;
}

/// Integrates the SR-ROM from (a0, c0) over [t0, t1]. Blow-up (step size
/// below cfg.min_step or non-finite state) and slice singularity end the run
/// early and are reported through the trajectory status.
inline RomTrajectory integrate_rom(const SrRomOperators& ops, const Vector& a0, double c0,
                                   double t0, double t1, const IntegratorConfig& cfg = {}) {
  ops.check();
  double c = c0;
  double t_shift = t0;
  struct ShiftMark {
    double t, c;
  };
  std::vector<ShiftMark> marks{{t0, c0}};
  const bool per_step = cfg.accumulation == ShiftAccumulation::per_step;

  RomTrajectory traj = integrate_rkf45(
      [&](const Vector& a) { return sr_rom_rhs(ops, a).adot; }, a0, t0, t1, cfg,
      [&](const Vector& a, double h) {
        if (!per_step) return;
        c += rom_speed(ops, a) * h;
        t_shift += h;
        marks.push_back({t_shift, c});
      });

  // Speeds at the samples; a singular sample truncates the trajectory.
  for (std::size_t m = 0; m < traj.states.size(); ++m) {
    try {
      traj.speeds.push_back(rom_speed(ops, traj.states[m]));
    } catch (const SliceSingularityError&) {
      traj.times.resize(m);
      traj.states.resize(m);
      traj.status = RomStatus::slice_singularity;
      traj.t_stop = m > 0 ? traj.times.back() : t0;
      break;
    }
  }

  if (per_step) {
    // Linear interpolation of the accumulated shift between accepted steps.
    std::size_t j = 0;
    for (double ts : traj.times) {
      while (j + 1 < marks.size() && marks[j + 1].t < ts - 1e-12) ++j;
      if (j + 1 >= marks.size()) {
        traj.shifts.push_back(marks[j].c);
        continue;
      }
      const auto& m0 = marks[j];
      const auto& m1 = marks[j + 1];
      const double theta = std::clamp((ts - m0.t) / (m1.t - m0.t), 0.0, 1.0);
      traj.shifts.push_back((1.0 - theta) * m0.c + theta * m1.c);
    }
  } else {
    double acc = c0;
    for (std::size_t m = 0; m < traj.times.size(); ++m) {
      if (m > 0) acc += traj.speeds[m - 1] * (traj.times[m] - traj.times[m - 1]);
      traj.shifts.push_back(acc);
    }
  }
  return traj;
}

/// u(t_m) = S_{c(t_m)} (u_bar + sum_i a_i(t_m) phi_i).
inline std::vector<Field> reconstruct_solution(const SrRomOperators& ops,
                                               const RomTrajectory& traj) {
  std::vector<Field> out;
  out.reserve(traj.states.size());
  for (std::size_t m = 0; m < traj.states.size(); ++m)
    out.push_back(shift(reconstruct(ops.basis, traj.states[m]), traj.shifts[m]));
  return out;
}

}  // namespace sropinf
