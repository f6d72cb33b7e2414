#pragma once

// Full-order models f(u) = d + A u + B(u, u) on periodic fields, and the
// semi-implicit spectral timestepper used to simulate them.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sropinf/spectral_field.hpp"

namespace sropinf {

class QuadraticPde {
 public:
  using Symbol = std::function<cdouble(double wavenumber)>;
  using Bilinear = std::function<Field(const Field&, const Field&)>;

  QuadraticPde(std::string name, Field constant, Symbol linear_symbol, Bilinear bilinear,
               std::map<std::string, double> params)
      : name_(std::move(name)),
        constant_(std::move(constant)),
        symbol_(std::move(linear_symbol)),
        bilinear_(std::move(bilinear)),
        params_(std::move(params)) {}

  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }
  const Grid& grid() const { return constant_.grid(); }

  const Field& constant_term() const { return constant_; }
  cdouble symbol(double wavenumber) const { return symbol_(wavenumber); }

  Field apply_linear(const Field& u) const {
    CVector c = u.coeffs();
    for (int k = 0; k < c.size(); ++k) c(k) *= symbol_(u.grid().wavenumber(k));
    return Field(u.grid(), std::move(c));
  }

  /// Symmetric bilinear term; returns zero for linear models.
  Field bilinear(const Field& u, const Field& v) const {
    if (!bilinear_) return Field(u.grid());
    return bilinear_(u, v);
  }
  bool is_linear() const { return !bilinear_; }

 private:
  std::string name_;
  Field constant_;
  Symbol symbol_;
  Bilinear bilinear_;
  std::map<std::string, double> params_;
};

/// u_t = -u u_x - u_xx - nu u_xxxx.
inline QuadraticPde kse(const Grid& grid, double nu) {
  if (!(nu > 0.0)) throw DimensionError("KSE viscosity must be positive");
  return QuadraticPde(
      "kse", Field(grid), [nu](double k) { return cdouble(k * k - nu * k * k * k * k, 0.0); },
      [](const Field& u, const Field& v) { return derivative(quad_product(u, v), 1) * -0.5; },
      {{"nu", nu}});
}

/// u_t + a u_x = kappa u_xx.
inline QuadraticPde advection_diffusion(const Grid& grid, double speed, double diffusivity) {
  if (!(diffusivity >= 0.0)) throw DimensionError("diffusivity must be nonnegative");
  return QuadraticPde(
      "advection_diffusion", Field(grid),
      [speed, diffusivity](double k) { return cdouble(-diffusivity * k * k, -speed * k); },
      QuadraticPde::Bilinear{}, {{"a", speed}, {"kappa", diffusivity}});
}

inline Field evaluate_f(const QuadraticPde& pde, const Field& u) {
  return pde.constant_term() + pde.apply_linear(u) + pde.bilinear(u, u);
}

enum class TimeScheme {
  /// Low-storage RK3 for N, Crank-Nicolson for L inside each stage (Peyret).
  rk3_cn,
  /// Third-order L-stable IMEX Runge-Kutta ARS(3,4,3).
  ars343,
};

/// Semi-implicit timestepper for u' = L u + N(u), with L the diagonal linear
/// symbol and N(u) = d + B(u, u) treated explicitly. Implicit solves are
/// per-wavenumber divisions.
///
/// rk3_cn, stage s = 1..3:
///   Q_s = A_s Q_{s-1} + dt N(u_{s-1})
///   (1 - B'_s dt L) u_s = (1 + B'_s dt L) u_{s-1} + B_s Q_s
/// with A = (0, -5/9, -153/128), B = (1/3, 15/16, 8/15) and
/// B' = (1/6, 5/24, 1/8) (half of each stage's time increment).
/// The CN substeps make it second order overall.
///
/// ars343: Ascher, Ruuth & Spiteri (1997), gamma = 0.4358665215.
class SemiImplicitStepper {
 public:
  SemiImplicitStepper(const QuadraticPde& pde, double dt, TimeScheme scheme = TimeScheme::rk3_cn)
      : pde_(&pde), dt_(dt), scheme_(scheme) {
    if (!(dt > 0.0)) throw DimensionError("timestep must be positive");
    const Grid& g = pde.grid();
    symbol_ = CVector(g.size());
    for (int k = 0; k < g.size(); ++k) symbol_(k) = pde.symbol(g.wavenumber(k));
    if (scheme == TimeScheme::rk3_cn) {
      for (int s = 0; s < 3; ++s) {
        explicit_[s] = (1.0 + kCnWeight[s] * dt * symbol_.array()).matrix();
        implicit_inv_[s] = (1.0 / (1.0 - kCnWeight[s] * dt * symbol_.array())).matrix();
      }
    } else {
      implicit_inv_[0] = (1.0 / (1.0 - kArsGamma * dt * symbol_.array())).matrix();
    }
  }

  double dt() const { return dt_; }
  TimeScheme scheme() const { return scheme_; }
  const QuadraticPde& pde() const { return *pde_; }

  Field step(const Field& u) const {
    CVector next = scheme_ == TimeScheme::rk3_cn ? step_rk3_cn(u) : step_ars343(u);
    Field out(u.grid(), std::move(next));
    if (!out.is_finite()) throw BlowUpError("full-order state became non-finite");
    return out;
  }

 private:
  static constexpr double kRkA[3] = {0.0, -5.0 / 9.0, -153.0 / 128.0};
  static constexpr double kRkB[3] = {1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0};
  static constexpr double kCnWeight[3] = {1.0 / 6.0, 5.0 / 24.0, 1.0 / 8.0};
  static constexpr double kArsGamma = 0.4358665215084590;

  CVector nonlinear(const Grid& g, const CVector& c) const {
    const Field state(g, c);
    return (pde_->constant_term() + pde_->bilinear(state, state)).coeffs();
  }

  CVector step_rk3_cn(const Field& u) const {
    const Grid& g = u.grid();
    CVector x = u.coeffs();
    CVector q = CVector::Zero(g.size());
    for (int s = 0; s < 3; ++s) {
      q = kRkA[s] * q + dt_ * nonlinear(g, x);
      x = (explicit_[s].array() * x.array() + kRkB[s] * q.array()) * implicit_inv_[s].array();
    }
    return x;
  }

  CVector step_ars343(const Field& u) const {
    constexpr double g = kArsGamma;
    constexpr double b1 = -1.5 * g * g + 4.0 * g - 0.25;
    constexpr double b2 = 1.5 * g * g - 5.0 * g + 1.25;
    constexpr double a42 = 0.5529291480359398;
    constexpr double a43 = 0.5529291480359398;
    constexpr double a31 = (1.0 - 4.5 * g + 1.5 * g * g) * a42 +
                           (2.75 - 10.5 * g + 3.75 * g * g) * a43 - 3.5 + 13.0 * g -
                           4.5 * g * g;
    constexpr double a32 = (-1.0 + 4.5 * g - 1.5 * g * g) * a42 +
                           (-2.75 + 10.5 * g - 3.75 * g * g) * a43 + 4.0 - 12.5 * g +
                           4.5 * g * g;
    constexpr double a41 = 1.0 - a42 - a43;
    // Stage 0 is explicit; stages 1..3 are diagonally implicit with weight g.
    constexpr double ex[4][3] = {{0, 0, 0}, {g, 0, 0}, {a31, a32, 0}, {a41, a42, a43}};
    constexpr double im[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, (1.0 - g) / 2.0, 0}, {0, b1, b2}};
    constexpr double weights[4] = {0.0, b1, b2, g};

    const Grid& grid = u.grid();
    CVector stage[4], n[4], lin[4];
    stage[0] = u.coeffs();
    n[0] = nonlinear(grid, stage[0]);
    lin[0] = symbol_.cwiseProduct(stage[0]);
    for (int s = 1; s < 4; ++s) {
      CVector rhs = stage[0];
      for (int j = 0; j < s; ++j) rhs += dt_ * (ex[s][j] * n[j] + im[s][j] * lin[j]);
      stage[s] = rhs.cwiseProduct(implicit_inv_[0]);
      n[s] = nonlinear(grid, stage[s]);
      lin[s] = symbol_.cwiseProduct(stage[s]);
    }
    CVector out = stage[0];
    for (int j = 1; j < 4; ++j) out += dt_ * weights[j] * (n[j] + lin[j]);
    return out;
  }

  const QuadraticPde* pde_;
  double dt_;
  TimeScheme scheme_;
  CVector symbol_;
  CVector explicit_[3];
  CVector implicit_inv_[3];
};

inline Field step(const QuadraticPde& pde, const Field& u, double dt,
                  TimeScheme scheme = TimeScheme::rk3_cn) {
  return SemiImplicitStepper(pde, dt, scheme).step(u);
}

enum class VelocityMode { exact, forward_difference };

struct FomConfig {
  double dt = 1e-3;
  double t_final = 130.0;
  double record_interval = 0.01;
  /// First recorded time; earlier states are integrated but not stored.
  double record_start = 0.0;
  VelocityMode velocity = VelocityMode::exact;
  TimeScheme scheme = TimeScheme::rk3_cn;

  /// Number of FOM steps per recorded sample.
  int steps_per_record() const {
    const double ratio = record_interval / dt;
    const long r = std::lround(ratio);
    if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9 * ratio)
      throw DimensionError("record interval must be an integer multiple of the FOM timestep");
    return static_cast<int>(r);
  }

  void validate() const {
    if (!(dt > 0.0)) throw DimensionError("FOM timestep must be positive");
    if (!(t_final >= 0.0)) throw DimensionError("t_final must be nonnegative");
    if (record_start < 0.0 || record_start > t_final + 1e-12)
      throw DimensionError("record start must lie within [0, t_final]");
    (void)steps_per_record();
  }
};

struct SimulationResult {
  std::vector<double> times;
  std::vector<Field> states;
  /// f(u(t_m)); empty unless requested.
  std::vector<Field> velocities;
};

/// Integrates u' = f(u) from u0 at t = 0 and records every record_interval
/// starting at record_start.
inline SimulationResult simulate(const QuadraticPde& pde, const Field& u0, const FomConfig& cfg,
                                 bool record_velocities = true) {
  cfg.validate();
  const SemiImplicitStepper stepper(pde, cfg.dt, cfg.scheme);
  const int every = cfg.steps_per_record();
  const long total = std::lround(cfg.t_final / cfg.dt);
  const long first = std::lround(cfg.record_start / cfg.dt);

  SimulationResult out;
  Field u = u0;
  for (long step_index = 0; step_index <= total; ++step_index) {
    const bool record = step_index >= first && (step_index - first) % every == 0;
    if (record) {
      out.times.push_back(static_cast<double>(step_index) * cfg.dt);
      out.states.push_back(u);
      if (record_velocities && cfg.velocity == VelocityMode::exact)
        out.velocities.push_back(evaluate_f(pde, u));
    }
    if (step_index == total) break;
    u = stepper.step(u);
  }
  if (record_velocities && cfg.velocity == VelocityMode::forward_difference) {
    // (u(t_{m+1}) - u(t_m)) / dt_s; the last sample looks one interval past t_final.
    Field tail = out.states.back();
    for (int s = 0; s < every; ++s) tail = stepper.step(tail);
    for (std::size_t m = 0; m < out.states.size(); ++m) {
      const Field& ahead = m + 1 < out.states.size() ? out.states[m + 1] : tail;
      out.velocities.push_back((ahead - out.states[m]) * (1.0 / cfg.record_interval));
    }
  }
  return out;
}

/// Initial condition as a sum of a_k cos(kx) / b_k sin(kx) terms.
struct FourierTerm {
  int wavenumber = 1;
  bool is_sine = false;
  double amplitude = 1.0;
};

inline Field field_from_terms(const Grid& grid, const std::vector<FourierTerm>& terms) {
  Field u(grid);
  for (const auto& t : terms) {
    u += t.is_sine ? Field::fourier_mode(grid, t.wavenumber, 0.0, t.amplitude)
                   : Field::fourier_mode(grid, t.wavenumber, t.amplitude, 0.0);
  }
  return u;
}

/// -sin x + 2 cos 2x + 3 cos 3x - 4 sin 4x.
inline std::vector<FourierTerm> beating_wave_initial_terms() {
  return {{1, true, -1.0}, {2, false, 2.0}, {3, false, 3.0}, {4, true, -4.0}};
}

}  // namespace sropinf
