#pragma once

// Method of slices: template fitting, the slice condition, and the
// reconstruction equation for the shifting speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "sropinf/models.hpp"
#include "sropinf/spectral_field.hpp"

namespace sropinf {

class Template {
 public:
  Template() = default;
  explicit Template(Field u0) : u0_(std::move(u0)), du0_(derivative(u0_, 1)) {
    if (norm(du0_) <= 0.0) throw DimensionError("template must vary in x");
  }

  /// cos(2 pi x / L), the first Fourier mode.
  static Template first_mode(const Grid& grid) {
    return Template(Field::fourier_mode(grid, 1, 1.0));
  }

  const Field& profile() const { return u0_; }
  const Field& derivative_profile() const { return du0_; }
  const Grid& grid() const { return u0_.grid(); }

 private:
  Field u0_;
  Field du0_;
};

namespace detail {

/// <u, S_c u0> and its first two c-derivatives, from Fourier coefficients.
struct Correlation {
  CVector weights;  // u_k conj(t_k)
  Grid grid;
  double offset = 0.0;

  Correlation(const Field& u, const Template& tpl) : grid(u.grid()) {
    u.check_same_grid(tpl.profile());
    weights = u.coeffs().cwiseProduct(tpl.profile().coeffs().conjugate());
    offset = weights(0).real();
  }

  // Returns value, first and second derivative at c.
  std::array<double, 3> eval(double c) const {
    double v = offset, d1 = 0.0, d2 = 0.0;
    for (int k = 1; k < weights.size(); ++k) {
      const double kap = grid.wavenumber(k);
      const cdouble z = weights(k) * cdouble(std::cos(kap * c), std::sin(kap * c));
      v += 2.0 * z.real();
      d1 += -2.0 * kap * z.imag();
      d2 += -2.0 * kap * kap * z.real();
    }
    return {v, d1, d2};
  }
};

inline double wrap_to_branch(double c, double length, std::optional<double> c_prev) {
  if (c_prev) return c + length * std::round((*c_prev - c) / length);
  // Representative in [-L/2, L/2).
  double r = c - length * std::floor(c / length + 0.5);
  if (r >= 0.5 * length) r -= length;
  return r;
}

}  // namespace detail

/// Shift c maximizing <u, S_c u0>. A global scan over 8*n_modes points picks
/// the best basin; safeguarded Newton on the derivative refines it. With
/// c_prev the branch nearest c_prev is returned, otherwise the one in
/// [-L/2, L/2).
inline double fit_shift(const Field& u, const Template& tpl,
                        std::optional<double> c_prev = std::nullopt) {
  const detail::Correlation corr(u, tpl);
  const double L = u.grid().length();
  const int samples = std::max(8 * u.grid().n_modes(), 16);
  const double h = L / samples;

  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  double lo_val = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double v = corr.eval(j * h)[0];
    if (v > best_val) {
      best_val = v;
      best = j;
    }
    lo_val = std::min(lo_val, v);
    scale = std::max(scale, std::abs(v));
  }
  if (best_val - lo_val <= 1e-14 * std::max(1.0, scale))
    throw NoUniqueShiftError("correlation with the template is flat; no unique shift");

  // Bracket [a, b] around the sampled maximum; the derivative changes sign
  // from + to - inside it unless the maximum sits exactly on a node.
  double a = (best - 1) * h, b = (best + 1) * h;
  double c = best * h;
  for (int it = 0; it < 100; ++it) {
    const auto [v, d1, d2] = corr.eval(c);
    (void)v;
    double next = d2 < 0.0 ? c - d1 / d2 : std::numeric_limits<double>::quiet_NaN();
    if (d1 > 0.0)
      a = c;
    else
      b = c;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const double update = next - c;
    c = next;
    if (std::abs(update) < 1e-12) break;
  }
  return detail::wrap_to_branch(c, L, c_prev);
}

struct AlignedField {
  Field profile;
  double shift = 0.0;
};

/// u_hat = S_{-c} u with c from fit_shift.
inline AlignedField slice_align(const Field& u, const Template& tpl,
                                std::optional<double> c_prev = std::nullopt) {
  const double c = fit_shift(u, tpl, c_prev);
  return {shift(u, -c), c};
}

/// Shifting speed -<f(u_hat), u0'> / <u_hat', u0'>.
inline double reconstruction_speed(const Field& profile, const Field& velocity,
                                   const Template& tpl) {
  const Field dprofile = derivative(profile, 1);
  const Field& du0 = tpl.derivative_profile();
  const double den = inner_product(dprofile, du0);
  if (std::abs(den) < 1e-12 * norm(dprofile) * norm(du0) || den == 0.0)
    throw SliceSingularityError("reconstruction equation is singular: <u_hat', u0'> ~ 0");
  return -inner_product(velocity, du0) / den;
}

/// f(u_hat) + c_dot u_hat', the dynamics in the co-moving frame.
inline Field moving_frame_rhs(const QuadraticPde& pde, const Field& profile,
                              const Template& tpl) {
  const Field f = evaluate_f(pde, profile);
  const double cdot = reconstruction_speed(profile, f, tpl);
  return f + derivative(profile, 1) * cdot;
}

/// Template-fitted trajectory: profiles, their velocities, shifts and speeds.
struct SnapshotDataset {
  std::vector<double> times;
  std::vector<Field> profiles;
  std::vector<Field> velocities;
  std::vector<double> shifts;
  std::vector<double> speeds;

  std::size_t size() const { return times.size(); }
};

/// Aligns every snapshot with branch continuation, maps the velocities by
/// f(u_hat) = S_{-c} f(u) and evaluates the reconstruction equation.
inline SnapshotDataset align_snapshots(const std::vector<double>& times,
                                       const std::vector<Field>& states,
                                       const std::vector<Field>& velocities,
                                       const Template& tpl) {
  if (states.size() != times.size() || velocities.size() != times.size())
    throw DimensionError("times, states and velocities must have equal length");
  SnapshotDataset out;
  std::optional<double> prev;
  for (std::size_t m = 0; m < states.size(); ++m) {
    const AlignedField al = slice_align(states[m], tpl, prev);
    prev = al.shift;
    Field fhat = shift(velocities[m], -al.shift);
    out.times.push_back(times[m]);
    out.speeds.push_back(reconstruction_speed(al.profile, fhat, tpl));
    out.profiles.push_back(al.profile);
    out.velocities.push_back(std::move(fhat));
    out.shifts.push_back(al.shift);
  }
  return out;
}

inline SnapshotDataset align_snapshots(const SimulationResult& sim, const Template& tpl) {
  return align_snapshots(sim.times, sim.states, sim.velocities, tpl);
}

}  // namespace sropinf
