#pragma once

// Real periodic scalar fields on [0, L) stored by their Fourier coefficients.
//
// A field with n_modes = K is
//
//   u(x) = c_0 + sum_{k=1..K} ( c_k e^{i kappa_k x} + conj(c_k) e^{-i kappa_k x} ),
//
// with kappa_k = 2 pi k / L. Only c_0..c_K are stored; c_0 is real. Grid
// values are a derived view on n_grid equispaced points.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sropinf/error.hpp"

namespace sropinf {

using cdouble = std::complex<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

class Grid {
 public:
  Grid() = default;
  Grid(double length, int n_modes, int n_grid)
      : length_(length), n_modes_(n_modes), n_grid_(n_grid) {
    if (!(length > 0.0) || !std::isfinite(length))
      throw DimensionError("grid length must be positive");
    if (n_modes < 1) throw DimensionError("grid needs at least one Fourier mode");
    if (n_grid < 2 * n_modes)
      throw DimensionError("n_grid must be at least 2*n_modes (got n_grid=" +
                           std::to_string(n_grid) + ", n_modes=" + std::to_string(n_modes) + ")");
  }

  double length() const { return length_; }
  int n_modes() const { return n_modes_; }
  int n_grid() const { return n_grid_; }
  /// Number of stored coefficients (k = 0..n_modes).
  int size() const { return n_modes_ + 1; }
  double wavenumber(int k) const { return 2.0 * std::numbers::pi * k / length_; }
  double x(int j) const { return length_ * j / n_grid_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double length_ = 2.0 * std::numbers::pi;
  int n_modes_ = 20;
  int n_grid_ = 40;
};

class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid) : grid_(grid), coeffs_(CVector::Zero(grid.size())) {}
  Field(const Grid& grid, CVector coeffs) : grid_(grid), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != grid_.size())
      throw DimensionError("coefficient count " + std::to_string(coeffs_.size()) +
                           " does not match grid size " + std::to_string(grid_.size()));
    coeffs_(0) = cdouble(coeffs_(0).real(), 0.0);
  }

  /// a cos(kappa_k x) + b sin(kappa_k x).
  static Field fourier_mode(const Grid& grid, int k, double cos_amp, double sin_amp = 0.0) {
    if (k < 0 || k > grid.n_modes()) throw DimensionError("wavenumber index out of range");
    Field f(grid);
    if (k == 0)
      f.coeffs_(0) = cos_amp;
    else
      f.coeffs_(k) = cdouble(0.5 * cos_amp, -0.5 * sin_amp);
    return f;
  }

  static Field constant(const Grid& grid, double value) { return fourier_mode(grid, 0, value); }

  /// Projects a callable onto the retained modes by sampling it on a grid
  /// fine enough to resolve every retained wavenumber without aliasing.
  template <class F>
  static Field from_function(const Grid& grid, F&& fn) {
    const int m = 4 * grid.size();
    std::vector<double> samples(m);
    for (int j = 0; j < m; ++j) samples[j] = fn(grid.length() * j / m);
    return from_samples(grid, samples);
  }

  /// Inverse of values() for an arbitrary number of equispaced samples.
  /// Wavenumbers at or above the sample Nyquist are set to zero, except the
  /// exact Nyquist mode whose real part is recovered.
  static Field from_samples(const Grid& grid, std::span<const double> samples) {
    const int m = static_cast<int>(samples.size());
    if (m < 2) throw DimensionError("need at least two samples");
    Field f(grid);
    for (int k = 0; k <= grid.n_modes(); ++k) {
      if (2 * k > m) break;
      cdouble acc = 0.0;
      for (int j = 0; j < m; ++j) {
        const double phase = -2.0 * std::numbers::pi * k * j / m;
        acc += samples[j] * cdouble(std::cos(phase), std::sin(phase));
      }
      acc /= static_cast<double>(m);
      if (2 * k == m && k != 0) acc = cdouble(0.5 * acc.real(), 0.0);
      f.coeffs_(k) = acc;
    }
    f.coeffs_(0) = cdouble(f.coeffs_(0).real(), 0.0);
    return f;
  }

  static Field from_grid_values(const Grid& grid, std::span<const double> values) {
    if (static_cast<int>(values.size()) != grid.n_grid())
      throw DimensionError("expected " + std::to_string(grid.n_grid()) + " grid values");
    return from_samples(grid, values);
  }

  const Grid& grid() const { return grid_; }
  const CVector& coeffs() const { return coeffs_; }
  cdouble coeff(int k) const { return coeffs_(k); }

  double value_at(double x) const {
    double v = coeffs_(0).real();
    for (int k = 1; k < coeffs_.size(); ++k) {
      const double ph = grid_.wavenumber(k) * x;
      v += 2.0 * (coeffs_(k) * cdouble(std::cos(ph), std::sin(ph))).real();
    }
    return v;
  }

  /// Samples on the output grid x_j = j L / n_grid.
  std::vector<double> values() const { return values(grid_.n_grid()); }
  std::vector<double> values(int n_points) const {
    std::vector<double> out(n_points);
    for (int j = 0; j < n_points; ++j) out[j] = value_at(grid_.length() * j / n_points);
    return out;
  }

  bool is_finite() const { return coeffs_.allFinite(); }

  Field& operator+=(const Field& o) {
    check_same_grid(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same_grid(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  Field& operator*=(double s) {
    coeffs_ *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator-(Field a) { return a *= -1.0; }

  void check_same_grid(const Field& o) const {
    if (!(grid_ == o.grid_)) throw DimensionError("fields live on different grids");
  }

 private:
  Grid grid_;
  CVector coeffs_ = CVector::Zero(Grid().size());
};

/// (1/L) * integral of v w over the period, evaluated exactly by Parseval.
inline double inner_product(const Field& v, const Field& w) {
  v.check_same_grid(w);
  const CVector& a = v.coeffs();
  const CVector& b = w.coeffs();
  double acc = 0.0;
  for (int k = 1; k < a.size(); ++k) acc += (a(k) * std::conj(b(k))).real();
  return a(0).real() * b(0).real() + 2.0 * acc;
}

inline double norm(const Field& v) { return std::sqrt(inner_product(v, v)); }

/// S_theta v (x) = v(x - theta).
inline Field shift(const Field& v, double theta) {
  CVector c = v.coeffs();
  for (int k = 1; k < c.size(); ++k) {
    const double ph = -v.grid().wavenumber(k) * theta;
    c(k) *= cdouble(std::cos(ph), std::sin(ph));
  }
  return Field(v.grid(), std::move(c));
}

inline Field derivative(const Field& v, int order = 1) {
  if (order < 0) throw DimensionError("derivative order must be nonnegative");
  CVector c = v.coeffs();
  for (int k = 0; k < c.size(); ++k) {
    cdouble m = 1.0;
    const cdouble ik(0.0, v.grid().wavenumber(k));
    for (int o = 0; o < order; ++o) m *= ik;
    c(k) *= m;
  }
  if (order > 0) c(0) = 0.0;
  return Field(v.grid(), std::move(c));
}

namespace detail {

/// Smallest even transform length that makes the product of two fields with
/// wavenumbers up to K alias-free on wavenumbers up to K (the 3/2 rule on
/// the 2K+1 complex modes).
inline int padded_size(int n_modes) {
  const int m = 3 * n_modes + 1;
  return m + (m % 2);
}

inline Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

inline void to_padded_grid(const CVector& c, int m, std::vector<cdouble>& spectrum,
                           std::vector<cdouble>& samples) {
  spectrum.assign(m, cdouble(0.0, 0.0));
  spectrum[0] = c(0);
  for (int k = 1; k < c.size(); ++k) {
    spectrum[k] = c(k);
    spectrum[m - k] = std::conj(c(k));
  }
  thread_fft().inv(samples, spectrum);
}

}  // namespace detail

/// Pointwise product v*w truncated to the retained wavenumbers. The product
/// is formed on a zero-padded grid, so retained modes carry no aliasing.
inline Field quad_product(const Field& v, const Field& w) {
  v.check_same_grid(w);
  const int m = detail::padded_size(v.grid().n_modes());
  thread_local std::vector<cdouble> spec, sv, sw;
  detail::to_padded_grid(v.coeffs(), m, spec, sv);
  if (&v == &w) {
    sw = sv;
  } else {
    detail::to_padded_grid(w.coeffs(), m, spec, sw);
  }
  for (int j = 0; j < m; ++j) sv[j] = cdouble(sv[j].real() * sw[j].real(), 0.0);
  detail::thread_fft().fwd(spec, sv);
  CVector out(v.grid().size());
  for (int k = 0; k < out.size(); ++k) out(k) = spec[k] / static_cast<double>(m);
  return Field(v.grid(), std::move(out));
}

}  // namespace sropinf
