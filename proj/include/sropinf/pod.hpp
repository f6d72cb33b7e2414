#pragma once

// Snapshot mean and POD basis (method of snapshots) under the (1/L) integral
// inner product, plus the affine projector u -> u_bar + sum <u - u_bar, phi_i> phi_i.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

#include "sropinf/spectral_field.hpp"

namespace sropinf {

struct ReducedBasis {
  Field mean;
  std::vector<Field> modes;
  /// All POD singular values of the centered ensemble, descending.
  Vector singular_values;

  int dimension() const { return static_cast<int>(modes.size()); }
  const Grid& grid() const { return mean.grid(); }

  /// Leading-n sub-basis.
  ReducedBasis truncated(int n) const {
    if (n < 0 || n > dimension()) throw RankError("cannot truncate basis to " + std::to_string(n));
    return {mean, std::vector<Field>(modes.begin(), modes.begin() + n), singular_values};
  }
};

inline Field mean_field(const std::vector<Field>& snapshots) {
  if (snapshots.empty()) throw DimensionError("mean of an empty snapshot set");
  Field acc(snapshots.front().grid());
  for (const auto& s : snapshots) acc += s;
  return acc * (1.0 / static_cast<double>(snapshots.size()));
}

namespace detail {

/// Sign so that the largest-magnitude coefficient has positive real part
/// (positive imaginary part when the real part vanishes).
inline double mode_sign(const Field& mode) {
  const CVector& c = mode.coeffs();
  int best = 0;
  double best_mag = -1.0;
  for (int k = 0; k < c.size(); ++k) {
    const double mag = std::abs(c(k));
    if (mag > best_mag * (1.0 + 1e-12)) {
      best_mag = mag;
      best = k;
    }
  }
  const cdouble z = c(best);
  if (std::abs(z.real()) > 1e-14 * best_mag) return z.real() > 0.0 ? 1.0 : -1.0;
  return z.imag() >= 0.0 ? 1.0 : -1.0;
}

}  // namespace detail

/// Leading n POD modes of the mean-subtracted snapshots, from the eigen-
/// decomposition of the Gram matrix G_ml = <u_m - u_bar, u_l - u_bar>.
inline ReducedBasis compute_pod(const std::vector<Field>& snapshots, int n) {
  const Field mean = mean_field(snapshots);
  const int nt = static_cast<int>(snapshots.size());
  if (n < 0) throw RankError("negative basis dimension");

  std::vector<Field> centered;
  centered.reserve(nt);
  for (const auto& s : snapshots) centered.push_back(s - mean);

  Matrix gram(nt, nt);
  for (int m = 0; m < nt; ++m)
    for (int l = m; l < nt; ++l) gram(m, l) = gram(l, m) = inner_product(centered[m], centered[l]);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw RankError("Gram matrix eigendecomposition failed");
  // Eigen sorts ascending.
  const Vector lambda = eig.eigenvalues().reverse();
  const Matrix vecs = eig.eigenvectors().rowwise().reverse();

  // sqrt(lambda) cannot resolve singular values below ~1e-8 sigma_1, so each
  // one is re-measured as ||X v_i|| with X the centered snapshot matrix.
  CMatrix X(mean.grid().size(), nt);
  for (int m = 0; m < nt; ++m) X.col(m) = centered[m].coeffs();
  const CMatrix XV = X * vecs.cast<cdouble>();
  Vector sigma(nt);
  for (int i = 0; i < nt; ++i) {
    double sq = std::norm(XV(0, i));
    for (int k = 1; k < XV.rows(); ++k) sq += 2.0 * std::norm(XV(k, i));
    sigma(i) = std::sqrt(sq);
  }

  if (n > nt || (n > 0 && !(sigma(n - 1) >= 1e-12 * sigma(0) && sigma(n - 1) > 0.0)))
    throw RankError("requested " + std::to_string(n) +
                    " POD modes but the centered snapshots have lower numerical rank");

  ReducedBasis basis{mean, {}, sigma};
  for (int i = 0; i < n; ++i) {
    CVector c = CVector::Zero(mean.grid().size());
    for (int m = 0; m < nt; ++m) c += vecs(m, i) * centered[m].coeffs();
    Field mode(mean.grid(), c / sigma(i));
    // One Gram-Schmidt sweep against earlier modes removes the round-off
    // the squared-condition Gram route leaves in trailing modes.
    for (const auto& prev : basis.modes) mode -= prev * inner_product(mode, prev);
    mode *= 1.0 / norm(mode);
    mode *= detail::mode_sign(mode);
    basis.modes.push_back(std::move(mode));
  }
  return basis;
}

/// a_i = <u_hat - u_bar, phi_i>.
inline Vector project(const ReducedBasis& basis, const Field& profile) {
  const Field centered = profile - basis.mean;
  Vector a(basis.dimension());
  for (int i = 0; i < basis.dimension(); ++i) a(i) = inner_product(centered, basis.modes[i]);
  return a;
}

/// u_bar + sum a_i phi_i.
inline Field reconstruct(const ReducedBasis& basis, const Vector& a) {
  if (a.size() != basis.dimension())
    throw DimensionError("reduced vector has length " + std::to_string(a.size()) +
                         ", basis has " + std::to_string(basis.dimension()) + " modes");
  Field u = basis.mean;
  for (int i = 0; i < basis.dimension(); ++i) u += basis.modes[i] * a(i);
  return u;
}

/// Affine projector P = reconstruct o project.
inline Field affine_projection(const ReducedBasis& basis, const Field& profile) {
  return reconstruct(basis, project(basis, profile));
}

}  // namespace sropinf
