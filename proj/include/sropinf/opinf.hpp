#pragma once

// Non-intrusive learning of the reduced operators from projected snapshot data.
//
// Packed parameter order (ParameterVector):
//   d (n) | A (n*n, row-major) | B (n rows of n(n+1)/2 packed j<=k pairs)
//   | e (1) | p (n) | Q (n(n+1)/2 packed j<=k pairs)

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sropinf/models.hpp"
#include "sropinf/pod.hpp"
#include "sropinf/rom.hpp"
#include "sropinf/symmetry.hpp"

namespace sropinf {

struct TrainingTuple {
  double t = 0.0;
  Vector a;    // <u_hat - u_bar, phi_i>
  Vector f_r;  // <f(u_hat), phi_i>
  Vector r;    // <d/dx u_hat, phi_i>
  double cdot_target = 0.0;
};

inline TrainingTuple make_tuple(double t, const Field& profile, const Field& velocity,
                                double cdot, const ReducedBasis& basis) {
  const int n = basis.dimension();
  TrainingTuple tup{t, project(basis, profile), Vector(n), Vector(n), cdot};
  const Field dprofile = derivative(profile, 1);
  for (int i = 0; i < n; ++i) {
    tup.f_r(i) = inner_product(velocity, basis.modes[i]);
    tup.r(i) = inner_product(dprofile, basis.modes[i]);
  }
  return tup;
}

inline std::vector<TrainingTuple> build_training_data(const std::vector<double>& times,
                                                      const std::vector<Field>& profiles,
                                                      const std::vector<Field>& velocities,
                                                      const std::vector<double>& speeds,
                                                      const ReducedBasis& basis) {
  const std::size_t m = times.size();
  if (profiles.size() != m || velocities.size() != m || speeds.size() != m)
    throw DimensionError("training inputs differ in length: " + std::to_string(m) + " times, " +
                         std::to_string(profiles.size()) + " profiles, " +
                         std::to_string(velocities.size()) + " velocities, " +
                         std::to_string(speeds.size()) + " speeds");
  std::vector<TrainingTuple> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k)
    out.push_back(make_tuple(times[k], profiles[k], velocities[k], speeds[k], basis));
  return out;
}

inline std::vector<TrainingTuple> build_training_data(const SnapshotDataset& data,
                                                      const ReducedBasis& basis) {
  return build_training_data(data.times, data.profiles, data.velocities, data.speeds, basis);
}

/// Re-projected training data: each FOM step starts from the affine projection
/// of the aligned state. Tuples are recorded at the requested step indices,
/// time-stamped t_start + p*dt.
inline std::vector<TrainingTuple> generate_reprojected_dataset(
    const QuadraticPde& pde, const SemiImplicitStepper& stepper, const ReducedBasis& basis,
    const Template& tpl, const Field& u_init, long n_steps, const std::vector<long>& sample_indices,
    VelocityMode velocity = VelocityMode::exact, double t_start = 0.0) {
  std::vector<TrainingTuple> out;
  out.reserve(sample_indices.size());
  std::size_t next = 0;
  for (std::size_t k = 1; k < sample_indices.size(); ++k)
    if (sample_indices[k] <= sample_indices[k - 1])
      throw DimensionError("sample indices must be strictly increasing");

  Field u = u_init;
  std::optional<double> branch;
  for (long p = 0; p < n_steps; ++p) {
    const double c = fit_shift(u, tpl, branch);
    // After the first step the state already lives in the template frame.
    branch = 0.0;
    const Field rp = affine_projection(basis, shift(u, -c));
    Field advanced;
    try {
      advanced = stepper.step(rp);
    } catch (const BlowUpError&) {
      throw BlowUpError("full-order model blew up during re-projection at step " +
                        std::to_string(p));
    }
    if (next < sample_indices.size() && sample_indices[next] == p) {
      const Field f = velocity == VelocityMode::exact
                          ? evaluate_f(pde, rp)
                          : (advanced - rp) * (1.0 / stepper.dt());
      out.push_back(make_tuple(t_start + static_cast<double>(p) * stepper.dt(), rp, f,
                               reconstruction_speed(rp, f, tpl), basis));
      ++next;
    }
    u = std::move(advanced);
  }
  if (next != sample_indices.size())
    throw DimensionError("sample index " + std::to_string(sample_indices[next]) +
                         " lies beyond the " + std::to_string(n_steps) + " re-projection steps");
  return out;
}

enum class Regularizer { none, tikhonov };

enum class CgPreconditioner {
  /// Column scaling only.
  diagonal,
  /// Inverse Cholesky factor of each parameter block's Gram matrix.
  gram,
};

/// How the speed term enters the objective.
enum class SpeedResidual {
  /// cdot(a) (b_i + C_ij a_j) - cdot_m r_i for every i, as in the symmetry-reduced loss.
  projected,
  /// cdot(a) - cdot_m. Needed when b and C vanish (even data with an even
  /// template), where the projected form carries no information on (e, p, Q).
  direct,
};

struct TrainingConfig {
  double lambda = 1.0;
  Regularizer regularizer = Regularizer::none;
  double regularization_weight = 0.0;
  int cg_max_iters = 500;
  double cg_rel_residual = 1e-13;
  SpeedResidual speed_residual = SpeedResidual::projected;
  CgPreconditioner preconditioner = CgPreconditioner::gram;
  bool record_loss = true;

  double ridge() const { return regularizer == Regularizer::tikhonov ? regularization_weight : 0.0; }

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (regularizer == Regularizer::tikhonov && !(regularization_weight >= 0.0))
      throw ConfigError("regularization weight must be nonnegative");
    if (cg_max_iters < 1) throw ConfigError("cg_max_iters must be at least 1");
    if (!(cg_rel_residual > 0.0)) throw ConfigError("cg_rel_residual must be positive");
  }
};

/// Length of the packed parameter vector for dimension n.
inline int parameter_count(int n) {
  const int pc = pair_count(n);
  return n + n * n + n * pc + 1 + n + pc;
}

inline Vector pack_parameters(const DynamicsCoefficients& dyn) {
  dyn.check();
  const int n = dyn.dimension();
  const int pc = pair_count(n);
  Vector x(parameter_count(n));
  int o = 0;
  x.segment(o, n) = dyn.d;
  o += n;
  for (int i = 0; i < n; ++i, o += n) x.segment(o, n) = dyn.A.row(i).transpose();
  for (int i = 0; i < n; ++i, o += pc) x.segment(o, pc) = dyn.B.row(i).transpose();
  x(o++) = dyn.e;
  x.segment(o, n) = dyn.p;
  o += n;
  x.segment(o, pc) = dyn.Q;
  return x;
}

inline DynamicsCoefficients unpack_parameters(const Vector& x, int n) {
  if (x.size() != parameter_count(n))
    throw DimensionError("parameter vector has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(parameter_count(n)) + " for n=" +
                         std::to_string(n));
  const int pc = pair_count(n);
  DynamicsCoefficients dyn = DynamicsCoefficients::zeros(n);
  int o = 0;
  dyn.d = x.segment(o, n);
  o += n;
  for (int i = 0; i < n; ++i, o += n) dyn.A.row(i) = x.segment(o, n).transpose();
  for (int i = 0; i < n; ++i, o += pc) dyn.B.row(i) = x.segment(o, pc).transpose();
  dyn.e = x(o++);
  dyn.p = x.segment(o, n);
  o += n;
  dyn.Q = x.segment(o, pc);
  return dyn;
}

namespace detail {

/// Regressor row [1, a, quadratic_features(a)] shared by every coefficient block.
inline Vector regressors(const Vector& a) {
  const int n = static_cast<int>(a.size());
  Vector th(1 + n + pair_count(n));
  th(0) = 1.0;
  th.segment(1, n) = a;
  th.tail(pair_count(n)) = quadratic_features(a);
  return th;
}

/// The objective as a linear least-squares problem ||J x - y||^2 + mu ||x||^2.
///
/// Internally parameters are ordered per output row: x = [X (n rows of
/// [d_i, A_i., B_i.]), z = [e, p, Q]], so the dynamics residual is
/// Theta X^T - F and the speed residual is built from Theta z.
class RegressionProblem {
 public:
  RegressionProblem(const std::vector<TrainingTuple>& data, const GeometryCoefficients* geometry,
                    const TrainingConfig& cfg, bool with_speed)
      : with_speed_(with_speed), direct_(cfg.speed_residual == SpeedResidual::direct) {
    cfg.validate();
    if (data.empty()) throw DimensionError("training set is empty");
    n_ = static_cast<int>(data.front().a.size());
    p_ = 1 + n_ + pair_count(n_);
    nt_ = static_cast<int>(data.size());
    sqrt_lambda_ = std::sqrt(cfg.lambda);
    mu_ = cfg.ridge();

    theta_.resize(nt_, p_);
    F_.resize(nt_, n_);
    for (int m = 0; m < nt_; ++m) {
      const auto& tup = data[m];
      if (tup.a.size() != n_ || tup.f_r.size() != n_ || tup.r.size() != n_)
        throw DimensionError("training tuple at t=" + std::to_string(tup.t) +
                             " has inconsistent dimension");
      theta_.row(m) = regressors(tup.a).transpose();
      F_.row(m) = tup.f_r.transpose();
    }

    if (with_speed_) {
      if (geometry == nullptr || geometry->dimension() != n_)
        throw DimensionError("geometry coefficients do not match the training data dimension");
      W_.resize(nt_, direct_ ? 1 : n_);
      Y2_.resize(nt_, direct_ ? 1 : n_);
      for (int m = 0; m < nt_; ++m) {
        const auto& tup = data[m];
        const double den = geometry->w + geometry->s.dot(tup.a);
        if (!(std::abs(den) >= 1e-12)) {
          std::ostringstream msg;
          msg << "reduced reconstruction equation is singular at t_m=" << tup.t
              << " (|w + s.a| = " << std::abs(den) << ")";
          throw SliceSingularityError(msg.str());
        }
        if (direct_) {
          W_(m, 0) = 1.0 / den;
          Y2_(m, 0) = tup.cdot_target;
        } else {
          W_.row(m) = ((geometry->b + geometry->C * tup.a) / den).transpose();
          Y2_.row(m) = (tup.cdot_target * tup.r).transpose();
        }
      }
    }
  }

  int n() const { return n_; }
  int unknowns() const { return n_ * p_ + (with_speed_ ? p_ : 0); }
  int residuals() const { return nt_ * n_ + (with_speed_ ? nt_ * static_cast<int>(W_.cols()) : 0); }
  double mu() const { return mu_; }

  /// Stacked, weighted data-misfit residual J x - y (regularizer excluded).
  Vector residual(const Vector& x) const {
    Vector r = apply(x);
    r.head(nt_ * n_) -= flatten(F_);
    if (with_speed_) r.tail(Y2_.size()) -= sqrt_lambda_ * flatten(Y2_);
    return r;
  }

  /// J x.
  Vector apply(const Vector& x) const {
    Vector out(residuals());
    const Eigen::Map<const Matrix> X(x.data(), p_, n_);  // column i = row i of X
    Matrix R1 = theta_ * X;
    out.head(nt_ * n_) = flatten(R1);
    if (with_speed_) {
      const Vector g = theta_ * x.tail(p_);
      Matrix R2 = -sqrt_lambda_ * (g.asDiagonal() * W_);
      out.tail(R2.size()) = flatten(R2);
    }
    return out;
  }

  /// J^T r.
  Vector adjoint(const Vector& r) const {
    Vector out(unknowns());
    const Eigen::Map<const Matrix> R1(r.data(), nt_, n_);
    Eigen::Map<Matrix>(out.data(), p_, n_) = theta_.transpose() * R1;
    if (with_speed_) {
      const Eigen::Map<const Matrix> R2(r.data() + nt_ * n_, nt_, W_.cols());
      const Vector h = -sqrt_lambda_ * (R2.cwiseProduct(W_)).rowwise().sum();
      out.tail(p_) = theta_.transpose() * h;
    }
    return out;
  }

  int block_size() const { return p_; }
  /// Number of parameter blocks: one per output row plus the speed block.
  int blocks() const { return n_ + (with_speed_ ? 1 : 0); }

  /// Gram matrix of the columns of J belonging to one block. Every dynamics
  /// block sees the same regressors.
  Matrix block_gram(int block) const {
    if (block < n_) return theta_.transpose() * theta_;
    const Vector wn = W_.rowwise().squaredNorm();
    return sqrt_lambda_ * sqrt_lambda_ * (theta_.transpose() * wn.asDiagonal() * theta_);
  }

  double objective(const Vector& x) const {
    return residual(x).squaredNorm() + mu_ * x.squaredNorm();
  }
  Vector gradient(const Vector& x) const { return 2.0 * adjoint(residual(x)) + 2.0 * mu_ * x; }

  /// Public packed vector -> internal ordering.
  Vector to_internal(const Vector& packed) const {
    const int pc = pair_count(n_);
    Vector x = Vector::Zero(unknowns());
    for (int i = 0; i < n_; ++i) {
      x(i * p_) = packed(i);
      x.segment(i * p_ + 1, n_) = packed.segment(n_ + i * n_, n_);
      x.segment(i * p_ + 1 + n_, pc) = packed.segment(n_ + n_ * n_ + i * pc, pc);
    }
    if (with_speed_) x.tail(p_) = packed.tail(p_);
    return x;
  }

  Vector to_packed(const Vector& x) const {
    const int pc = pair_count(n_);
    Vector packed = Vector::Zero(parameter_count(n_));
    for (int i = 0; i < n_; ++i) {
      packed(i) = x(i * p_);
      packed.segment(n_ + i * n_, n_) = x.segment(i * p_ + 1, n_);
      packed.segment(n_ + n_ * n_ + i * pc, pc) = x.segment(i * p_ + 1 + n_, pc);
    }
    if (with_speed_) packed.tail(p_) = x.tail(p_);
    return packed;
  }

 private:
  static Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

  bool with_speed_;
  bool direct_;
  int n_ = 0, p_ = 0, nt_ = 0;
  double sqrt_lambda_ = 1.0;
  double mu_ = 0.0;
  Matrix theta_;  // nt x p
  Matrix F_;      // nt x n
  Matrix W_;      // nt x n (projected) or nt x 1 (direct)
  Matrix Y2_;     // matching speed targets
};

}  // namespace detail

/// Value of the training objective at packed parameters x.
inline double loss(const Vector& x, const std::vector<TrainingTuple>& data,
                   const GeometryCoefficients& geometry, const TrainingConfig& cfg = {}) {
  const detail::RegressionProblem prob(data, &geometry, cfg, true);
  if (x.size() != parameter_count(prob.n())) throw DimensionError("parameter vector length mismatch");
  return prob.objective(prob.to_internal(x));
}

inline Vector loss_gradient(const Vector& x, const std::vector<TrainingTuple>& data,
                            const GeometryCoefficients& geometry, const TrainingConfig& cfg = {}) {
  const detail::RegressionProblem prob(data, &geometry, cfg, true);
  if (x.size() != parameter_count(prob.n())) throw DimensionError("parameter vector length mismatch");
  return prob.to_packed(prob.gradient(prob.to_internal(x)));
}

struct TrainingResult {
  DynamicsCoefficients dynamics;
  /// Objective after each iteration; entry 0 is the zero initial guess.
  std::vector<double> loss_log;
  int iterations = 0;
  bool converged = false;
  double final_loss = 0.0;
  /// ||J^T r|| relative to its value at the start.
  double relative_residual = 0.0;
};

namespace detail {

/// Right preconditioner x = P y, block diagonal with one p x p block per
/// parameter block. Each block is the inverse Cholesky factor of the block's
/// regularized Gram matrix, or a diagonal column scaling when that matrix is
/// numerically singular.
class BlockPreconditioner {
 public:
  BlockPreconditioner(const RegressionProblem& prob, CgPreconditioner kind) : p_(prob.block_size()) {
    Matrix dyn_factor;
    for (int b = 0; b < prob.blocks(); ++b) {
      // The dynamics blocks share one Gram matrix; factor it once.
      if (b > 0 && b < prob.n()) {
        factors_.push_back(factors_.front());
        diag_.push_back(diag_.front());
        continue;
      }
      Matrix gram = prob.block_gram(b);
      gram.diagonal().array() += prob.mu();
      Vector d = gram.diagonal().cwiseSqrt();
      for (int j = 0; j < d.size(); ++j) d(j) = d(j) > 0.0 ? 1.0 / d(j) : 1.0;
      Matrix upper;
      if (kind == CgPreconditioner::gram) {
        // Factor the equilibrated matrix; scaling first keeps the Cholesky
        // well defined for regressors of very different magnitudes.
        const Matrix scaled = d.asDiagonal() * gram * d.asDiagonal();
        Eigen::LLT<Matrix> llt(scaled);
        if (llt.info() == Eigen::Success) {
          const Matrix r = llt.matrixU();
          const double dmin = r.diagonal().cwiseAbs().minCoeff();
          const double dmax = r.diagonal().cwiseAbs().maxCoeff();
          if (dmin > 1e-7 * dmax) upper = r;
        }
      }
      factors_.push_back(upper);
      diag_.push_back(d);
    }
  }

  /// x = P y.
  Vector apply(const Vector& y) const {
    Vector x(y.size());
    for (std::size_t b = 0; b < factors_.size(); ++b) {
      Vector seg = y.segment(b * p_, p_);
      if (factors_[b].size() > 0)
        seg = factors_[b].triangularView<Eigen::Upper>().solve(seg);
      x.segment(b * p_, p_) = seg.cwiseProduct(diag_[b]);
    }
    return x;
  }

  /// P^T g.
  Vector apply_transpose(const Vector& g) const {
    Vector y(g.size());
    for (std::size_t b = 0; b < factors_.size(); ++b) {
      Vector seg = g.segment(b * p_, p_).cwiseProduct(diag_[b]);
      if (factors_[b].size() > 0)
        seg = factors_[b].transpose().triangularView<Eigen::Lower>().solve(seg);
      y.segment(b * p_, p_) = seg;
    }
    return y;
  }

 private:
  int p_;
  std::vector<Matrix> factors_;
  std::vector<Vector> diag_;
};

/// CGLS (conjugate gradient on the normal equations, never forming J^T J)
/// from x = 0, right-preconditioned by BlockPreconditioner.
inline TrainingResult solve_cgls(const RegressionProblem& prob, const TrainingConfig& cfg) {
  const int nu = prob.unknowns();
  const BlockPreconditioner precond(prob, cfg.preconditioner);
  const double sqrt_mu = std::sqrt(prob.mu());

  // Data residual rd = y_data - J x and regularizer residual rr = -sqrt(mu) x.
  Vector y = Vector::Zero(nu);
  Vector rd = -prob.residual(Vector::Zero(nu));
  Vector rr = Vector::Zero(nu);
  auto normal = [&](const Vector& rdata, const Vector& rreg) -> Vector {
    return precond.apply_transpose(prob.adjoint(rdata) + sqrt_mu * rreg);
  };
  Vector s = normal(rd, rr);
  Vector p = s;
  double gamma = s.squaredNorm();
  const double gamma0 = gamma;

  TrainingResult res;
  auto objective = [&] { return rd.squaredNorm() + rr.squaredNorm(); };
  if (cfg.record_loss) res.loss_log.push_back(objective());
  if (gamma0 == 0.0) {
    res.converged = true;
  } else {
    for (int it = 0; it < cfg.cg_max_iters; ++it) {
      const Vector px = precond.apply(p);
      const Vector qd = prob.apply(px);
      const Vector qr = sqrt_mu * px;
      const double denom = qd.squaredNorm() + qr.squaredNorm();
      if (!(denom > 0.0)) break;
      const double alpha = gamma / denom;
      y += alpha * p;
      rd -= alpha * qd;
      rr -= alpha * qr;
      s = normal(rd, rr);
      const double gamma_new = s.squaredNorm();
      res.iterations = it + 1;
      if (cfg.record_loss) res.loss_log.push_back(objective());
      res.relative_residual = std::sqrt(gamma_new / gamma0);
      if (res.relative_residual <= cfg.cg_rel_residual) {
        res.converged = true;
        break;
      }
      p = s + (gamma_new / gamma) * p;
      gamma = gamma_new;
    }
  }
  const Vector x = precond.apply(y);
  // The recurrences drift slightly from the true residual; report the exact value.
  res.final_loss = prob.objective(x);
  if (cfg.record_loss && !res.loss_log.empty()) res.loss_log.back() = res.final_loss;
  res.dynamics = unpack_parameters(prob.to_packed(x), prob.n());
  return res;
}

}  // namespace detail

/// Fits (d, A, B, e, p, Q) to the tuples by minimizing the convex objective.
inline TrainingResult train(const std::vector<TrainingTuple>& data,
                            const GeometryCoefficients& geometry, const TrainingConfig& cfg = {}) {
  const detail::RegressionProblem prob(data, &geometry, cfg, true);
  return detail::solve_cgls(prob, cfg);
}

/// Standard operator inference: (d, A, B) only; e, p, Q are returned as zero.
inline TrainingResult train_standard_opinf(const std::vector<TrainingTuple>& data,
                                           const TrainingConfig& cfg = {}) {
  const detail::RegressionProblem prob(data, nullptr, cfg, false);
  return detail::solve_cgls(prob, cfg);
}

/// Learned operators wrapped with the known geometry into a runnable model.
inline SrRomOperators make_sr_opinf_model(DynamicsCoefficients dynamics,
                                          const ReducedBasis& basis, const Template& tpl,
                                          SpeedModel speed = SpeedModel::rational) {
  SrRomOperators ops{assemble_geometry(basis, tpl), std::move(dynamics), basis, tpl, speed};
  ops.check();
  return ops;
}

}  // namespace sropinf
