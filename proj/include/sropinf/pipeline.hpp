#pragma once

// End-to-end experiment: align snapshots, build the POD basis, assemble the
// intrusive model, learn the non-intrusive one (optionally from re-projected
// data) and forecast from a full-order snapshot.

#include <cmath>
#include <optional>
#include <vector>

#include "sropinf/models.hpp"
#include "sropinf/opinf.hpp"
#include "sropinf/pod.hpp"
#include "sropinf/rom.hpp"
#include "sropinf/symmetry.hpp"

namespace sropinf {

struct ExperimentSettings {
  int n = 4;
  bool reproject = true;
  /// Use the naive reconstruction-equation speed instead of the learned one.
  bool naive_speed = false;
  TrainingConfig training;
  IntegratorConfig integrator;
  /// FOM stepper used by re-projection.
  double fom_dt = 1e-3;
  TimeScheme scheme = TimeScheme::rk3_cn;
  VelocityMode reprojection_velocity = VelocityMode::exact;
};

struct TrainedModel {
  ReducedBasis basis;
  SrRomOperators galerkin;
  SrRomOperators learned;
  TrainingResult training;
  std::vector<TrainingTuple> data;
};

/// Steps per sample of an aligned dataset with uniform spacing.
inline long sampling_stride(const SnapshotDataset& data, double fom_dt) {
  if (data.size() < 2) return 1;
  const double ratio = (data.times[1] - data.times[0]) / fom_dt;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-6 * ratio)
    throw ConfigError("snapshot spacing must be an integer multiple of the FOM timestep");
  return stride;
}

/// Learns a model of dimension settings.n from aligned snapshots. With
/// `basis` given, it is truncated instead of recomputed.
inline TrainedModel train_model(const QuadraticPde& pde, const SnapshotDataset& aligned,
                                const std::vector<Field>& raw_states, const Template& tpl,
                                const ExperimentSettings& settings,
                                const std::optional<ReducedBasis>& basis = std::nullopt) {
  TrainedModel out;
  out.basis = basis ? basis->truncated(settings.n) : compute_pod(aligned.profiles, settings.n);
  out.galerkin = assemble_sr_galerkin(pde, out.basis, tpl);

  if (settings.reproject) {
    const SemiImplicitStepper stepper(pde, settings.fom_dt, settings.scheme);
    const long stride = sampling_stride(aligned, settings.fom_dt);
    const long samples = static_cast<long>(aligned.size());
    std::vector<long> idx;
    for (long m = 0; m < samples; ++m) idx.push_back(m * stride);
    // Same window length and sampling as the raw data, from its first snapshot.
    out.data = generate_reprojected_dataset(pde, stepper, out.basis, tpl, raw_states.front(),
                                            (samples - 1) * stride + 1, idx,
                                            settings.reprojection_velocity, aligned.times.front());
  } else {
    out.data = build_training_data(aligned, out.basis);
  }
  out.training = train(out.data, out.galerkin.geometry, settings.training);
  out.learned = make_sr_opinf_model(out.training.dynamics, out.basis, tpl,
                                    settings.naive_speed ? SpeedModel::naive : SpeedModel::rational);
  return out;
}

struct Forecast {
  RomTrajectory trajectory;
  std::vector<Field> fields;
};

/// Aligns u_init (shift in [-L/2, L/2)), projects it and integrates the model.
inline Forecast forecast(const SrRomOperators& ops, const Field& u_init, double t0, double t1,
                         const IntegratorConfig& cfg = {}) {
  const AlignedField al = slice_align(u_init, ops.tpl);
  Forecast out;
  out.trajectory = integrate_rom(ops, project(ops.basis, al.profile), al.shift, t0, t1, cfg);
  out.fields = reconstruct_solution(ops, out.trajectory);
  return out;
}

/// S_c P S_{-c} u for each snapshot: the best the reduced subspace can do.
inline std::vector<Field> projected_snapshots(const ReducedBasis& basis,
                                              const SnapshotDataset& aligned) {
  std::vector<Field> out;
  out.reserve(aligned.size());
  for (std::size_t m = 0; m < aligned.size(); ++m)
    out.push_back(shift(affine_projection(basis, aligned.profiles[m]), aligned.shifts[m]));
  return out;
}

}  // namespace sropinf
