#pragma once

// Error metrics and the reduced-dimension sweep.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sropinf/pipeline.hpp"

namespace sropinf {

/// sqrt( sum_m ||u_rom(t_m) - u(t_m)||^2 / sum_m ||u(t_m)||^2 ).
inline double relative_error(const std::vector<Field>& rom, const std::vector<Field>& fom) {
  if (rom.size() != fom.size())
    throw DimensionError("relative error needs equal-length sequences (" +
                         std::to_string(rom.size()) + " vs " + std::to_string(fom.size()) + ")");
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < rom.size(); ++m) {
    const double e = norm(rom[m] - fom[m]);
    const double r = norm(fom[m]);
    num += e * e;
    den += r * r;
  }
  if (!(den > 0.0)) throw DimensionError("relative error against an all-zero reference");
  return std::sqrt(num / den);
}

struct ErrorReport {
  int n = 0;
  /// +infinity when the ROM stopped before the end of the window.
  double relative_error = 0.0;
  /// Error over the samples the ROM did produce.
  double prefix_error = 0.0;
  /// ||u_rom(t_m) - u(t_m)|| / ||u(t_m)|| per produced sample.
  std::vector<double> per_time;
  RomStatus status = RomStatus::completed;
  double t_stop = 0.0;
};

/// Scores a forecast against reference fields sampled at the same times.
inline ErrorReport score_forecast(const Forecast& fc, const std::vector<Field>& reference, int n) {
  ErrorReport rep;
  rep.n = n;
  rep.status = fc.trajectory.status;
  rep.t_stop = fc.trajectory.t_stop;
  const std::size_t m = std::min(fc.fields.size(), reference.size());
  const std::vector<Field> ref(reference.begin(), reference.begin() + m);
  const std::vector<Field> rom(fc.fields.begin(), fc.fields.begin() + m);
  rep.prefix_error = m > 0 ? relative_error(rom, ref) : 0.0;
  for (std::size_t k = 0; k < m; ++k) rep.per_time.push_back(norm(rom[k] - ref[k]) / norm(ref[k]));
  rep.relative_error = fc.trajectory.completed() && fc.fields.size() >= reference.size()
                           ? rep.prefix_error
                           : std::numeric_limits<double>::infinity();
  return rep;
}

struct SweepEntry {
  int n = 0;
  double projection_error = std::numeric_limits<double>::quiet_NaN();
  ErrorReport galerkin;
  ErrorReport opinf;
  double training_loss = std::numeric_limits<double>::quiet_NaN();
  /// Empty unless this dimension failed.
  std::string failure;
};

/// For every n: basis, intrusive model, (re-projected) training, forecast
/// from the first snapshot, and scores. Failures are recorded per n.
inline std::vector<SweepEntry> dimension_sweep(const QuadraticPde& pde,
                                               const SnapshotDataset& aligned,
                                               const std::vector<Field>& raw_states,
                                               const Template& tpl, const std::vector<int>& dims,
                                               ExperimentSettings settings) {
  std::vector<SweepEntry> out;
  if (dims.empty()) return out;
  int n_max = 0;
  for (int n : dims) n_max = std::max(n_max, n);
  std::optional<ReducedBasis> basis;
  try {
    basis = compute_pod(aligned.profiles, n_max);
  } catch (const Error&) {
    // Fall back to per-n bases; the failing dimensions report themselves below.
  }

  const double t0 = aligned.times.front(), t1 = aligned.times.back();
  for (int n : dims) {
    SweepEntry e;
    e.n = n;
    try {
      settings.n = n;
      const TrainedModel model = train_model(pde, aligned, raw_states, tpl, settings, basis);
      e.projection_error = relative_error(projected_snapshots(model.basis, aligned), raw_states);
      e.training_loss = model.training.final_loss;
      e.galerkin = score_forecast(forecast(model.galerkin, raw_states.front(), t0, t1,
                                           settings.integrator),
                                  raw_states, n);
      e.opinf = score_forecast(forecast(model.learned, raw_states.front(), t0, t1,
                                        settings.integrator),
                               raw_states, n);
    } catch (const Error& err) {
      e.failure = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace sropinf
