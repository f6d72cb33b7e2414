// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are the published targets; nothing is tuned.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace sropinf;

namespace {

const double kPi = std::numbers::pi;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Segment {
  std::vector<double> times;
  std::vector<Field> states;
  SnapshotDataset aligned;
};

Segment cut(const SimulationResult& sim, double t0, double t1, const Template& tpl) {
  Segment w;
  std::vector<Field> vel;
  for (std::size_t m = 0; m < sim.times.size(); ++m) {
    if (sim.times[m] < t0 - 1e-9 || sim.times[m] > t1 + 1e-9) continue;
    w.times.push_back(sim.times[m]);
    w.states.push_back(sim.states[m]);
    vel.push_back(sim.velocities[m]);
  }
  w.aligned = align_snapshots(w.times, w.states, vel, tpl);
  return w;
}

}  // namespace

int main() {
  const auto t_start = std::chrono::steady_clock::now();
  const Grid grid(2.0 * kPi, 20, 40);
  const QuadraticPde pde = kse(grid, 4.0 / 87.0);
  const Template tpl = Template::first_mode(grid);
  IntegratorConfig icfg;  // initial step 1e-3, tolerance 1e-6, floor 1e-5, samples every 0.01

  FomConfig fcfg;
  fcfg.t_final = 130.0;
  fcfg.record_start = 30.0;
  const SimulationResult sim = simulate(pde, field_from_terms(grid, beating_wave_initial_terms()), fcfg);
  const Segment train_w = cut(sim, 120.0, 130.0, tpl);
  const Segment test_w = cut(sim, 30.0, 40.0, tpl);
  std::printf("full-order run to t=130: %.1f s\n", seconds_since(t_start));

  ExperimentSettings rp;
  rp.n = 4;
  rp.integrator = icfg;
  ExperimentSettings raw = rp;
  raw.reproject = false;

  // 1. Re-projection convergence.
  const auto t1_start = std::chrono::steady_clock::now();
  const TrainedModel m_rp = train_model(pde, train_w.aligned, train_w.states, tpl, rp);
  const double t1_secs = seconds_since(t1_start);
  const double coeff_gap = oracle::relative_difference(pack_parameters(m_rp.learned.dynamics),
                                                       pack_parameters(m_rp.galerkin.dynamics));
  report(1, m_rp.training.final_loss <= 1e-10 && coeff_gap <= 1e-6 && t1_secs < 60.0,
         fmt("loss %.3e (<= 1e-10), coefficient gap to SR-Galerkin %.3e (<= 1e-6), %.1f s (< 60 s)",
             m_rp.training.final_loss, coeff_gap, t1_secs));

  // 2. Raw-data plateau.
  const TrainedModel m_raw = train_model(pde, train_w.aligned, train_w.states, tpl, raw, m_rp.basis);
  report(2, within(m_raw.training.final_loss, 1.648, 0.5),
         fmt("raw-data loss %.4f (target 1.648 +- 0.5)", m_raw.training.final_loss));

  // 3. Training-window reconstruction.
  const Forecast f_rp = forecast(m_rp.learned, train_w.states.front(), 120.0, 130.0, icfg);
  const Forecast f_gal = forecast(m_rp.galerkin, train_w.states.front(), 120.0, 130.0, icfg);
  const ErrorReport e_rp = score_forecast(f_rp, train_w.states, 4);
  const ErrorReport e_gal = score_forecast(f_gal, train_w.states, 4);
  const double e_proj = relative_error(projected_snapshots(m_rp.basis, train_w.aligned), train_w.states);
  const double rel_gap = std::abs(e_rp.relative_error - e_gal.relative_error) / e_gal.relative_error;
  report(3,
         within(100 * e_rp.relative_error, 2.743, 0.3) && rel_gap <= 1e-4 && within(100 * e_proj, 0.402, 0.1),
         fmt("SR-OpInf %.4f%% (2.743 +- 0.3), SR-Galerkin %.4f%% (relative gap %.2e <= 1e-4), "
             "projection %.4f%% (0.402 +- 0.1)",
             100 * e_rp.relative_error, 100 * e_gal.relative_error, rel_gap, 100 * e_proj));

  // 4. Dimension sweep.
  const auto sweep = dimension_sweep(pde, train_w.aligned, train_w.states, tpl, {4, 5, 6, 7, 8}, rp);
  bool proj_below = true;
  std::string table;
  double err7 = NAN, err8 = NAN;
  for (const auto& e : sweep) {
    const double rom = e.opinf.relative_error;
    proj_below = proj_below && e.failure.empty() && e.projection_error <= rom &&
                 e.projection_error <= e.galerkin.relative_error;
    table += fmt(" n=%d: proj %.4f%% gal %.4f%% opinf %.4f%%;", e.n, 100 * e.projection_error,
                 100 * e.galerkin.relative_error, 100 * rom);
    if (e.n == 7) err7 = rom;
    if (e.n == 8) err8 = rom;
  }
  const bool n7_ok = within(100 * err7, 0.319, 0.1);
  const bool rise = err8 > err7;
  report(4, n7_ok && proj_below && rise,
         fmt("n=7 %.4f%% (0.319 +- 0.1) %s; projection <= ROM for all n: %s; n=8 > n=7: %s;", 100 * err7,
             n7_ok ? "ok" : "out of band", proj_below ? "yes" : "no", rise ? "yes" : "no") +
             table);

  // 5. Instability of the raw-data model.
  const Forecast f_raw = forecast(m_raw.learned, train_w.states.front(), 120.0, 130.0, icfg);
  const bool blew = f_raw.trajectory.status == RomStatus::blow_up;
  report(5, blew && within(f_raw.trajectory.t_stop, 121.8, 0.5),
         fmt("status %s at t = %.4f (target blow-up at 121.8 +- 0.5)",
             to_string(f_raw.trajectory.status).c_str(), f_raw.trajectory.t_stop));

  // 6. Shift tracking.
  const double c_fom = train_w.aligned.shifts.back();
  const double c_rom = f_rp.trajectory.shifts.empty() ? NAN : f_rp.trajectory.shifts.back();
  const double c0 = train_w.aligned.shifts.front();
  double sq = 0.0, lo = INFINITY, hi = -INFINITY;
  const std::size_t ns = std::min(f_rp.trajectory.size(), train_w.aligned.size());
  for (std::size_t m = 0; m < ns; ++m) {
    const double truth = train_w.aligned.speeds[m];
    sq += std::pow(f_rp.trajectory.speeds[m] - truth, 2);
    lo = std::min(lo, truth);
    hi = std::max(hi, truth);
  }
  const double rms_frac = std::sqrt(sq / ns) / (hi - lo);
  // Same comparison with the learned speed evaluated on the projected samples.
  double sq_s = 0.0;
  for (std::size_t m = 0; m < train_w.aligned.size(); ++m)
    sq_s += std::pow(shifting_speed(m_rp.learned, project(m_rp.basis, train_w.aligned.profiles[m])) -
                         train_w.aligned.speeds[m],
                     2);
  const double rms_samples = std::sqrt(sq_s / train_w.aligned.size()) / (hi - lo);
  report(6,
         c0 >= -kPi && c0 < kPi && within(c_fom, -3.240, 0.05) && within(c_rom, -3.226, 0.05) &&
             ns == train_w.aligned.size() && rms_frac <= 0.02 && rms_samples <= 0.02,
         fmt("c(120) = %.4f in [-L/2, L/2); FOM c(130) = %.4f (-3.240 +- 0.05); ROM c(130) = %.4f "
             "(-3.226 +- 0.05); cdot RMS on training samples %.3f%% and along the forecast %.3f%% "
             "of range (<= 2%%)",
             c0, c_fom, c_rom, 100 * rms_samples, 100 * rms_frac));

  // 7. Generalization window. "Returns to the periodic orbit": over the last
  // two time units every ROM state lies within 10% of the orbit's diameter
  // of the full-order reduced orbit sampled on [120, 130].
  const Forecast f_test = forecast(m_rp.learned, test_w.states.front(), 30.0, 40.0, icfg);
  const ErrorReport e_test = score_forecast(f_test, test_w.states, 4);
  std::vector<Vector> orbit;
  for (const auto& p : train_w.aligned.profiles) orbit.push_back(project(m_rp.basis, p));
  double radius = 0.0;
  for (const auto& a : orbit)
    for (const auto& b : orbit) radius = std::max(radius, (a - b).norm());
  double worst_gap = 0.0;
  for (std::size_t m = 0; m < f_test.trajectory.size(); ++m) {
    if (f_test.trajectory.times[m] < 38.0 - 1e-9) continue;
    double best = INFINITY;
    for (const auto& a : orbit) best = std::min(best, (f_test.trajectory.states[m] - a).norm());
    worst_gap = std::max(worst_gap, best);
  }
  const double e7 = 100 * e_test.relative_error;
  report(7, f_test.trajectory.completed() && e7 >= 26.0 && e7 <= 29.0 && worst_gap <= 0.1 * radius,
         fmt("testing-window error %.4f%% (in [26, 29]); distance to orbit over [38, 40] %.4f "
             "(<= 10%% of orbit diameter %.4f)",
             e7, worst_gap, radius));

  // 8. Naive speed counterexample on advection-diffusion.
  {
    const double a = 1.0;
    const QuadraticPde adv = advection_diffusion(grid, a, 0.05);
    FomConfig acfg;
    acfg.t_final = 5.0;
    const Field u0 = field_from_terms(grid, {{1, false, 1.0}, {2, false, 0.5}, {3, false, 0.25}});
    const SnapshotDataset al = align_snapshots(simulate(adv, u0, acfg), tpl);
    const ReducedBasis basis = compute_pod(al.profiles, 3);
    TrainingConfig tc;
    tc.speed_residual = SpeedResidual::direct;
    const TrainingResult tr = train(build_training_data(al, basis), assemble_geometry(basis, tpl), tc);
    const SrRomOperators learned = make_sr_opinf_model(tr.dynamics, basis, tpl);
    oracle::Rng rng(8);
    double naive = 0.0, full = 0.0, model = 0.0;
    for (std::size_t m = 0; m < al.size(); ++m) {
      const Vector am = project(basis, al.profiles[m]);
      naive = std::max(naive, std::abs(naive_shifting_speed(tr.dynamics, basis, tpl, am)));
      model = std::max(model, std::abs(shifting_speed(learned, am) - a));
      full = std::max(full, std::abs(al.speeds[m] - a));
    }
    for (int draw = 0; draw < 100; ++draw) {
      const Vector r = oracle::random_vector(3, rng, 0.2);
      naive = std::max(naive, std::abs(naive_shifting_speed(tr.dynamics, basis, tpl, r)));
    }
    report(8, naive <= 1e-10 && full <= 1e-3 && model <= 1e-3,
           fmt("max |naive cdot| %.2e (<= 1e-10); max |full-order cdot - a| %.2e, max |learned cdot - a| "
               "%.2e (<= 1e-3)",
               naive, full, model));
  }

  // 9. Shift-equivariance suite.
  {
    oracle::Rng rng(9);
    double f_eq = 0.0, fit_eq = 0.0, prof = 0.0, fc_eq = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const Field u = oracle::random_field(grid, rng);
      const double theta = oracle::uniform(rng, -2 * kPi, 2 * kPi);
      const Field fu = evaluate_f(pde, u);
      f_eq = std::max(f_eq, norm(evaluate_f(pde, shift(u, theta)) - shift(fu, theta)) / norm(fu));
      fit_eq = std::max(fit_eq, oracle::circular_distance(fit_shift(shift(u, theta), tpl),
                                                          fit_shift(u, tpl) + theta, grid.length()));
      prof = std::max(prof, norm(slice_align(shift(u, theta), tpl).profile - slice_align(u, tpl).profile) /
                                norm(u));
    }
    for (int draw = 0; draw < 100; ++draw) {
      const std::size_t m = std::uniform_int_distribution<std::size_t>(0, train_w.states.size() - 51)(rng);
      const double theta = oracle::uniform(rng, -2 * kPi, 2 * kPi);
      const double t0 = train_w.times[m];
      const Forecast a = forecast(m_rp.learned, train_w.states[m], t0, t0 + 0.5, icfg);
      const Forecast b = forecast(m_rp.learned, shift(train_w.states[m], theta), t0, t0 + 0.5, icfg);
      for (std::size_t k = 0; k < a.fields.size(); ++k)
        fc_eq = std::max(fc_eq, norm(b.fields[k] - shift(a.fields[k], theta)) / norm(a.fields[k]));
    }
    report(9, f_eq <= 1e-10 && fit_eq <= 1e-10 && prof <= 1e-10 && fc_eq <= 1e-6,
           fmt("100 draws each: f %.2e (<= 1e-10), fit_shift %.2e (<= 1e-10), aligned profile %.2e "
               "(<= 1e-10), forecast %.2e (<= 1e-6)",
               f_eq, fit_eq, prof, fc_eq));
  }

  // 10. Oracle equivalences.
  {
    oracle::Rng rng(10);
    const GeometryCoefficients geo = oracle::random_geometry(3, rng);
    const DynamicsCoefficients truth = oracle::random_dynamics(3, rng);
    const TrainingResult syn = train(oracle::synthetic_tuples(truth, geo, rng, 8, 1.0), geo);
    const double recovery = oracle::relative_difference(pack_parameters(syn.dynamics), pack_parameters(truth));

    double consistency = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
      const Vector a = project(m_rp.basis, train_w.aligned.profiles[draw * 20]);
      const Field uhat = reconstruct(m_rp.basis, a);
      const Field r = moving_frame_rhs(pde, uhat, tpl);
      Vector ref(4);
      for (int i = 0; i < 4; ++i) ref(i) = inner_product(r, m_rp.basis.modes[i]);
      consistency = std::max(consistency, (sr_rom_rhs(m_rp.galerkin, a).adot - ref).norm() / ref.norm());
    }

    std::vector<TrainingTuple> data;
    for (int m = 0; m < 10; ++m)
      data.push_back({0.1 * m, oracle::random_vector(3, rng, 0.5), oracle::random_vector(3, rng),
                      oracle::random_vector(3, rng), oracle::gaussian(rng)});
    const Vector x = oracle::random_vector(parameter_count(3), rng);
    const double grad = oracle::relative_difference(
        loss_gradient(x, data, geo),
        oracle::central_difference_gradient([&](const Vector& y) { return loss(y, data, geo); }, x, 1e-6));

    // POD versus the SVD tail and 2000 random competing subspaces.
    const Grid small(2 * kPi, 6, 16);
    std::vector<Field> snaps;
    for (int m = 0; m < 5; ++m) snaps.push_back(oracle::random_field(small, rng));
    const ReducedBasis pod = compute_pod(snaps, 2);
    Matrix X(2 * small.size() - 1, 5);
    for (int m = 0; m < 5; ++m) X.col(m) = oracle::euclidean_coordinates(snaps[m] - pod.mean);
    Matrix frame(X.rows(), 2);
    for (int i = 0; i < 2; ++i) frame.col(i) = oracle::euclidean_coordinates(pod.modes[i]);
    const double pod_res = oracle::subspace_residual(X, frame);
    Eigen::JacobiSVD<Matrix> svd(X);
    double tail = 0.0;
    for (int j = 2; j < svd.singularValues().size(); ++j) tail += std::pow(svd.singularValues()(j), 2);
    bool pod_best = std::abs(pod_res - tail) <= 1e-10 * X.squaredNorm();
    for (int trial = 0; trial < 2000; ++trial) {
      Eigen::HouseholderQR<Matrix> qr(X * Matrix::NullaryExpr(5, 2, [&] { return oracle::gaussian(rng); }));
      const Matrix q = qr.householderQ() * Matrix::Identity(X.rows(), 2);
      pod_best = pod_best && oracle::subspace_residual(X, q) >= pod_res - 1e-12 * X.squaredNorm();
    }
    report(10, recovery <= 1e-8 && consistency <= 1e-10 && grad <= 1e-6 && pod_best,
           fmt("synthetic recovery %.2e (<= 1e-8), Galerkin consistency %.2e (<= 1e-10), gradient vs "
               "central differences %.2e (<= 1e-6), POD brute-force optimal: %s",
               recovery, consistency, grad, pod_best ? "yes" : "no"));
  }

  // 11. Numerical-analysis suite.
  {
    const QuadraticPde adv = advection_diffusion(grid, 1.0, 0.1);
    const SemiImplicitStepper adv_step(adv, 1e-3);
    Field u = Field::fourier_mode(grid, 1, 1.0);
    for (int i = 0; i < 1000; ++i) u = adv_step.step(u);
    const double adv_err =
        (u.coeffs() - shift(Field::fourier_mode(grid, 1, std::exp(-0.1)), 1.0).coeffs()).cwiseAbs().maxCoeff();

    const Field u0 = field_from_terms(grid, beating_wave_initial_terms());
    auto run = [&](double dt, TimeScheme s) {
      const SemiImplicitStepper st(pde, dt, s);
      Field v = u0;
      for (long i = 0, n = std::lround(1.0 / dt); i < n; ++i) v = st.step(v);
      return v;
    };
    auto order = [&](TimeScheme s) {
      const Field a = run(1e-3, s), b = run(5e-4, s), c = run(2.5e-4, s);
      return std::log2(norm(a - b) / norm(b - c));
    };
    const double p_ars = order(TimeScheme::ars343);
    const double p_default = order(TimeScheme::rk3_cn);

    // Error of the accepted steps; samples between them are linear interpolants.
    double t_acc = 0.0, rkf = 0.0;
    const RomTrajectory decay = integrate_rkf45([](const Vector& y) -> Vector { return -y; },
                                                Vector::Constant(1, 1.0), 0.0, 10.0, icfg,
                                                [&](const Vector& y, double h) {
                                                  rkf = std::max(rkf, std::abs(y(0) - std::exp(-t_acc)));
                                                  t_acc += h;
                                                });
    if (!decay.completed()) rkf = INFINITY;
    rkf = std::max(rkf, std::abs(decay.states.back()(0) - std::exp(-10.0)));

    oracle::Rng rng(11);
    double energy = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      const Field v = oracle::random_field(grid, rng, 0.9);
      energy = std::max(energy, std::abs(inner_product(pde.bilinear(v, v), v)) / std::pow(norm(v), 3));
    }
    report(11, adv_err <= 1e-6 && p_ars >= 2.7 && rkf <= 1e-6 && energy <= 1e-12,
           fmt("advection-diffusion vs closed form %.2e (<= 1e-6); KSE observed order %.3f with ars343 "
               "(>= 2.7); RKF45 on a' = -a %.2e (<= 1e-6); |<B(u,u),u>|/|u|^3 %.2e (<= 1e-12)",
               adv_err, p_ars, rkf, energy));
    std::printf("   info: default rk3_cn scheme observed order %.3f (not gated)\n", p_default);
  }

  std::printf("%d of 11 criteria failed; total %.1f s\n", failures, seconds_since(t_start));
  return failures == 0 ? 0 : 1;
}
