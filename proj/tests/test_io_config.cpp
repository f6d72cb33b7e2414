#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include "oracles.hpp"

using namespace sropinf;
namespace fs = std::filesystem;

namespace {

Grid kse_grid() { return Grid(2.0 * std::numbers::pi, 20, 40); }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sropinf_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Metrics, RelativeErrorBasics) {
  oracle::Rng rng(31);
  const Grid g = kse_grid();
  std::vector<Field> ref, rom;
  for (int m = 0; m < 8; ++m) {
    ref.push_back(oracle::random_field(g, rng));
    rom.push_back(ref.back() * 1.1);
  }
  EXPECT_NEAR(relative_error(rom, ref), 0.1, 1e-14);
  EXPECT_EQ(relative_error(ref, ref), 0.0);
  EXPECT_THROW(relative_error(rom, {ref.begin(), ref.end() - 1}), DimensionError);
  EXPECT_THROW(relative_error({Field(g)}, {Field(g)}), DimensionError);

  // Common shifts leave the error unchanged.
  for (int draw = 0; draw < 20; ++draw) {
    for (auto& r : rom) r = oracle::random_field(g, rng);
    const double theta = oracle::uniform(rng, -5, 5);
    std::vector<Field> rs, fs_;
    for (std::size_t m = 0; m < rom.size(); ++m) {
      rs.push_back(shift(rom[m], theta));
      fs_.push_back(shift(ref[m], theta));
    }
    EXPECT_NEAR(relative_error(rs, fs_), relative_error(rom, ref), 1e-12);
  }
}

TEST(Metrics, IncompleteForecastScoresInfinite) {
  const Grid g = kse_grid();
  Forecast fc;
  fc.trajectory.status = RomStatus::blow_up;
  fc.trajectory.t_stop = 0.3;
  fc.fields = {Field::fourier_mode(g, 1, 1.0), Field::fourier_mode(g, 1, 1.0)};
  const std::vector<Field> ref(5, Field::fourier_mode(g, 1, 1.0));
  const ErrorReport rep = score_forecast(fc, ref, 4);
  EXPECT_TRUE(std::isinf(rep.relative_error));
  EXPECT_EQ(rep.prefix_error, 0.0);
  EXPECT_EQ(rep.per_time.size(), 2u);
  EXPECT_EQ(to_json(rep)["relative_error"], "inf");
}

TEST(Io, FieldFilesRoundTripExactly) {
  oracle::Rng rng(32);
  const Grid g = kse_grid();
  std::vector<double> t{0.0, 0.01, 0.02};
  std::vector<Field> f;
  for (int m = 0; m < 3; ++m) f.push_back(oracle::random_field(g, rng));
  const fs::path p = scratch("fields.csv");
  write_fields(p, t, f);
  std::vector<double> t2;
  std::vector<Field> f2;
  read_fields(p, g, t2, f2);
  ASSERT_EQ(f2.size(), 3u);
  EXPECT_EQ(t2, t);
  for (int m = 0; m < 3; ++m) EXPECT_EQ(f2[m].coeffs(), f[m].coeffs());
  EXPECT_THROW(read_fields(scratch("missing.csv"), g, t2, f2), IoError);
}

TEST(Io, TablesRoundTrip) {
  Table t{"x.csv", {"a", "b"}, {{1.0, 2.5}, {-3.0, 1e-300}}};
  write_table(scratch("table.csv"), t);
  const Table back = read_table(scratch("table.csv"));
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Io, OperatorFilesRoundTrip) {
  oracle::Rng rng(33);
  const Grid g = kse_grid();
  std::vector<Field> snaps;
  for (int m = 0; m < 10; ++m) snaps.push_back(slice_align(oracle::random_field(g, rng), Template::first_mode(g)).profile);
  const ReducedBasis basis = compute_pod(snaps, 3);
  const SrRomOperators ops = assemble_sr_galerkin(kse(g, 4.0 / 87.0), basis, Template::first_mode(g));
  const fs::path p = scratch("ops.txt");
  write_operators(p, ops);
  const SrRomOperators back = read_operators(p);
  EXPECT_EQ(pack_parameters(back.dynamics), pack_parameters(ops.dynamics));
  EXPECT_EQ(back.basis.mean.coeffs(), ops.basis.mean.coeffs());
  for (int i = 0; i < 3; ++i) EXPECT_EQ(back.basis.modes[i].coeffs(), ops.basis.modes[i].coeffs());
  EXPECT_EQ(back.geometry.C, ops.geometry.C);
  EXPECT_EQ(back.speed_model, ops.speed_model);
  const Vector a = oracle::random_vector(3, rng, 0.1);
  EXPECT_EQ(sr_rom_rhs(back, a).adot, sr_rom_rhs(ops, a).adot);

  std::ofstream(scratch("bad_ops.txt")) << "not-an-operator-file 1\n";
  EXPECT_THROW(read_operators(scratch("bad_ops.txt")), IoError);
}

TEST(Config, DefaultsDescribeTheBeatingWaveRun) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.model, "kse");
  EXPECT_DOUBLE_EQ(c.nu, 4.0 / 87.0);
  EXPECT_EQ(c.n_modes, 20);
  EXPECT_EQ(c.n_grid, 40);
  EXPECT_DOUBLE_EQ(c.train_window.start, 120.0);
  EXPECT_DOUBLE_EQ(c.test_window.end, 40.0);
  EXPECT_EQ(c.n, 4);
  EXPECT_DOUBLE_EQ(c.training.lambda, 1.0);
  EXPECT_EQ(c.training.regularizer, Regularizer::none);
  EXPECT_DOUBLE_EQ(c.integrator.tolerance, 1e-6);
  EXPECT_DOUBLE_EQ(c.integrator.min_step, 1e-5);
  EXPECT_DOUBLE_EQ(c.fom().t_final, 130.0);
  EXPECT_DOUBLE_EQ(c.fom().record_start, 30.0);
}

TEST(Config, ParsesOverridesAndComments) {
  const RunConfig c = parse_config(R"({
    // advection-diffusion variant
    "model": {"name": "advection_diffusion", "speed": 2.0, "diffusivity": 0.1},
    "fom": {"initial_condition": [{"k": 2, "kind": "sin", "amplitude": 0.5}], "train_window": [0, 5]},
    "rom": {"n": 3, "regularizer": "tikhonov", "regularization_weight": 1e-4,
            "integrator": {"tolerance": 1e-8, "accumulation": "per_sample"}},
    "paths": {"output": "elsewhere"},
    "seed": 7
  })");
  EXPECT_EQ(c.pde().name(), "advection_diffusion");
  ASSERT_EQ(c.initial_condition.size(), 1u);
  EXPECT_TRUE(c.initial_condition[0].is_sine);
  EXPECT_EQ(c.n, 3);
  EXPECT_DOUBLE_EQ(c.training.ridge(), 1e-4);
  EXPECT_DOUBLE_EQ(c.integrator.tolerance, 1e-8);
  EXPECT_EQ(c.integrator.accumulation, ShiftAccumulation::per_sample);
  EXPECT_EQ(c.output, "elsewhere");
  EXPECT_EQ(c.seed, 7u);
  // The manifest form parses back to the same run.
  const RunConfig again = parse_config(to_json(c).dump());
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config(R"({"rom": {"nn": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"model": {"name": "burgers"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"rom": {"n": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"rom": {"lambda": -1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"fom": {"train_window": [5, 1]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"fom": {"dt": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"fom": {"scheme": "euler"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"template": {"k": 0}})"), ConfigError);
  EXPECT_THROW(load_config(scratch("no_such_config.json")), IoError);
}
