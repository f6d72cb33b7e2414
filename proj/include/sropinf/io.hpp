#pragma once

// File formats. Every number is written with 17 significant digits so that
// files round-trip exactly.
//
// Field files (CSV): t, re_0..re_K, im_1..im_K  (Fourier coefficients c_k)
// Trajectory CSV:    t, a_1..a_n, c, cdot
// Field matrix CSV:  t, u(x_0)..u(x_{N-1}) on the output grid
// Operator file:     whitespace-separated text, see write_operators.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sropinf/metrics.hpp"
#include "sropinf/opinf.hpp"
#include "sropinf/rom.hpp"

namespace sropinf {

namespace fs = std::filesystem;

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " (missing or unreadable)");
  return in;
}

inline std::vector<double> parse_csv_row(const std::string& line, const fs::path& path) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      row.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw IoError("non-numeric cell '" + cell + "' in " + path.string());
    }
  }
  return row;
}

}  // namespace detail

/// A named numeric table written as CSV with a header line.
struct Table {
  std::string file;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline void write_table(const fs::path& path, const Table& t) {
  auto out = detail::open_out(path);
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

/// Reads a CSV written by write_table; the header line is returned in columns.
inline Table read_table(const fs::path& path) {
  auto in = detail::open_in(path);
  Table t{path.filename().string(), {}, {}};
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  std::stringstream header(line);
  for (std::string col; std::getline(header, col, ',');) t.columns.push_back(col);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(detail::parse_csv_row(line, path));
    if (t.rows.back().size() != t.columns.size())
      throw IoError("row " + std::to_string(t.rows.size()) + " of " + path.string() + " has " +
                    std::to_string(t.rows.back().size()) + " cells, expected " +
                    std::to_string(t.columns.size()));
  }
  return t;
}

inline void write_fields(const fs::path& path, const std::vector<double>& times,
                         const std::vector<Field>& fields) {
  if (times.size() != fields.size()) throw DimensionError("times and fields differ in length");
  Table t{path.filename().string(), {"t"}, {}};
  const int K = fields.empty() ? 0 : fields.front().grid().n_modes();
  for (int k = 0; k <= K; ++k) t.columns.push_back("re_" + std::to_string(k));
  for (int k = 1; k <= K; ++k) t.columns.push_back("im_" + std::to_string(k));
  for (std::size_t m = 0; m < fields.size(); ++m) {
    std::vector<double> row{times[m]};
    for (int k = 0; k <= K; ++k) row.push_back(fields[m].coeff(k).real());
    for (int k = 1; k <= K; ++k) row.push_back(fields[m].coeff(k).imag());
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

inline void read_fields(const fs::path& path, const Grid& grid, std::vector<double>& times,
                        std::vector<Field>& fields) {
  const Table t = read_table(path);
  const int K = grid.n_modes();
  if (static_cast<int>(t.columns.size()) != 2 * K + 2)
    throw IoError(path.string() + " holds " + std::to_string((t.columns.size() - 2) / 2) +
                  " modes but the grid has " + std::to_string(K));
  times.clear();
  fields.clear();
  for (const auto& row : t.rows) {
    CVector c(K + 1);
    c(0) = row[1];
    for (int k = 1; k <= K; ++k) c(k) = cdouble(row[1 + k], row[1 + K + k]);
    times.push_back(row[0]);
    fields.emplace_back(grid, std::move(c));
  }
}

/// Samples on the output grid, one row per time.
inline Table field_matrix(const std::string& file, const std::vector<double>& times,
                          const std::vector<Field>& fields) {
  Table t{file, {"t"}, {}};
  const int N = fields.empty() ? 0 : fields.front().grid().n_grid();
  for (int j = 0; j < N; ++j) {
    std::ostringstream name;
    name << "x_" << std::setprecision(17) << fields.front().grid().x(j);
    t.columns.push_back(name.str());
  }
  for (std::size_t m = 0; m < std::min(times.size(), fields.size()); ++m) {
    std::vector<double> row{times[m]};
    const auto v = fields[m].values();
    row.insert(row.end(), v.begin(), v.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table trajectory_table(const std::string& file, const RomTrajectory& traj) {
  Table t{file, {"t"}, {}};
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  for (int i = 1; i <= n; ++i) t.columns.push_back("a_" + std::to_string(i));
  t.columns.push_back("c");
  t.columns.push_back("cdot");
  for (std::size_t m = 0; m < traj.size(); ++m) {
    std::vector<double> row{traj.times[m]};
    for (int i = 0; i < n; ++i) row.push_back(traj.states[m](i));
    row.push_back(traj.shifts[m]);
    row.push_back(traj.speeds[m]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table loss_table(const std::string& file, const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& curves) {
  Table t{file, {"iteration"}, {}};
  std::size_t len = 0;
  for (const auto& c : curves) len = std::max(len, c.size());
  t.columns.insert(t.columns.end(), names.begin(), names.end());
  for (std::size_t it = 0; it < len; ++it) {
    std::vector<double> row{static_cast<double>(it)};
    // A converged run keeps its final value so the columns stay aligned.
    for (const auto& c : curves) row.push_back(c.empty() ? std::nan("") : c[std::min(it, c.size() - 1)]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table sweep_table(const std::string& file, const std::vector<SweepEntry>& sweep) {
  Table t{file, {"n", "projection_error", "sr_galerkin_error", "sr_opinf_error", "training_loss"}, {}};
  for (const auto& e : sweep)
    t.rows.push_back({static_cast<double>(e.n), e.projection_error, e.galerkin.relative_error,
                      e.opinf.relative_error, e.training_loss});
  return t;
}

/// Reduced amplitudes a_i of two runs side by side, restricted to [t_lo, t_hi].
inline Table amplitude_table(const std::string& file, const std::vector<double>& times,
                             const std::vector<Vector>& reference, const std::vector<Vector>& model,
                             const std::vector<int>& components, double t_lo, double t_hi) {
  Table t{file, {"t"}, {}};
  for (int i : components) {
    t.columns.push_back("fom_a_" + std::to_string(i + 1));
    t.columns.push_back("rom_a_" + std::to_string(i + 1));
  }
  const std::size_t m_max = std::min({times.size(), reference.size(), model.size()});
  for (std::size_t m = 0; m < m_max; ++m) {
    if (times[m] < t_lo - 1e-9 || times[m] > t_hi + 1e-9) continue;
    std::vector<double> row{times[m]};
    for (int i : components) {
      row.push_back(reference[m](i));
      row.push_back(model[m](i));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Writes each table into dir. An empty list writes nothing.
inline void emit_figure_data(const fs::path& dir, const std::vector<Table>& tables) {
  for (const auto& t : tables) write_table(dir / t.file, t);
}

// Operator file layout (tokens separated by whitespace, '#' starts a comment):
//   sropinf-operators 1
//   grid L n_modes n_grid
//   n <n>
//   speed_model rational|naive
//   template  <re c_0..c_K> <im c_0..c_K>
//   mean      <re ...> <im ...>
//   mode <i>  <re ...> <im ...>           (i = 1..n)
//   singular_values <count> <values>
//   parameters <count> <packed values>    (order documented in opinf.hpp)

namespace detail {

inline void write_coeffs(std::ostream& out, const Field& f) {
  for (int k = 0; k < f.coeffs().size(); ++k) out << ' ' << f.coeff(k).real();
  for (int k = 0; k < f.coeffs().size(); ++k) out << ' ' << f.coeff(k).imag();
  out << '\n';
}

inline Field read_coeffs(std::istream& in, const Grid& grid) {
  CVector c(grid.size());
  std::vector<double> re(grid.size()), im(grid.size());
  for (auto& v : re) in >> v;
  for (auto& v : im) in >> v;
  for (int k = 0; k < grid.size(); ++k) c(k) = cdouble(re[k], im[k]);
  return Field(grid, std::move(c));
}

inline void expect(std::istream& in, const std::string& word, const fs::path& path) {
  std::string got;
  in >> got;
  if (got != word)
    throw IoError(path.string() + ": expected '" + word + "', found '" + got + "'");
}

}  // namespace detail

inline void write_operators(const fs::path& path, const SrRomOperators& ops) {
  ops.check();
  auto out = detail::open_out(path);
  const Grid& g = ops.basis.grid();
  out << "# reduced operators: a' = d + A a + B(a,a) + cdot(a) (b + C a)\n";
  out << "sropinf-operators 1\n";
  out << "grid " << g.length() << ' ' << g.n_modes() << ' ' << g.n_grid() << '\n';
  out << "n " << ops.dimension() << '\n';
  out << "speed_model " << (ops.speed_model == SpeedModel::naive ? "naive" : "rational") << '\n';
  out << "template";
  detail::write_coeffs(out, ops.tpl.profile());
  out << "mean";
  detail::write_coeffs(out, ops.basis.mean);
  for (int i = 0; i < ops.dimension(); ++i) {
    out << "mode " << i + 1;
    detail::write_coeffs(out, ops.basis.modes[i]);
  }
  out << "singular_values " << ops.basis.singular_values.size();
  for (double s : ops.basis.singular_values) out << ' ' << s;
  out << '\n';
  const Vector x = pack_parameters(ops.dynamics);
  out << "parameters " << x.size() << '\n';
  for (double v : x) out << v << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

/// Reads an operator file and rebuilds the geometry coefficients from the
/// stored basis and template.
inline SrRomOperators read_operators(const fs::path& path) {
  auto file = detail::open_in(path);
  std::stringstream in;
  for (std::string line; std::getline(file, line);) {
    const auto hash = line.find('#');
    in << (hash == std::string::npos ? line : line.substr(0, hash)) << '\n';
  }
  detail::expect(in, "sropinf-operators", path);
  int version = 0;
  in >> version;
  if (version != 1) throw IoError(path.string() + ": unsupported format version");
  detail::expect(in, "grid", path);
  double L = 0;
  int K = 0, N = 0;
  in >> L >> K >> N;
  const Grid grid(L, K, N);
  detail::expect(in, "n", path);
  int n = 0;
  in >> n;
  detail::expect(in, "speed_model", path);
  std::string speed;
  in >> speed;
  detail::expect(in, "template", path);
  const Template tpl(detail::read_coeffs(in, grid));
  detail::expect(in, "mean", path);
  ReducedBasis basis{detail::read_coeffs(in, grid), {}, Vector()};
  for (int i = 0; i < n; ++i) {
    detail::expect(in, "mode", path);
    int idx = 0;
    in >> idx;
    basis.modes.push_back(detail::read_coeffs(in, grid));
  }
  detail::expect(in, "singular_values", path);
  int ns = 0;
  in >> ns;
  basis.singular_values.resize(ns);
  for (int i = 0; i < ns; ++i) in >> basis.singular_values(i);
  detail::expect(in, "parameters", path);
  int np = 0;
  in >> np;
  Vector x(np);
  for (int i = 0; i < np; ++i) in >> x(i);
  if (!in) throw IoError(path.string() + " is truncated or malformed");
  if (speed != "rational" && speed != "naive")
    throw IoError(path.string() + ": unknown speed model '" + speed + "'");
  return make_sr_opinf_model(unpack_parameters(x, n), basis, tpl,
                             speed == "naive" ? SpeedModel::naive : SpeedModel::rational);
}

/// JSON value for a scalar that may be infinite (JSON has no infinity).
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json to_json(const ErrorReport& r) {
  return {{"n", r.n},
          {"relative_error", json_number(r.relative_error)},
          {"prefix_error", json_number(r.prefix_error)},
          {"status", to_string(r.status)},
          {"t_stop", r.t_stop}};
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace sropinf
