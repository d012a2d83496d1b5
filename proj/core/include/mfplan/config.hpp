#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mfplan/measures.hpp"

namespace mfp {

struct GridConfig {
  double lo = -6.0;
  double hi = 6.0;
  std::size_t n = 301;

  GridSpec spec() const { return GridSpec(lo, hi, n); }
};

struct Tolerances {
  double w1 = 0.02;
  double entropy_rel = 0.05;
  double gap_abs = 0.01;
  double gap_se = 3.0;
};

/// Everything a run needs. Keys in the text formats mirror the field paths,
/// e.g. `grid.n`, `sim.paths`, `tol.w1`.
struct RunConfig {
  std::string mu0 = "point:0";
  std::string mu1 = "gaussian:1,1";
  GridConfig grid;
  GridConfig y_grid;
  bool y_grid_set = false;

  double sinkhorn_tol = 1e-9;
  std::size_t sinkhorn_max_iter = 20000;

  std::size_t n_paths = 100000;
  std::size_t n_steps = 200;
  std::uint64_t seed = 1;
  double horizon = 1.0;
  double t_cap_eps = 1e-4;
  bool store_paths = false;

  std::string cost = "quadratic";
  std::string control = "R";
  std::string mf_term = "zero";
  double y0 = 0.0;
  std::string y0_table;
  std::vector<std::string> perturbations;
  Tolerances tol;

  std::string incentive = "lq";  // lq | drift | second_order
  std::string z_process = "zero";
  std::string gamma_process = "zero";
  std::size_t sigma_window = 10;
  std::string paths_csv;  // external paths for the second-order functional

  std::string bass_scheme = "exact";
  std::string output_dir = "out";
  std::size_t threads = 0;

  GridSpec x_grid_spec() const { return grid.spec(); }
  GridSpec y_grid_spec() const { return (y_grid_set ? y_grid : grid).spec(); }

  /// Sorted key=value listing of every field; stable across runs.
  std::string canonical() const;
};

/// Applies one key=value assignment; throws parse errors for unknown keys
/// or bad values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` text with `#` comments, or a JSON object when the
/// first non-blank character is '{' (nested objects flatten to dotted keys).
RunConfig parse_config_text(std::string_view text);
RunConfig load_config(const std::string& path);

/// FNV-1a 64 of canonical().
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace mfp
