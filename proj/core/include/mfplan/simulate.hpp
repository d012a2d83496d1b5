#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mfplan/drift.hpp"
#include "mfplan/matrix.hpp"
#include "mfplan/measures.hpp"

namespace mfp {

/// Uniform time grid t_k = k T / n on [0, T].
class TimeGrid {
 public:
  explicit TimeGrid(std::size_t n_steps, double horizon = 1.0);

  std::size_t steps() const { return n_; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / static_cast<double>(n_); }
  double t(std::size_t k) const;

  /// Step index of time t; throws when t is not a grid time.
  std::size_t index_of(double t) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::size_t n_;
  double horizon_;
};

/// Additive control perturbation delta(t, x).
struct Perturbation {
  enum class Kind { none, constant, sine, state };

  Kind kind = Kind::none;
  double value = 0.0;

  /// "const:v" | "sin:A" (A sin 2 pi t) | "state:kappa" (kappa x) | "none".
  static Perturbation parse(std::string_view spec);
  std::string spec() const;

  double operator()(double t, double x) const;
};

/// Running per-path sums, all left-point:
///   stoch_int    = sum beta_k dX_k
///   drift_energy = sum beta_k^2 dt / 2
///   delta_sq     = sum delta_k^2 dt
///   cross        = sum beta_k delta_k dt
/// where beta is the equilibrium drift at the path's own state.
struct PathAccumulators {
  std::vector<double> stoch_int;
  std::vector<double> drift_energy;
  std::vector<double> delta_sq;
  std::vector<double> cross;
};

/// Cross-sectional first and second moments of X at every grid step.
struct FlowMoments {
  std::vector<double> mean;
  std::vector<double> second_moment;
};

enum class DriftUsed { equilibrium, perturbed, zero };

struct PathEnsemble {
  TimeGrid time{10};
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  DriftUsed drift_used = DriftUsed::equilibrium;
  Perturbation delta;

  std::vector<double> x0;
  Matrix paths;  // n_paths x (steps + 1); empty unless stored
  std::vector<std::size_t> recorded_steps;
  Matrix recorded;  // recorded_steps.size() x n_paths
  std::vector<std::uint8_t> failed;
  PathAccumulators acc;
  FlowMoments flow;

  bool has_full_paths() const { return !paths.empty(); }
  std::size_t failures() const;

  /// X at step k for every path (failed paths included as frozen values).
  std::vector<double> cross_section(std::size_t k) const;

  /// Terminal values of the paths that did not fail.
  std::vector<double> terminal() const;
};

struct SimulationOptions {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  /// Keep every path in memory. When unset, paths are kept only if they fit
  /// in full_path_budget doubles.
  bool store_paths = false;
  std::size_t full_path_budget = 4'000'000;
  /// Extra steps to keep as cross-sections; the default keeps 11 evenly
  /// spaced steps including both ends.
  std::vector<std::size_t> record_steps;
  /// Sample the last step from the exact bridge transition instead of Euler.
  bool exact_final_step = true;
  double failure_budget = 1e-3;
};

/// dX = beta(t, X) dt + dW from stratified initial points.
PathEnsemble simulate_equilibrium(const DriftField& field, const TimeGrid& tg,
                                  const SimulationOptions& opts);

/// dX = (beta + delta) dt + dW, same noise as simulate_equilibrium.
PathEnsemble simulate_perturbed(const DriftField& field, const Perturbation& delta,
                                const TimeGrid& tg, const SimulationOptions& opts);

/// Wiener paths (zero drift) with the equilibrium drift recorded in the
/// accumulators, for Girsanov checks.
PathEnsemble simulate_reference(const DriftField& field, const TimeGrid& tg,
                                const SimulationOptions& opts);

/// Stratified initial points: atomic quantiles of mu0 at (pi(p) + 1/2) / n
/// for a seeded permutation pi.
std::vector<double> stratified_initial_points(const GridMeasure& mu0, std::size_t n,
                                              std::uint64_t seed);

std::vector<EmpiricalMeasure> empirical_flow(const PathEnsemble& ens,
                                             const std::vector<double>& times);

}  // namespace mfp
