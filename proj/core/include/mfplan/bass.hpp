#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "mfplan/measures.hpp"
#include "mfplan/simulate.hpp"

namespace mfp {

/// Bass martingale data for a target mu1 on a grid.
///
/// T(x) = atomic_quantile(mu1, Phi(x)) is a staircase with jumps J_k at
/// b_k = Phi^{-1}(F_k), so u(t, x) = E[T(x + B_{1-t})] and its x-derivative
/// are finite sums of Gaussian CDFs and densities.
class BassModel {
 public:
  explicit BassModel(const GridMeasure& mu1, double t_cap_eps = 1e-4);

  double c() const { return c_; }
  double t_cap() const { return t_cap_; }
  const GridMeasure& mu1() const { return mu1_; }

  double T(double x) const;
  double u(double t, double x) const;
  double sigma(double t, double x) const;  // d u / dx

  struct Value {
    double u;
    double sigma;
  };
  Value evaluate(double t, double x) const;

 private:
  GridMeasure mu1_;
  double c_;
  double t_cap_;
  double first_;                 // smallest atom
  std::vector<double> at_;       // jump locations, increasing
  std::vector<double> size_;     // jump sizes
  std::vector<double> before_;   // sum of jumps strictly before index k
};

/// u and sigma at one time level, tabulated for a set of positions when
/// that is cheaper than direct evaluation.
class BassSlice {
 public:
  BassSlice(const BassModel& model, double t, std::span<const double> positions);
  BassModel::Value operator()(double x) const;

 private:
  const BassModel* model_;
  double t_;
  double lo_ = 0.0;
  double step_ = 0.0;
  std::vector<double> u_;
  std::vector<double> s_;
};

enum class BassScheme {
  exact,  // X_{k+1} - X_k = (c - X_0) dt + u(t_{k+1}, B_{k+1}) - u(t_k, B_k)
  euler,  // X_{k+1} - X_k = (c - X_0) dt + sigma(t_k, B_k) dB_k
};

BassScheme parse_bass_scheme(std::string_view text);

struct BassEnsemble {
  PathEnsemble ens;
  std::vector<double> b_terminal;  // B_1 per path
  std::vector<double> target;      // T(B_1) per path
};

/// Paths start at stratified samples of mu0 and are driven by an auxiliary
/// Brownian motion B with B_0 = 0.
BassEnsemble bass_simulate(const BassModel& model, const GridMeasure& mu0, const TimeGrid& tg,
                           const SimulationOptions& opts, BassScheme scheme = BassScheme::exact);

/// Brownian paths on tg started at `start`; all paths are stored.
PathEnsemble simulate_brownian(const TimeGrid& tg, std::size_t n_paths, std::uint64_t seed,
                               double start = 0.0);

/// X_t = W(min(tau, t / (1 - t))) on out_grid, reading W by linear
/// interpolation on its own clock. Throws when tau exceeds the W horizon.
PathEnsemble time_change_embed(const PathEnsemble& w_paths, const std::vector<double>& tau,
                               const TimeGrid& out_grid);

}  // namespace mfp
