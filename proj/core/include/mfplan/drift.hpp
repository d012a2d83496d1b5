#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfplan/schrodinger.hpp"

namespace mfp {

/// Equilibrium drift from the h-transform of a Schrodinger coupling:
///   M(t, x0, x) = sum_j zeta(x0, y_j) h phi_{T-t}(y_j - x),  beta = d/dx log M.
/// Because zeta = exp(f_i + g_j) the drift itself does not depend on x0;
/// x0 only enters log_m through f.
class DriftField {
 public:
  explicit DriftField(const Coupling& c, double t_cap_eps = 1e-4);

  double horizon() const { return horizon_; }
  double t_cap() const { return t_cap_; }

  /// Snaps x0 to the nearest positive-mass initial node. Warns when the snap
  /// moves x0 by more than half a spacing, throws when x0 is off the grid.
  std::size_t row_for(double x0) const;

  double log_m(double t, double x0, double x) const;
  double drift_eval(double t, double x0, double x) const;

  /// zeta-phi weighted mean of the target nodes seen from (t, x).
  double target_mean(double t, double x0, double x) const;

  struct Value {
    double beta;
    double dbeta;  // d beta / dx
  };

  /// Drift without x0 validation; t is clamped to t_cap.
  Value evaluate(double t, double x) const;

  /// Active target nodes inside the window that carries the softmax mass.
  std::size_t window_size(double t, double x) const;

  /// Draws the terminal node for a path at x with remaining time s2, using
  /// the exact bridge transition: P(j) proportional to zeta_j phi_{s2}(y_j - x).
  /// u is uniform on [0, 1).
  double sample_terminal(double s2, double x, double u) const;

  const GridMeasure& mu0() const { return mu0_; }
  double target_spacing() const { return y_spacing_; }
  std::span<const double> nodes() const { return y_; }
  double min_node_gap() const { return min_gap_; }

 private:
  struct Window {
    std::size_t lo;
    std::size_t hi;
    double a_near;
  };
  Window window(double s2, double x) const;

  struct Sums {
    double lse;  // log sum_j exp(a_j)
    double m1;   // weighted mean of y - x
    double m2;   // weighted mean of (y - x)^2
  };
  Sums sums(double s2, double x) const;
  void check_time(double t) const;

  double horizon_;
  double t_cap_;
  std::vector<double> y_;   // active target nodes
  std::vector<double> lg_;  // g_j + log h on active nodes
  double lg_max_;
  double min_gap_;
  double y_spacing_;
  GridMeasure mu0_;
  GridSpec x0_grid_;
  std::vector<double> f_;
  std::vector<std::size_t> active_rows_;
};

/// Drift at a single time level for a known set of positions. When the
/// positions are many compared with the lattice needed to resolve the drift,
/// beta is tabulated on that lattice and read back by cubic Hermite
/// interpolation; otherwise every position is evaluated directly.
class StepDrift {
 public:
  StepDrift(const DriftField& field, double t, std::span<const double> positions);

  double operator()(double x) const;
  bool tabulated() const { return !beta_.empty(); }

 private:
  const DriftField* field_;
  double t_;
  double lo_ = 0.0;
  double step_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> dbeta_;
};

}  // namespace mfp
