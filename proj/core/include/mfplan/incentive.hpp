#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mfplan/drift.hpp"
#include "mfplan/hamiltonian.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/simulate.hpp"

namespace mfp {

/// Y0 as a constant plus an optional table in x0 (linear interpolation,
/// flat extrapolation).
struct Y0Spec {
  double constant = 0.0;
  std::vector<double> table_x;
  std::vector<double> table_y;

  double operator()(double x0) const;

  /// Reads the two-column `x,y0` CSV format (header required, x sorted).
  static Y0Spec from_csv(const std::string& path, double constant = 0.0);
};

/// Per-path incentive values: xi = y0 + stoch_int - quad_term + mf_term.
struct IncentiveValues {
  std::vector<double> xi;
  std::vector<double> stoch_int;
  std::vector<double> quad_term;
  std::vector<double> mf_term;
  std::vector<double> y0;
};

enum class LqRoute {
  automatic,     // paths when stored, else accumulators
  paths,         // recompute the drift along stored paths
  accumulators,  // use the sums recorded during simulation
};

/// LQ incentive with the left-point stochastic integral. The flow must be
/// the equilibrium flow on the ensemble's time grid.
IncentiveValues incentive_lq(const PathEnsemble& ens, const DriftField& field,
                             const CostSpec& cost, const FlowMoments& flow, const Y0Spec& y0,
                             LqRoute route = LqRoute::automatic);

/// xi = y0 + sum Z_k dX_k - sum H(Z_k, m_k) dt with Z_k = invert_drift_to_z(beta_k).
/// Needs stored paths.
IncentiveValues incentive_drift(const PathEnsemble& ens, const DriftField& field,
                                const CostSpec& cost, const ControlSet& U,
                                const FlowMoments& flow, const Y0Spec& y0);

/// Z process for the second-order functional: "zero" | "const:z".
struct ZSpec {
  double value = 0.0;
  static ZSpec parse(std::string_view text);
};

/// Gamma process: "zero" | "const:g" | "cm_sigma2" (Gamma_k = C_{m_k} sigma_k^2).
struct GammaSpec {
  enum class Kind { constant, cm_sigma2 };
  Kind kind = Kind::constant;
  double value = 0.0;
  static GammaSpec parse(std::string_view text);
};

/// Realized variance rate per step: centered moving average of dX^2 / dt
/// over `window` increments (clipped at the ends). Row p holds path p.
Matrix realized_variance(const PathEnsemble& ens, std::size_t window);

/// Y1 = sum Z dX + sum (Gamma sigma^2 / 2 - H(Z, Gamma, m)) dt for the
/// quarter-C_m example cost. Needs stored paths.
IncentiveValues incentive_second_order(const PathEnsemble& ens, const ZSpec& z,
                                       const GammaSpec& gamma, const FlowMoments& flow,
                                       std::size_t window = 10, double y0 = 0.0);

struct Objective {
  double j = 0.0;
  double se = 0.0;
  std::vector<double> per_path;  // NaN on failed paths
};

/// J = E[xi - sum (|beta + delta|^2 / 2 + f(m_k)) dt] under the ensemble's law.
Objective objective_j(const IncentiveValues& xi, const PathEnsemble& ens,
                      const CostSpec& cost, const FlowMoments& flow);

/// Mean and paired standard error of a.per_path - b.per_path.
MeanWithError paired_difference(const Objective& a, const Objective& b);

/// Empirical quantile of |xi| over surviving paths.
double xi_tail(const IncentiveValues& v, const PathEnsemble& ens, double level = 0.999);

}  // namespace mfp
