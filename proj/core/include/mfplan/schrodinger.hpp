#pragma once

#include <cstddef>
#include <vector>

#include "mfplan/matrix.hpp"
#include "mfplan/measures.hpp"

namespace mfp {

/// Wiener joint law of (X0, X_horizon) on grid x grid.
struct ReferenceCoupling {
  GridMeasure mu0;
  GridSpec x1_grid;
  Matrix logK;  // row i: log N(x_i, horizon)-mass of node y_j, rows normalized
  double horizon = 1.0;

  double log_rho(std::size_t i, std::size_t j) const;
};

/// Rows are normalized exactly; throws a coverage error when more than 1%
/// of the mu0-weighted kernel mass falls outside the x1 grid hull.
ReferenceCoupling build_reference(const GridMeasure& mu0, const GridSpec& x1_grid,
                                  double horizon = 1.0);

struct SinkhornOptions {
  double tol = 1e-9;
  std::size_t max_iter = 20000;
  double max_log_zeta = 700.0;  // |log zeta| beyond this is reported as divergence
};

struct Coupling {
  ReferenceCoupling ref;
  GridMeasure mu1;
  Matrix log_pi;          // -inf off the support
  std::vector<double> f;  // row potentials; defined for every row
  std::vector<double> g;  // column potentials; -inf where mu1 has no mass
  std::size_t iterations = 0;
  double marginal_err = 0.0;

  /// log pi - log rho; -inf on zero-mass target columns.
  double log_zeta(std::size_t i, std::size_t j) const { return f[i] + g[j]; }

  /// Column indices with positive target mass.
  std::vector<std::size_t> active_columns() const;
};

Coupling sinkhorn_solve(const ReferenceCoupling& ref, const GridMeasure& mu1,
                        const SinkhornOptions& opts = {});

/// H(pi | rho).
double coupling_entropy(const Coupling& c);

struct IntegrabilityDiagnostics {
  double e_abs_log = 0.0;  // E_rho |log zeta| over the support of pi
  double e_sq = 0.0;       // E_rho zeta^2
};

IntegrabilityDiagnostics integrability_diagnostics(const Coupling& c);

/// Warns when a diagnostic grows by more than 10x from a grid to its
/// refinement. Returns true when a warning was issued.
bool warn_on_refinement_growth(const IntegrabilityDiagnostics& coarse,
                               const IntegrabilityDiagnostics& fine);

}  // namespace mfp
