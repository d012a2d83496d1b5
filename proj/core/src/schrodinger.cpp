#include "mfplan/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfplan/error.hpp"
#include "mfplan/gaussian.hpp"
#include "mfplan/log.hpp"
#include "mfplan/parallel.hpp"

namespace mfp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Row and column loops are short; use small fixed blocks so rows still
// spread across workers.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& f) {
  constexpr std::size_t block = 16;
  const std::size_t blocks = (n + block - 1) / block;
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b)
      for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) f(i);
  });
}

std::vector<std::size_t> positive_indices(std::span<const double> w) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) out.push_back(i);
  return out;
}

}  // namespace

double ReferenceCoupling::log_rho(std::size_t i, std::size_t j) const {
  const double w = mu0.weight(i);
  return w > 0.0 ? std::log(w) + logK(i, j) : kNegInf;
}

ReferenceCoupling build_reference(const GridMeasure& mu0, const GridSpec& x1_grid,
                                  double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorCode::invalid_argument, "horizon must be positive");
  const GridSpec& xg = mu0.grid();
  const std::size_t n0 = xg.size();
  const std::size_t n1 = x1_grid.size();
  const double log_h = std::log(x1_grid.spacing());
  const double sd = std::sqrt(horizon);
  const double lo = x1_grid.edge(0);
  const double hi = x1_grid.edge(n1);

  Matrix logK(n0, n1);
  std::vector<double> lost(n0, 0.0);
  for_each_index(n0, [&](std::size_t i) {
    const double x = xg.node(i);
    auto row = logK.row(i);
    for (std::size_t j = 0; j < n1; ++j)
      row[j] = log_gaussian_density(x1_grid.node(j) - x, horizon) + log_h;
    const double norm = log_sum_exp(row);
    for (double& v : row) v -= norm;
    lost[i] = std::max(0.0, 1.0 - (normal_cdf((hi - x) / sd) - normal_cdf((lo - x) / sd)));
  });

  double weighted_loss = 0.0;
  for (std::size_t i = 0; i < n0; ++i) weighted_loss += mu0.weight(i) * lost[i];
  if (weighted_loss > 1e-2)
    throw Error(ErrorCode::coverage,
                "target grid misses " + std::to_string(weighted_loss) +
                    " of the reference kernel mass; widen the y grid");
  if (weighted_loss > 1e-6)
    warn("reference kernel loses " + std::to_string(weighted_loss) +
         " of its mass outside the y grid");
  return ReferenceCoupling{mu0, x1_grid, std::move(logK), horizon};
}

std::vector<std::size_t> Coupling::active_columns() const {
  return positive_indices(mu1.weights());
}

Coupling sinkhorn_solve(const ReferenceCoupling& ref, const GridMeasure& mu1,
                        const SinkhornOptions& opts) {
  if (!(mu1.grid() == ref.x1_grid))
    throw Error(ErrorCode::grid_mismatch, "target measure is not on the reference y grid");
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "sinkhorn tol must be > 0");

  const std::size_t n0 = ref.logK.rows();
  const std::size_t n1 = ref.logK.cols();
  const auto rows = positive_indices(ref.mu0.weights());
  const auto cols = positive_indices(mu1.weights());
  const std::size_t nr = rows.size();
  const std::size_t nc = cols.size();

  // Compact copies of the active block, row-major and transposed.
  Matrix K(nr, nc);
  Matrix KT(nc, nr);
  for (std::size_t a = 0; a < nr; ++a)
    for (std::size_t b = 0; b < nc; ++b) {
      K(a, b) = ref.logK(rows[a], cols[b]);
      KT(b, a) = K(a, b);
    }
  std::vector<double> log_w0(nr), log_w1(nc), w1(nc);
  for (std::size_t a = 0; a < nr; ++a) log_w0[a] = std::log(ref.mu0.weight(rows[a]));
  for (std::size_t b = 0; b < nc; ++b) {
    w1[b] = mu1.weight(cols[b]);
    log_w1[b] = std::log(w1[b]);
  }

  std::vector<double> f(nr, 0.0), g = log_w1, col_lse(nc);

  auto update_f = [&] {
    for_each_index(nr, [&](std::size_t a) {
      const auto k = K.row(a);
      double m = kNegInf;
      for (std::size_t b = 0; b < nc; ++b) m = std::max(m, k[b] + g[b]);
      double s = 0.0;
      for (std::size_t b = 0; b < nc; ++b) s += std::exp(k[b] + g[b] - m);
      f[a] = -(m + std::log(s));
    });
  };
  // log of the column sums of w0 e^f K, i.e. column marginal minus g.
  auto update_col_lse = [&] {
    for_each_index(nc, [&](std::size_t b) {
      const auto k = KT.row(b);
      double m = kNegInf;
      for (std::size_t a = 0; a < nr; ++a) m = std::max(m, log_w0[a] + f[a] + k[a]);
      double s = 0.0;
      for (std::size_t a = 0; a < nr; ++a) s += std::exp(log_w0[a] + f[a] + k[a] - m);
      col_lse[b] = m + std::log(s);
    });
  };
  auto check_finite = [&](std::size_t iter) {
    for (std::size_t a = 0; a < nr; ++a)
      if (!std::isfinite(f[a]))
        throw Error(ErrorCode::divergence,
                    "sinkhorn potentials became non-finite at iteration " + std::to_string(iter));
  };

  update_f();
  check_finite(0);
  double err = 0.0;
  std::size_t iter = 0;
  for (;;) {
    update_col_lse();
    err = 0.0;
    for (std::size_t b = 0; b < nc; ++b) err += std::abs(std::exp(col_lse[b] + g[b]) - w1[b]);
    if (!std::isfinite(err))
      throw Error(ErrorCode::divergence, "sinkhorn marginal error became non-finite");
    if (err < opts.tol) break;
    if (iter >= opts.max_iter)
      throw Error(ErrorCode::convergence,
                  "sinkhorn did not converge in " + std::to_string(opts.max_iter) +
                      " iterations (marginal_err " + std::to_string(err) + ")");
    ++iter;
    for (std::size_t b = 0; b < nc; ++b) g[b] = log_w1[b] - col_lse[b];
    update_f();
    check_finite(iter);
  }

  Coupling c{ref, mu1, Matrix(n0, n1, kNegInf), std::vector<double>(n0, 0.0),
             std::vector<double>(n1, kNegInf), iter, err};
  for (std::size_t b = 0; b < nc; ++b) c.g[cols[b]] = g[b];
  // Inactive rows get the potential that the row update would give them, so
  // that zeta extends to every initial node.
  for_each_index(n0, [&](std::size_t i) {
    const auto k = ref.logK.row(i);
    double m = kNegInf;
    for (std::size_t b = 0; b < nc; ++b) m = std::max(m, k[cols[b]] + g[b]);
    double s = 0.0;
    for (std::size_t b = 0; b < nc; ++b) s += std::exp(k[cols[b]] + g[b] - m);
    c.f[i] = -(m + std::log(s));
  });
  for (std::size_t a = 0; a < nr; ++a) c.f[rows[a]] = f[a];

  double worst = 0.0;
  for (std::size_t a = 0; a < nr; ++a) {
    const std::size_t i = rows[a];
    auto out = c.log_pi.row(i);
    for (std::size_t b = 0; b < nc; ++b) {
      const std::size_t j = cols[b];
      out[j] = log_w0[a] + ref.logK(i, j) + f[a] + g[b];
      worst = std::max(worst, std::abs(f[a] + g[b]));
    }
  }
  if (!(worst <= opts.max_log_zeta))
    throw Error(ErrorCode::divergence,
                "coupling density is unbounded on the grid (max |log zeta| = " +
                    std::to_string(worst) + "); target lies outside the reference range");
  return c;
}

double coupling_entropy(const Coupling& c) {
  const std::size_t n0 = c.log_pi.rows();
  const std::size_t n1 = c.log_pi.cols();
  std::vector<double> terms;
  terms.reserve(n0);
  for (std::size_t i = 0; i < n0; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n1; ++j) {
      const double lp = c.log_pi(i, j);
      if (lp == kNegInf) continue;
      const double lr = c.ref.log_rho(i, j);
      if (lr == kNegInf)
        throw Error(ErrorCode::absolute_continuity,
                    "absolute continuity violated: pi > 0 where rho = 0");
      s += std::exp(lp) * (lp - lr);
    }
    terms.push_back(s);
  }
  return std::max(0.0, pairwise_sum(terms));
}

IntegrabilityDiagnostics integrability_diagnostics(const Coupling& c) {
  const std::size_t n0 = c.log_pi.rows();
  const std::size_t n1 = c.log_pi.cols();
  std::vector<double> abs_log(n0, 0.0), sq(n0, 0.0);
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double lp = c.log_pi(i, j);
      if (lp == kNegInf) continue;
      const double lz = lp - c.ref.log_rho(i, j);
      abs_log[i] += std::exp(c.ref.log_rho(i, j)) * std::abs(lz);
      sq[i] += std::exp(lp + lz);  // rho * zeta^2 = pi * zeta
    }
  }
  return {pairwise_sum(abs_log), pairwise_sum(sq)};
}

bool warn_on_refinement_growth(const IntegrabilityDiagnostics& coarse,
                               const IntegrabilityDiagnostics& fine) {
  bool warned = false;
  if (fine.e_abs_log > 10.0 * coarse.e_abs_log && fine.e_abs_log > 1e-12) {
    warn("E|log zeta| grew more than 10x under grid refinement (" +
         std::to_string(coarse.e_abs_log) + " -> " + std::to_string(fine.e_abs_log) + ")");
    warned = true;
  }
  if (fine.e_sq > 10.0 * coarse.e_sq) {
    warn("E[zeta^2] grew more than 10x under grid refinement (" +
         std::to_string(coarse.e_sq) + " -> " + std::to_string(fine.e_sq) + ")");
    warned = true;
  }
  return warned;
}

}  // namespace mfp
