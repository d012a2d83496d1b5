#include "mfplan/verify.hpp"

#include <algorithm>
#include <cmath>

#include "mfplan/error.hpp"
#include "mfplan/parallel.hpp"

namespace mfp {

PlanningComponent planning_check(const PathEnsemble& ens, const GridMeasure& mu1, double tol_w1) {
  const EmpiricalMeasure terminal(ens.terminal());
  PlanningComponent out;
  out.w1_terminal = wasserstein1(terminal, mu1);
  out.ks_terminal = ks_statistic(terminal, mu1);
  out.tol_w1 = tol_w1;
  out.pass = out.w1_terminal < tol_w1;
  return out;
}

EntropyComponent entropy_consistency(const PathEnsemble& ens, const Coupling& coupling,
                                     double tol_rel) {
  std::vector<double> energy;
  energy.reserve(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p)
    if (!ens.failed[p]) energy.push_back(ens.acc.drift_energy[p]);
  const auto m = mean_with_error(energy);
  EntropyComponent out;
  out.h_grid = coupling_entropy(coupling);
  out.h_mc = m.mean;
  out.h_mc_se = m.se;
  out.tol_rel = tol_rel;
  out.rel_err = std::abs(out.h_mc - out.h_grid) / std::max(out.h_grid, 0.01);
  out.pass = out.rel_err < tol_rel || (out.h_grid < 1e-3 && out.h_mc < 1e-3);
  return out;
}

double predicted_gap(const PathEnsemble& perturbed) {
  std::vector<double> half;
  half.reserve(perturbed.n_paths);
  for (std::size_t p = 0; p < perturbed.n_paths; ++p)
    if (!perturbed.failed[p]) half.push_back(0.5 * perturbed.acc.delta_sq[p]);
  return pairwise_sum(half) / static_cast<double>(std::max<std::size_t>(half.size(), 1));
}

GapComponent optimality_gap_check(const Objective& equilibrium, double mean_y0,
                                  const std::vector<PerturbedRun>& perturbed,
                                  const Tolerances& tol) {
  GapComponent out;
  out.eq_j = equilibrium.j;
  out.eq_se = equilibrium.se;
  out.y0 = mean_y0;
  // A zero standard error (zero drift) still allows rounding-level noise.
  out.eq_pass = std::abs(equilibrium.j - mean_y0) <= tol.gap_se * equilibrium.se + 1e-12;
  out.pass = out.eq_pass;
  for (const auto& run : perturbed) {
    const auto d = paired_difference(equilibrium, run.objective);
    GapEntry e;
    e.delta_spec = run.delta_spec;
    e.predicted = run.predicted;
    e.measured = d.mean;
    e.se = d.se;
    e.pass = std::abs(e.measured - e.predicted) < tol.gap_se * e.se + tol.gap_abs;
    out.pass = out.pass && e.pass;
    out.entries.push_back(e);
  }
  return out;
}

AssumptionsComponent check_assumptions(const CostSpec& cost, const ControlSet& U) {
  std::vector<double> z;
  for (int k = 0; k <= 20; ++k) {
    const double v = std::pow(10.0, -2.0 + 0.2 * k);
    z.push_back(v);
    z.push_back(-v);
  }
  AssumptionsComponent out;
  out.quadratic_growth = check_quadratic_growth(cost, U, z);
  out.full_range = check_full_range(cost, U);
  out.pass = out.quadratic_growth.ok && out.full_range.full;
  return out;
}

Problem load_problem(const RunConfig& cfg) {
  return run_stage("measures", [&] {
    return Problem{parse_measure_spec(cfg.mu0, cfg.x_grid_spec()),
                   parse_measure_spec(cfg.mu1, cfg.y_grid_spec())};
  });
}

Coupling solve_bridge(const RunConfig& cfg, const Problem& problem) {
  return run_stage("bridge", [&] {
    const auto ref = build_reference(problem.mu0, cfg.y_grid_spec(), cfg.horizon);
    SinkhornOptions opts;
    opts.tol = cfg.sinkhorn_tol;
    opts.max_iter = cfg.sinkhorn_max_iter;
    return sinkhorn_solve(ref, problem.mu1, opts);
  });
}

SimulationOptions simulation_options(const RunConfig& cfg) {
  SimulationOptions o;
  o.n_paths = cfg.n_paths;
  o.seed = cfg.seed;
  o.store_paths = cfg.store_paths;
  return o;
}

Y0Spec y0_spec(const RunConfig& cfg) {
  if (cfg.y0_table.empty()) return Y0Spec{cfg.y0, {}, {}};
  return Y0Spec::from_csv(cfg.y0_table, cfg.y0);
}

VerificationReport full_report(const RunConfig& cfg) {
  const auto [cost, U, y0] = run_stage("config", [&] {
    auto c = CostSpec::parse(cfg.cost);
    c.mf = MeanFieldTerm::parse(cfg.mf_term);
    if (c.kind != CostSpec::Kind::quadratic)
      throw Error(ErrorCode::invalid_argument,
                  "verify certifies the LQ identities and needs cost = quadratic");
    if (std::abs(cfg.horizon - 1.0) > 1e-12)
      throw Error(ErrorCode::invalid_argument, "verify runs on the unit horizon");
    return std::tuple{c, ControlSet::parse(cfg.control), y0_spec(cfg)};
  });
  std::vector<Perturbation> deltas;
  run_stage("config", [&] {
    for (const auto& s : cfg.perturbations) deltas.push_back(Perturbation::parse(s));
    return 0;
  });

  const Problem problem = load_problem(cfg);
  const Coupling coupling = solve_bridge(cfg, problem);
  const DriftField field = run_stage("drift", [&] { return DriftField(coupling, cfg.t_cap_eps); });
  const TimeGrid tg = run_stage("simulate", [&] { return TimeGrid(cfg.n_steps, cfg.horizon); });
  const SimulationOptions sim = simulation_options(cfg);
  const PathEnsemble eq = run_stage("simulate", [&] { return simulate_equilibrium(field, tg, sim); });

  const Objective eq_obj = run_stage("incentive", [&] {
    const auto xi = incentive_lq(eq, field, cost, eq.flow, y0, LqRoute::accumulators);
    return objective_j(xi, eq, cost, eq.flow);
  });
  double mean_y0 = 0.0;
  {
    std::vector<double> v;
    for (std::size_t p = 0; p < eq.n_paths; ++p)
      if (!eq.failed[p]) v.push_back(y0(eq.x0[p]));
    mean_y0 = pairwise_sum(v) / static_cast<double>(std::max<std::size_t>(v.size(), 1));
  }

  std::vector<PerturbedRun> runs;
  for (const auto& d : deltas) {
    const PathEnsemble pe =
        run_stage("simulate", [&] { return simulate_perturbed(field, d, tg, sim); });
    runs.push_back(run_stage("incentive", [&] {
      const auto xi = incentive_lq(pe, field, cost, eq.flow, y0, LqRoute::accumulators);
      return PerturbedRun{d.spec(), objective_j(xi, pe, cost, eq.flow), predicted_gap(pe)};
    }));
  }

  VerificationReport r;
  r.config_hash = config_hash(cfg);
  r.seed = cfg.seed;
  run_stage("checks", [&] {
    r.planning = planning_check(eq, problem.mu1, cfg.tol.w1);
    r.entropy = entropy_consistency(eq, coupling, cfg.tol.entropy_rel);
    r.gap = optimality_gap_check(eq_obj, mean_y0, runs, cfg.tol);
    r.assumptions = check_assumptions(cost, U);
    return 0;
  });
  return r;
}

}  // namespace mfp
