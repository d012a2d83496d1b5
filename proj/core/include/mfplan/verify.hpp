#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfplan/config.hpp"
#include "mfplan/drift.hpp"
#include "mfplan/hamiltonian.hpp"
#include "mfplan/incentive.hpp"
#include "mfplan/schrodinger.hpp"
#include "mfplan/simulate.hpp"

namespace mfp {

struct PlanningComponent {
  double w1_terminal = 0.0;
  double ks_terminal = 0.0;
  double tol_w1 = 0.0;
  bool pass = false;
};

struct EntropyComponent {
  double h_grid = 0.0;
  double h_mc = 0.0;
  double h_mc_se = 0.0;
  double rel_err = 0.0;
  double tol_rel = 0.0;
  bool pass = false;
};

struct GapEntry {
  std::string delta_spec;
  double predicted = 0.0;
  double measured = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct GapComponent {
  double eq_j = 0.0;
  double eq_se = 0.0;
  double y0 = 0.0;  // mean Y0 over paths
  bool eq_pass = false;
  std::vector<GapEntry> entries;
  bool pass = false;
};

struct AssumptionsComponent {
  GrowthCheck quadratic_growth;
  RangeCheck full_range;
  bool pass = false;
};

struct VerificationReport {
  PlanningComponent planning;
  EntropyComponent entropy;
  GapComponent gap;
  AssumptionsComponent assumptions;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  bool pass() const {
    return planning.pass && entropy.pass && gap.pass && assumptions.pass;
  }
};

PlanningComponent planning_check(const PathEnsemble& ens, const GridMeasure& mu1, double tol_w1);

/// Grid entropy H(pi | rho) against the Girsanov estimate E[sum beta^2 dt / 2].
EntropyComponent entropy_consistency(const PathEnsemble& ens, const Coupling& coupling,
                                     double tol_rel = 0.05);

struct PerturbedRun {
  std::string delta_spec;
  Objective objective;
  double predicted;  // E[sum delta^2 dt] / 2 over the perturbed ensemble
};

/// Half the recorded E[sum delta^2 dt].
double predicted_gap(const PathEnsemble& perturbed);

GapComponent optimality_gap_check(const Objective& equilibrium, double mean_y0,
                                  const std::vector<PerturbedRun>& perturbed,
                                  const Tolerances& tol);

AssumptionsComponent check_assumptions(const CostSpec& cost, const ControlSet& U);

// Pipeline pieces shared by the CLI stages.

struct Problem {
  GridMeasure mu0;
  GridMeasure mu1;
};

Problem load_problem(const RunConfig& cfg);
Coupling solve_bridge(const RunConfig& cfg, const Problem& problem);
SimulationOptions simulation_options(const RunConfig& cfg);
Y0Spec y0_spec(const RunConfig& cfg);

/// bridge -> drift -> simulate -> incentive -> checks. Stage failures are
/// rethrown with the stage name prefixed.
VerificationReport full_report(const RunConfig& cfg);

/// Runs fn and prefixes any mfp::Error it throws with the stage name.
template <class F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn());

}  // namespace mfp

#include "mfplan/error.hpp"

namespace mfp {

template <class F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + stage + ": " + e.what());
  }
}

}  // namespace mfp
