#include <cmath>

#include "doctest.h"
#include "mfplan/verify.hpp"

using namespace mfp;

namespace {

RunConfig base(const char* mu0, const char* mu1) {
  RunConfig c;
  c.mu0 = mu0;
  c.mu1 = mu1;
  c.n_paths = 100000;
  c.n_steps = 100;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("planning and entropy components") {
    const RunConfig cfg = base("point:0", "gaussian:1,1");
    const Problem pr = load_problem(cfg);
    const Coupling c = solve_bridge(cfg, pr);
    const DriftField f(c);
    const auto ens = simulate_equilibrium(f, TimeGrid(100), simulation_options(cfg));
    const auto ok = planning_check(ens, pr.mu1, 0.02);
    CHECK(ok.pass);
    const auto shifted = planning_check(ens, parse_measure_spec("gaussian:1.5,1", cfg.y_grid_spec()), 0.02);
    CHECK_FALSE(shifted.pass);
    CHECK(shifted.w1_terminal == doctest::Approx(0.5).epsilon(0.05));

    const auto h = entropy_consistency(ens, c);
    CHECK(h.h_grid == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::abs(h.h_mc - 0.5) <= 3 * h.h_mc_se + 1e-4);
    CHECK(h.pass);
  }

  TEST_CASE("entropy of the zero-drift case") {
    RunConfig cfg = base("gaussian:0,0.5", "gaussian:0,1.1180339887498949");
    cfg.n_paths = 5000;
    const Problem pr = load_problem(cfg);
    const Coupling c = solve_bridge(cfg, pr);
    const auto ens = simulate_equilibrium(DriftField(c), TimeGrid(100), simulation_options(cfg));
    const auto h = entropy_consistency(ens, c);
    CHECK(h.h_grid < 1e-3);
    CHECK(h.h_mc < 1e-3);
    CHECK(h.pass);
  }

  TEST_CASE("optimality gap bookkeeping") {
    RunConfig cfg = base("gaussian:0,0.5", "gaussian:0.5,1");
    cfg.n_paths = 20000;
    const Problem pr = load_problem(cfg);
    const DriftField f(solve_bridge(cfg, pr));
    const TimeGrid tg(100);
    const auto sim = simulation_options(cfg);
    const auto cost = CostSpec::quadratic();
    const Y0Spec y0{};
    const auto eq = simulate_equilibrium(f, tg, sim);
    const auto jeq = objective_j(incentive_lq(eq, f, cost, eq.flow, y0), eq, cost, eq.flow);
    std::vector<PerturbedRun> runs;
    for (const char* spec : {"const:0", "const:0.2", "state:0.1"}) {
      const auto pe = simulate_perturbed(f, Perturbation::parse(spec), tg, sim);
      runs.push_back({spec, objective_j(incentive_lq(pe, f, cost, eq.flow, y0), pe, cost, eq.flow),
                      predicted_gap(pe)});
    }
    const auto gap = optimality_gap_check(jeq, 0.0, runs, Tolerances{});
    CHECK(gap.entries[0].measured == 0.0);
    CHECK(gap.entries[0].predicted == 0.0);
    CHECK(gap.entries[1].predicted == doctest::Approx(0.02).epsilon(1e-12));
    // state:0.1 predicts half the recorded sum of (0.1 X_t)^2 dt
    CHECK(gap.entries[2].predicted > 0.0);
    CHECK(gap.entries[2].predicted < 0.01);
    CHECK(gap.eq_pass);
    CHECK(gap.pass);
  }

  TEST_CASE("assumption probes") {
    CHECK(check_assumptions(CostSpec::quadratic(), ControlSet::real_line()).pass);
    CHECK_FALSE(check_assumptions(CostSpec::quadratic(), ControlSet::interval(-1, 1)).pass);
  }

  TEST_CASE("full reports") {
    RunConfig t = base("point:0", "gaussian:1,1");
    t.perturbations = {"const:0.2", "state:0.1"};
    const auto r = full_report(t);
    CHECK(r.pass());
    CHECK(r.gap.entries.size() == 2);
    CHECK(r.config_hash == config_hash(t));

    RunConfig z = base("gaussian:0,0.5", "gaussian:0,1.1180339887498949");
    z.n_paths = 20000;
    CHECK(full_report(z).pass());

    RunConfig s = base("point:0", "gaussian:1,1");
    s.n_paths = 20000;
    // A target the drift was not built for: plan for N(1,1), score against N(1.5,1).
    const Problem pr = load_problem(s);
    const auto ens = simulate_equilibrium(DriftField(solve_bridge(s, pr)), TimeGrid(100), simulation_options(s));
    CHECK_FALSE(planning_check(ens, parse_measure_spec("gaussian:1.5,1", s.y_grid_spec()), 0.02).pass);

    RunConfig p = t;
    p.cost = "power:4,1";
    CHECK_THROWS_AS(full_report(p), Error);
  }
}
