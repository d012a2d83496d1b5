#include "mfplan_app/app.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "mfplan/bass.hpp"
#include "mfplan/config.hpp"
#include "mfplan/drift.hpp"
#include "mfplan/error.hpp"
#include "mfplan/hamiltonian.hpp"
#include "mfplan/incentive.hpp"
#include "mfplan/io.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/schrodinger.hpp"
#include "mfplan/simulate.hpp"
#include "mfplan/verify.hpp"
#include "mfplan_app/plot.hpp"

namespace mfp::app {

namespace {

namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> paths;
  std::optional<std::size_t> steps;
  std::vector<std::string> perturb;
  std::optional<double> horizon;
};

RunConfig resolve(const Overrides& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  if (!fs::exists(o.config)) throw ConfigError("config file '" + o.config + "' does not exist");
  RunConfig cfg;
  try {
    cfg = load_config(o.config);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (o.output) cfg.output_dir = *o.output;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.paths) cfg.n_paths = *o.paths;
  if (o.steps) cfg.n_steps = *o.steps;
  if (!o.perturb.empty()) cfg.perturbations = o.perturb;
  if (o.horizon) {
    if (!(*o.horizon > 0.0)) throw ConfigError("--horizon must be positive");
    cfg.horizon = *o.horizon;
  }
  set_worker_count(cfg.threads);
  return cfg;
}

fs::path out(const RunConfig& cfg, const char* name) { return fs::path(cfg.output_dir) / name; }

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

const std::vector<double> kLevels = {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99};

int cmd_bridge(const RunConfig& cfg) {
  const Problem problem = load_problem(cfg);
  const Coupling c = solve_bridge(cfg, problem);
  write_atomic(out(cfg, "coupling.csv"), [&](std::ostream& os) { write_coupling_csv(os, c); });
  const std::string report = bridge_report_json(c);
  write_atomic(out(cfg, "bridge_report.json"), report);
  std::cout << "bridge: entropy=" << coupling_entropy(c) << " iterations=" << c.iterations
            << " marginal_err=" << c.marginal_err << " -> " << cfg.output_dir << "\n";
  return 0;
}

int cmd_drift(const RunConfig& cfg) {
  const Problem problem = load_problem(cfg);
  const Coupling c = solve_bridge(cfg, problem);
  const DriftField field = run_stage("drift", [&] { return DriftField(c, cfg.t_cap_eps); });
  std::vector<double> times;
  for (double f : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99})
    times.push_back(f * cfg.horizon);
  const GridSpec yg = cfg.y_grid_spec();
  const auto xs = linspace(yg.lo(), yg.hi(), 121);
  // a handful of initial nodes spread over the support of mu0
  std::vector<double> x0s;
  const auto& mu0 = problem.mu0;
  for (double q : {0.1, 0.5, 0.9}) {
    const double x0 = atomic_quantile(mu0, q);
    if (x0s.empty() || x0s.back() != x0) x0s.push_back(x0);
  }
  run_stage("drift", [&] {
    write_atomic(out(cfg, "drift.csv"),
                 [&](std::ostream& os) { write_drift_csv(os, field, times, xs, x0s); });
    return 0;
  });
  double max_beta = 0.0;
  for (double t : times)
    for (double x : xs) max_beta = std::max(max_beta, std::abs(field.evaluate(t, x).beta));
  std::cout << "drift: " << times.size() << "x" << xs.size() << " lattice, max|beta|=" << max_beta
            << " -> " << cfg.output_dir << "\n";
  return 0;
}

void write_ensemble_artifacts(const RunConfig& cfg, const PathEnsemble& ens) {
  write_atomic(out(cfg, "paths.csv"), [&](std::ostream& os) { write_paths_csv(os, ens, 100); });
  write_atomic(out(cfg, "flow.csv"), [&](std::ostream& os) { write_flow_csv(os, ens, kLevels); });
  write_atomic(out(cfg, "moments.csv"), [&](std::ostream& os) { write_moments_csv(os, ens); });
  write_atomic(out(cfg, "terminal.csv"), [&](std::ostream& os) {
    os.precision(17);
    os << "x\n";
    for (double x : ens.terminal()) os << x << '\n';
  });
}

int cmd_simulate(const RunConfig& cfg) {
  const Problem problem = load_problem(cfg);
  const Coupling c = solve_bridge(cfg, problem);
  const DriftField field = run_stage("drift", [&] { return DriftField(c, cfg.t_cap_eps); });
  const TimeGrid tg = run_stage("simulate", [&] { return TimeGrid(cfg.n_steps, cfg.horizon); });
  const SimulationOptions sim = simulation_options(cfg);
  if (cfg.perturbations.size() > 1)
    throw ConfigError("simulate takes at most one perturbation");
  const PathEnsemble ens = run_stage("simulate", [&] {
    if (cfg.perturbations.empty()) return simulate_equilibrium(field, tg, sim);
    return simulate_perturbed(field, Perturbation::parse(cfg.perturbations[0]), tg, sim);
  });
  write_ensemble_artifacts(cfg, ens);
  const auto check = planning_check(ens, problem.mu1, cfg.tol.w1);
  std::cout << "simulate: " << ens.n_paths << " paths x " << tg.steps()
            << " steps, terminal W1=" << check.w1_terminal << " KS=" << check.ks_terminal
            << " failures=" << ens.failures() << " -> " << cfg.output_dir << "\n";
  return 0;
}

int cmd_incentive(const RunConfig& cfg) {
  if (cfg.incentive == "second_order") {
    if (cfg.paths_csv.empty())
      throw ConfigError("incentive.kind = second_order needs incentive.paths_csv");
    const auto [z, g] = [&] {
      try {
        return std::pair{ZSpec::parse(cfg.z_process), GammaSpec::parse(cfg.gamma_process)};
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }();
    const PathEnsemble ens = run_stage("incentive", [&] { return read_paths_csv(cfg.paths_csv); });
    const auto v = run_stage("incentive", [&] {
      return incentive_second_order(ens, z, g, ens.flow, cfg.sigma_window, cfg.y0);
    });
    write_atomic(out(cfg, "xi.csv"), [&](std::ostream& os) { write_xi_csv(os, v); });
    const auto m = mean_with_error(v.xi);
    ObjectiveSummary s{m.mean, m.se, xi_tail(v, ens), {}};
    write_atomic(out(cfg, "objective.json"), objective_json(s));
    std::cout << "incentive: second-order mean Y1=" << m.mean << " (SE " << m.se << ") over "
              << ens.n_paths << " paths -> " << cfg.output_dir << "\n";
    return 0;
  }

  CostSpec cost;
  ControlSet U;
  Y0Spec y0;
  std::vector<Perturbation> deltas;
  try {
    cost = CostSpec::parse(cfg.cost);
    cost.mf = MeanFieldTerm::parse(cfg.mf_term);
    U = ControlSet::parse(cfg.control);
    y0 = y0_spec(cfg);
    for (const auto& s : cfg.perturbations) deltas.push_back(Perturbation::parse(s));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.incentive != "lq" && cfg.incentive != "drift")
    throw ConfigError("incentive.kind must be lq, drift or second_order");
  const bool drift_kind = cfg.incentive == "drift";

  const Problem problem = load_problem(cfg);
  const Coupling c = solve_bridge(cfg, problem);
  const DriftField field = run_stage("drift", [&] { return DriftField(c, cfg.t_cap_eps); });
  const TimeGrid tg = run_stage("simulate", [&] { return TimeGrid(cfg.n_steps, cfg.horizon); });
  SimulationOptions sim = simulation_options(cfg);
  if (drift_kind) sim.store_paths = true;
  const PathEnsemble eq = run_stage("simulate", [&] { return simulate_equilibrium(field, tg, sim); });

  auto values = [&](const PathEnsemble& ens) {
    return run_stage("incentive", [&] {
      if (drift_kind) return incentive_drift(ens, field, cost, U, eq.flow, y0);
      return incentive_lq(ens, field, cost, eq.flow, y0);
    });
  };
  const IncentiveValues xi = values(eq);
  write_atomic(out(cfg, "xi.csv"), [&](std::ostream& os) { write_xi_csv(os, xi); });

  ObjectiveSummary s;
  s.xi_tail_999 = xi_tail(xi, eq);
  if (cost.kind == CostSpec::Kind::quadratic) {
    const Objective eq_obj = run_stage("incentive", [&] { return objective_j(xi, eq, cost, eq.flow); });
    s.j = eq_obj.j;
    s.se = eq_obj.se;
    std::vector<PerturbedRun> runs;
    for (const auto& d : deltas) {
      const PathEnsemble pe = run_stage("simulate", [&] { return simulate_perturbed(field, d, tg, sim); });
      const auto pxi = values(pe);
      runs.push_back({d.spec(), objective_j(pxi, pe, cost, eq.flow), predicted_gap(pe)});
    }
    s.gaps = optimality_gap_check(eq_obj, mean_with_error(xi.y0).mean, runs, cfg.tol).entries;
  } else {
    const auto m = mean_with_error(xi.xi);
    s.j = std::nan("");
    s.se = m.se;
  }
  write_atomic(out(cfg, "objective.json"), objective_json(s));
  std::cout << "incentive: J=" << s.j << " (SE " << s.se << "), " << s.gaps.size()
            << " perturbations -> " << cfg.output_dir << "\n";
  return 0;
}

int cmd_bass(const RunConfig& cfg) {
  BassScheme scheme;
  try {
    scheme = parse_bass_scheme(cfg.bass_scheme);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const Problem problem = load_problem(cfg);
  const BassModel model = run_stage("bass", [&] { return BassModel(problem.mu1, cfg.t_cap_eps); });
  const TimeGrid tg = run_stage("bass", [&] { return TimeGrid(cfg.n_steps, 1.0); });
  const BassEnsemble be = run_stage("bass", [&] {
    return bass_simulate(model, problem.mu0, tg, simulation_options(cfg), scheme);
  });
  const BassReport r = bass_report(model, be, scheme);
  write_atomic(out(cfg, "bass_paths.csv"), [&](std::ostream& os) { write_paths_csv(os, be.ens, 100); });
  write_atomic(out(cfg, "bass_report.json"), bass_report_json(r));
  std::cout << "bass: c=" << r.c << " terminal W1=" << r.w1_terminal << " KS=" << r.ks_terminal
            << " max|X1-T(B1)|=" << r.max_abs_error << " -> " << cfg.output_dir << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const VerificationReport r = full_report(cfg);
  write_atomic(out(cfg, "report.json"), report_json(r));
  std::cout << "verify: " << (r.pass() ? "PASS" : "FAIL") << " (planning W1=" << r.planning.w1_terminal
            << ", entropy rel_err=" << r.entropy.rel_err << ", gaps=" << r.gap.entries.size()
            << ") -> " << (fs::path(cfg.output_dir) / "report.json").string() << "\n";
  return r.pass() ? 0 : 1;
}

int cmd_plot(const RunConfig& cfg) {
  std::optional<GridMeasure> mu1;
  try {
    mu1 = load_problem(cfg).mu1;
  } catch (const Error&) {
    // the histogram is still drawn without the target overlay
  }
  const auto files = render_plots(cfg.output_dir, mu1 ? &*mu1 : nullptr);
  if (files.empty()) {
    std::cerr << "plot: no artifacts found in " << cfg.output_dir << "\n";
    return 1;
  }
  std::cout << "plot: wrote " << files.size() << " figure(s) to " << cfg.output_dir << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"mfplan: entropic mean-field planning toolkit"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"bridge", "Solve the static Schrodinger bridge"},
      {"drift", "Tabulate the equilibrium drift"},
      {"simulate", "Simulate the equilibrium (or perturbed) ensemble"},
      {"incentive", "Evaluate incentives and objectives"},
      {"bass", "Run the Bass construction"},
      {"verify", "Run the full certification pipeline"},
      {"plot", "Render SVG figures from existing artifacts"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Run configuration (key=value or JSON)");
    sub->add_option("--output", o.output, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--threads", o.threads, "Worker thread cap");
    sub->add_option("--paths", o.paths, "Number of paths");
    sub->add_option("--steps", o.steps, "Number of time steps");
    sub->add_option("--perturb", o.perturb, "Perturbation spec (repeatable)");
    sub->add_option("--horizon", o.horizon, "Reference time horizon");
  }

  std::vector<const char*> argv{"mfplan"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = resolve(o);
    if (name == "bridge") return cmd_bridge(cfg);
    if (name == "drift") return cmd_drift(cfg);
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "incentive") return cmd_incentive(cfg);
    if (name == "bass") return cmd_bass(cfg);
    if (name == "verify") return cmd_verify(cfg);
    return cmd_plot(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "mfplan " << name << ": config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "mfplan " << name << ": " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::parse ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "mfplan " << name << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mfp::app
