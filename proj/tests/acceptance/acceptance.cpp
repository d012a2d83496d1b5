// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "mfplan/bass.hpp"
#include "mfplan/io.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/verify.hpp"
#include "oracles.hpp"

using namespace mfp;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(secs < budget_s, "time budget " + std::to_string(budget_s) + " s");
  if (!out.pass) ++failures;
  std::printf("criterion %d: %s  %s (%.1f s)%s\n", id, out.pass ? "PASS" : "FAIL", title, secs,
              out.detail.str().c_str());
  std::fflush(stdout);
}

SimulationOptions sim(std::size_t n, std::uint64_t seed = 1) {
  SimulationOptions o;
  o.n_paths = n;
  o.seed = seed;
  return o;
}

// Max |beta - expect| over t in [0, 0.99] step 0.01, |x| <= 3 step 0.05.
double lattice_error(const DriftField& f, double expect) {
  double worst = 0.0;
  for (int i = 0; i <= 99; ++i)
    for (int k = -60; k <= 60; ++k)
      worst = std::max(worst, std::abs(f.evaluate(0.01 * i, 0.05 * k).beta - expect));
  return worst;
}

void zero_drift(Outcome& o) {
  const GridSpec g(-8, 8, 401);
  const auto mu0 = parse_measure_spec("mixture:(gaussian:-0.5,0.4;1)(gaussian:0.8,0.3;1)", g);
  const auto mu1 = heat_convolve(mu0, 1.0);
  const Coupling c = sinkhorn_solve(build_reference(mu0, g), mu1);
  const double h = coupling_entropy(c);
  const DriftField f(c);
  const double beta = lattice_error(f, 0.0);
  const auto ens = simulate_equilibrium(f, TimeGrid(200), sim(100000));
  const double w1 = wasserstein1(EmpiricalMeasure(ens.terminal()), mu1);
  o.detail << "entropy=" << h << " max|beta|=" << beta << " W1=" << w1;
  o.require(h < 1e-8, "entropy < 1e-8");
  o.require(beta < 1e-4, "max|beta| < 1e-4");
  o.require(w1 < 0.02, "W1 < 0.02");
}

void translate(Outcome& o) {
  const GridSpec g(-10, 10, 501);
  const auto mu1 = parse_measure_spec("gaussian:1,1", g);
  const Coupling c = sinkhorn_solve(build_reference(parse_measure_spec("point:0", g), g), mu1);
  const DriftField f(c);
  const double beta = lattice_error(f, 1.0);
  const auto ens = simulate_equilibrium(f, TimeGrid(200), sim(100000));
  const double ks = ks_statistic(EmpiricalMeasure(ens.terminal()), mu1);
  const auto ent = entropy_consistency(ens, c);
  o.detail << "max|beta-1|=" << beta << " KS=" << ks << " H_grid=" << ent.h_grid << " H_mc=" << ent.h_mc
           << "+-" << ent.h_mc_se;
  o.require(beta < 1e-3, "beta within 1e-3 of 1");
  o.require(ks < 0.01, "KS < 0.01");
  o.require(std::abs(ent.h_grid - 0.5) < 1e-3, "grid entropy 0.5 +- 1e-3");
  o.require(std::abs(ent.h_mc - 0.5) <= 3 * ent.h_mc_se + 1e-12, "MC entropy 0.5 +- 3SE");
}

RunConfig gap_config() {
  RunConfig cfg;
  cfg.mu0 = "gaussian:0,0.5";
  cfg.mu1 = "mixture:(gaussian:-1,0.5;1)(gaussian:1.5,0.7;1)";
  cfg.n_paths = 100000;
  cfg.n_steps = 200;
  cfg.seed = 1;
  cfg.y0 = 0.0;
  cfg.perturbations = {"const:0.2", "sin:1", "state:0.1"};
  return cfg;
}

void gap_identity(Outcome& o) {
  const auto r = full_report(gap_config());
  o.detail << "J_eq=" << r.gap.eq_j << "+-" << r.gap.eq_se;
  for (const auto& e : r.gap.entries)
    o.detail << " " << e.delta_spec << ": gap=" << e.measured << "+-" << e.se << " pred=" << e.predicted;
  o.require(r.gap.eq_pass, "equilibrium J = y0 +- 3SE");
  for (const auto& e : r.gap.entries) o.require(e.pass, "gap for " + e.delta_spec);
}

void two_atom(Outcome& o) {
  const GridSpec g(-6, 6, 301);
  const Coupling c = sinkhorn_solve(build_reference(parse_measure_spec("point:0", g), g),
                                    parse_measure_spec("twopoint:-1,1,0.5", g));
  const DriftField f(c);
  const std::size_t n = 100000;
  const auto ens = simulate_equilibrium(f, TimeGrid(2000), sim(n));
  std::size_t lo = 0, hi = 0;
  for (double x : ens.terminal()) {
    lo += std::abs(x + 1.0) <= 0.05;
    hi += std::abs(x - 1.0) <= 0.05;
  }
  const double plo = double(lo) / n, phi = double(hi) / n;
  const auto ent = entropy_consistency(ens, c, 0.05);
  o.detail << "mass(-1)=" << plo << " mass(+1)=" << phi << " H_grid=" << ent.h_grid << " H_mc=" << ent.h_mc
           << " rel=" << ent.rel_err;
  o.require(std::abs(plo - 0.5) <= 0.01 && std::abs(phi - 0.5) <= 0.01, "masses 0.5 +- 0.01");
  o.require(ent.pass, "entropy within 5%");
}

void hamiltonian_suite(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  const auto R = ControlSet::real_line();
  const std::vector<std::pair<CostSpec, ControlSet>> cases{
      {CostSpec::quadratic(), R},
      {CostSpec::power(4, 1), R},
      {CostSpec::power(3, 0.5), ControlSet::interval(-1, 2)},
      {CostSpec::table({-2, -1, 0, 1, 3}, {3, 0.8, 0, 0.6, 4}), R}};
  double worst_eq = 0.0, worst_ineq = 0.0, worst_rt = 0.0;
  for (const auto& [cost, U] : cases)
    for (int k = 0; k < 1000; ++k) {
      const double z = u(rng);
      double b = u(rng);
      if (cost.kind == CostSpec::Kind::table) b = cost.table_b[std::size_t(k) % cost.table_b.size()];
      if (U.kind == ControlSet::Kind::interval) b = std::clamp(b, U.lo, U.hi);
      const auto hv = hamiltonian_eval(cost, U, z, 0.0);
      worst_ineq = std::max(worst_ineq, b * z - (hv.H + cost.running(b)));
      worst_eq = std::max(worst_eq, std::abs(hv.H + cost.running(hv.b_hat) - hv.b_hat * z));
    }
  for (const auto& cost : {CostSpec::quadratic(), CostSpec::power(4, 1), CostSpec::power(1.5, 2)})
    for (int k = 0; k < 1000; ++k) {
      const double beta = u(rng);
      worst_rt = std::max(worst_rt, std::abs(argmax_selection(cost, R, invert_drift_to_z(cost, R, beta)) - beta));
    }
  double worst_h2 = 0.0;
  const GridSpec g(-8, 8, 1601);
  for (const char* m : {"point:0", "gaussian:0,1", "uniform:-1,2"}) {
    const auto mu = parse_measure_spec(m, g);
    const double cm = 1.0 + mu.second_moment();
    for (int k = 0; k < 1000; ++k) {
      const double gamma = std::abs(u(rng));
      worst_h2 = std::max(worst_h2, std::abs(hamiltonian2_eval(0.0, gamma, mu).H - gamma * gamma / (4 * cm)));
    }
  }
  o.detail << "FY equality=" << worst_eq << " FY violation=" << worst_ineq << " round trip=" << worst_rt
           << " H2=" << worst_h2;
  o.require(worst_eq <= 1e-9, "Fenchel-Young equality at 1e-9");
  o.require(worst_ineq <= 1e-9, "Fenchel-Young inequality at 1e-9");
  o.require(worst_rt <= 1e-6, "duality round trip at 1e-6");
  o.require(worst_h2 <= 1e-12, "hamiltonian2 closed form at 1e-12");
}

// T is the atomic quantile of the grid target, so the tails of T are a coarse
// staircase and sigma drifts from the continuum formulas by O(h^1.5) at |x|=1.5.
void bass(Outcome& o) {
  const GridSpec g(-6, 6, 2401);
  const auto mu0 = parse_measure_spec("gaussian:0,1", g);
  struct Case {
    const char* spec;
    std::function<double(double, double)> sigma;
  };
  const std::vector<Case> cases{
      {"gaussian:0.3,0.8", [](double, double) { return 0.8; }},
      {"uniform:0,1",
       [](double t, double x) { return oracle::phi(x / std::sqrt(2 - t)) / std::sqrt(2 - t); }},
      {"twopoint:-1,1,0.5",
       [](double t, double x) { return 2 * oracle::phi(x / std::sqrt(1 - t)) / std::sqrt(1 - t); }}};
  for (const auto& c : cases) {
    const auto mu1 = parse_measure_spec(c.spec, g);
    const BassModel m(mu1);
    double rel = 0.0;
    for (double t : {0.0, 0.25, 0.5})
      for (double x = -1.5; x <= 1.5 + 1e-12; x += 0.05) {
        const double want = c.sigma(t, x);
        rel = std::max(rel, std::abs(m.sigma(t, x) - want) / want);
      }
    const auto be = bass_simulate(m, mu0, TimeGrid(2000), sim(100000));
    const auto term = be.ens.terminal();
    double err = 0.0;
    for (std::size_t p = 0; p < term.size(); ++p) err = std::max(err, std::abs(term[p] - be.target[p]));
    const double w1 = wasserstein1(EmpiricalMeasure(term), mu1);
    o.detail << " " << c.spec << ": W1=" << w1 << " max|X1-T(B1)|=" << err << " sigma rel=" << rel;
    o.require(w1 < 0.01, std::string(c.spec) + " W1 < 0.01");
    o.require(err < 0.05, std::string(c.spec) + " per-path error < 0.05");
    o.require(rel < 1e-3, std::string(c.spec) + " sigma closed form");
  }
}

void fine_grid_oracle(Outcome& o) {
  const GridSpec g(-6, 6, 121);
  const std::size_t nf = 481;
  const auto c = sinkhorn_solve(build_reference(parse_measure_spec("gaussian:0,0.5", g), g),
                                parse_measure_spec("gaussian:0,1.2", g));
  const auto xf = oracle::linspace(-6, 6, nf);
  const auto a = oracle::density_weights(xf, [](double x) { return oracle::phi(x / 0.5); });
  const auto b = oracle::density_weights(xf, [](double x) { return oracle::phi(x / 1.2); });
  const auto pi = oracle::ipfp(xf, a, xf, b, 1.0, 1e-12, 100000);
  const auto xc = oracle::linspace(-6, 6, 121);
  const GridSpec fine(-6, 6, nf);
  double worst_row = 0.0, worst_col = 0.0;
  for (double v : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const std::size_t ic = g.nearest(v), jf = fine.nearest(v);
    std::vector<double> rc(121), rf(nf), cc(121), cf(nf);
    for (std::size_t j = 0; j < 121; ++j) {
      rc[j] = std::exp(c.log_pi(ic, j));
      cc[j] = std::exp(c.log_pi(j, ic));
    }
    for (std::size_t j = 0; j < nf; ++j) {
      rf[j] = pi[jf][j];
      cf[j] = pi[j][jf];
    }
    auto norm = [](std::vector<double>& w) {
      double s = 0.0;
      for (double x : w) s += x;
      for (double& x : w) x /= s;
    };
    norm(rc), norm(rf), norm(cc), norm(cf);
    worst_row = std::max(worst_row, oracle::w1_atoms(xc, rc, xf, rf));
    worst_col = std::max(worst_col, oracle::w1_atoms(xc, cc, xf, cf));
  }
  o.detail << "W1 given x0=" << worst_row << " W1 given x1=" << worst_col << " (3h=" << 3 * g.spacing() << ")";
  o.require(worst_row < 3 * g.spacing(), "conditional of x1 given x0");
  o.require(worst_col < 3 * g.spacing(), "conditional of x0 given x1");
}

void reproducibility(Outcome& o) {
  RunConfig cfg = gap_config();
  std::vector<std::string> reports;
  for (std::size_t w : {1u, 4u, 8u}) {
    set_worker_count(w);
    reports.push_back(report_json(full_report(cfg)));
  }
  set_worker_count(0);
  const bool same = reports[0] == reports[1] && reports[0] == reports[2];
  o.detail << "report bytes=" << reports[0].size() << (same ? " identical" : " differ");
  o.require(same, "bitwise-identical reports across 1/4/8 workers");
}

}  // namespace

int main() {
  criterion(1, "zero-drift fixed point", 30, zero_drift);
  criterion(2, "Gaussian translate", 60, translate);
  criterion(3, "optimality-gap identity", 120, gap_identity);
  criterion(4, "two-atom planning", 180, two_atom);
  criterion(5, "Hamiltonian suite", 60, hamiltonian_suite);
  criterion(6, "Bass construction", 120, bass);
  criterion(7, "Sinkhorn vs fine-grid IPFP", 60, fine_grid_oracle);
  criterion(8, "thread-count reproducibility", 600, reproducibility);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
