#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mfplan/error.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/simulate.hpp"
#include "oracles.hpp"

using namespace mfp;

namespace {

struct Setup {
  GridSpec g{-6, 6, 301};
  Coupling c;
  DriftField field;
  Setup(const char* mu0, const char* mu1)
      : c(sinkhorn_solve(build_reference(parse_measure_spec(mu0, g), g), parse_measure_spec(mu1, g))),
        field(c) {}
};

SimulationOptions opts(std::size_t n, std::uint64_t seed = 5) {
  SimulationOptions o;
  o.n_paths = n;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("time grid and perturbation specs") {
    const TimeGrid tg(200);
    CHECK(tg.dt() == doctest::Approx(0.005));
    CHECK(tg.index_of(0.5) == 100);
    CHECK_THROWS_AS(tg.index_of(0.5001), Error);
    CHECK_THROWS_AS(TimeGrid(5), Error);
    CHECK(Perturbation::parse("sin:1")(0.25, 3.0) == doctest::Approx(1.0));
    CHECK(Perturbation::parse("state:0.1")(0.3, 2.0) == doctest::Approx(0.2));
    CHECK(Perturbation::parse("none")(0.3, 2.0) == 0.0);
    CHECK(Perturbation::parse(Perturbation::parse("const:0.2").spec()).value == 0.2);
    CHECK_THROWS_AS(Perturbation::parse("cos:1"), Error);
  }

  TEST_CASE("stratified initial points") {
    const GridSpec g(-6, 6, 301);
    const auto mu0 = parse_measure_spec("gaussian:0.5,1", g);
    auto x = stratified_initial_points(mu0, 1000, 3);
    CHECK(x != stratified_initial_points(mu0, 1000, 4));
    std::sort(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k] == atomic_quantile(mu0, (k + 0.5) / 1000.0));
  }

  TEST_CASE("zero drift reproduces the heat flow") {
    const GridSpec g(-6, 6, 301);
    const auto mu0 = parse_measure_spec("uniform:-1,1", g);
    const DriftField f(sinkhorn_solve(build_reference(mu0, g), heat_convolve(mu0, 1.0)));
    const std::size_t n = 100000;
    const auto ens = simulate_equilibrium(f, TimeGrid(200), opts(n));
    const double bound = 3 * std::max(g.spacing(), 1 / std::sqrt(double(n)));
    CHECK(wasserstein1(EmpiricalMeasure(ens.terminal()), heat_convolve(mu0, 1.0)) < bound);
    const auto flow = empirical_flow(ens, {0.0, 0.5});
    CHECK(wasserstein1(flow[1], heat_convolve(mu0, 0.5)) < 0.02);
    auto x0 = stratified_initial_points(mu0, n, 5);
    std::sort(x0.begin(), x0.end());
    CHECK(std::vector<double>(flow[0].samples().begin(), flow[0].samples().end()) == x0);
  }

  TEST_CASE("translate case terminal law") {
    Setup s("point:0", "gaussian:1,1");
    const std::size_t n = 100000;
    const auto ens = simulate_equilibrium(s.field, TimeGrid(200), opts(n));
    const EmpiricalMeasure t(ens.terminal());
    CHECK(std::abs(t.mean() - 1.0) < 3.0 / std::sqrt(double(n)));
    CHECK(ks_statistic(t, parse_measure_spec("gaussian:1,1", s.g)) < 0.01);
    CHECK(ens.flow.mean[100] == doctest::Approx(0.5).epsilon(0.02));
    CHECK(ens.failures() == 0);
  }

  TEST_CASE("two-atom terminal masses") {
    Setup s("point:0", "twopoint:-1,1,0.5");
    const std::size_t n = 40000;
    const auto ens = simulate_equilibrium(s.field, TimeGrid(400), opts(n));
    std::size_t lo = 0, hi = 0;
    for (double x : ens.terminal()) {
      lo += std::abs(x + 1) <= 0.05;
      hi += std::abs(x - 1) <= 0.05;
    }
    CHECK(double(lo) / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(double(hi) / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(lo + hi == n);
  }

  TEST_CASE("perturbations") {
    Setup s("gaussian:0,0.5", "gaussian:0.5,1.1");
    const TimeGrid tg(100);
    const auto eq = simulate_equilibrium(s.field, tg, opts(2000));
    const auto zero = simulate_perturbed(s.field, Perturbation::parse("const:0"), tg, opts(2000));
    CHECK(eq.terminal() == zero.terminal());
    CHECK(eq.acc.stoch_int == zero.acc.stoch_int);

    const auto c = simulate_perturbed(s.field, Perturbation::parse("const:0.2"), tg, opts(2000));
    for (double v : c.acc.delta_sq) CHECK(v == doctest::Approx(0.04).epsilon(1e-13));
    const auto sn = simulate_perturbed(s.field, Perturbation::parse("sin:1"), tg, opts(2000));
    for (std::size_t p = 0; p < 50; ++p) CHECK(sn.acc.delta_sq[p] == doctest::Approx(0.5).epsilon(1e-10));
  }

  TEST_CASE("reference paths carry a unit Girsanov density") {
    Setup s("point:0", "gaussian:1,1");
    const auto ref = simulate_reference(s.field, TimeGrid(200), opts(50000));
    std::vector<double> dens;
    for (std::size_t p = 0; p < ref.n_paths; ++p)
      dens.push_back(std::exp(ref.acc.stoch_int[p] - ref.acc.drift_energy[p]));
    const auto m = mean_with_error(dens);
    CHECK(std::abs(m.mean - 1.0) < 4 * m.se);
    const EmpiricalMeasure t(ref.terminal());
    CHECK(std::abs(t.mean()) < 4 / std::sqrt(50000.0));
  }

  TEST_CASE("results do not depend on the worker count") {
    Setup s("gaussian:0,0.5", "twopoint:-1,1,0.5");
    SimulationOptions o = opts(5000);
    o.store_paths = true;
    set_worker_count(1);
    const auto a = simulate_equilibrium(s.field, TimeGrid(50), o);
    set_worker_count(4);
    const auto b = simulate_equilibrium(s.field, TimeGrid(50), o);
    set_worker_count(0);
    CHECK(std::equal(a.paths.data().begin(), a.paths.data().end(), b.paths.data().begin()));
    CHECK(a.flow.second_moment == b.flow.second_moment);
  }

  TEST_CASE("path storage policy") {
    Setup s("point:0", "gaussian:1,1");
    SimulationOptions o = opts(1000);
    o.full_path_budget = 10;
    o.record_steps = {7};
    const auto e = simulate_equilibrium(s.field, TimeGrid(20), o);
    CHECK_FALSE(e.has_full_paths());
    CHECK(e.cross_section(7).size() == 1000);
    CHECK_THROWS_AS(e.cross_section(9), Error);
    o.store_paths = true;
    const auto f = simulate_equilibrium(s.field, TimeGrid(20), o);
    CHECK(f.has_full_paths());
    CHECK(f.cross_section(9).size() == 1000);
  }
}
