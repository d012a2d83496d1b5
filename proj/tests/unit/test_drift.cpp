#include <cmath>
#include <map>

#include "doctest.h"
#include "mfplan/drift.hpp"
#include "mfplan/error.hpp"
#include "mfplan/log.hpp"
#include "oracles.hpp"

using namespace mfp;

namespace {

Coupling solve(const char* mu0, const char* mu1, const GridSpec& g) {
  return sinkhorn_solve(build_reference(parse_measure_spec(mu0, g), g), parse_measure_spec(mu1, g));
}

}  // namespace

TEST_SUITE("drift") {
  TEST_CASE("zeta one gives zero drift") {
    // Wide enough that Brownian paths from |x| <= 3 stay on the grid.
    const GridSpec g(-10, 10, 501);
    const auto mu0 = parse_measure_spec("gaussian:0,0.7", g);
    const DriftField f(sinkhorn_solve(build_reference(mu0, g), heat_convolve(mu0, 1.0)));
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.9})
      for (double x = -3.0; x <= 3.0; x += 0.37) {
        CHECK(std::abs(f.log_m(t, 0.0, x)) < 1e-6);
        CHECK(std::abs(f.drift_eval(t, 0.0, x)) < 1e-6);
      }
  }

  TEST_CASE("translate case has unit drift") {
    // From x = 3 at t = 0 the conditional target is N(4, 1); the grid must hold it.
    const GridSpec g(-10, 10, 501);
    const DriftField f(solve("point:0", "gaussian:1,1", g));
    double worst = 0.0;
    for (double t = 0.0; t <= 0.99 + 1e-12; t += 0.01)
      for (double x = -3.0; x <= 3.0; x += 0.05) worst = std::max(worst, std::abs(f.evaluate(t, x).beta - 1.0));
    CHECK(worst < 1e-4);
    CHECK(std::abs(f.evaluate(0.5, 0.2).dbeta) < 1e-4);
    CHECK(f.target_mean(0.5, 0.0, 0.2) == doctest::Approx(0.2 + 0.5).epsilon(1e-6));
  }

  TEST_CASE("two-atom drift matches the bridge-mixture formula") {
    const GridSpec g(-4, 4, 201);
    const DriftField f(solve("point:0", "twopoint:-1,1,0.5", g));
    for (double t : {0.0, 0.3, 0.6, 0.9, 0.99, 0.999})
      for (double x = -2.0; x <= 2.0; x += 0.1) {
        const double expect = oracle::atom_mixture_drift({-1.0, 1.0}, {1.0, 1.0}, t, x);
        CHECK(f.drift_eval(t, 0.0, x) == doctest::Approx(expect).epsilon(1e-8).scale(1.0));
      }
    // Asymmetric weights: the atom factors zeta_y are read from the coupling
    // only through the known relation zeta_y proportional to p_y / phi(y).
    const DriftField fa(solve("point:0", "twopoint:-1,1,0.3", g));
    for (double t : {0.1, 0.5, 0.95})
      for (double x : {-1.5, -0.2, 0.4, 1.3}) {
        const double expect = oracle::atom_mixture_drift({-1.0, 1.0}, {0.3, 0.7}, t, x);
        CHECK(fa.evaluate(t, x).beta == doctest::Approx(expect).epsilon(1e-8).scale(1.0));
      }
  }

  TEST_CASE("derivative agrees with finite differences") {
    const GridSpec g(-6, 6, 301);
    const DriftField f(solve("gaussian:0,0.5", "mixture:(gaussian:-1.5,0.4;1)(gaussian:1.5,0.6;2)", g));
    for (double t : {0.0, 0.4, 0.8})
      for (double x : {-2.0, -0.5, 0.3, 1.7}) {
        const double e = 1e-5;
        const double fd = (f.evaluate(t, x + e).beta - f.evaluate(t, x - e).beta) / (2 * e);
        CHECK(f.evaluate(t, x).dbeta == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
  }

  TEST_CASE("terminal sampling follows the bridge transition") {
    const GridSpec g(-4, 4, 201);
    const DriftField f(solve("point:0", "twopoint:-1,1,0.5", g));
    const double x = 0.3, s2 = 0.5;
    const double p1 = oracle::phi(0.7 / std::sqrt(s2)) /
                      (oracle::phi(0.7 / std::sqrt(s2)) + oracle::phi(1.3 / std::sqrt(s2)));
    const int n = 20000;
    int ones = 0;
    for (int k = 0; k < n; ++k) ones += f.sample_terminal(s2, x, (k + 0.5) / n) > 0.0;
    CHECK(static_cast<double>(ones) / n == doctest::Approx(p1).epsilon(1e-3));
  }

  TEST_CASE("tabulated step drift") {
    const GridSpec g(-6, 6, 301);
    const DriftField f(solve("gaussian:0,0.5", "twopoint:-1.5,1.5,0.4", g));
    std::vector<double> pos;
    for (int k = 0; k < 200000; ++k) pos.push_back(-3.0 + 6.0 * k / 199999.0);
    for (double t : {0.0, 0.5, 0.95, 0.995}) {
      const StepDrift sd(f, t, pos);
      CHECK(sd.tabulated());
      double worst = 0.0;
      for (std::size_t k = 0; k < pos.size(); k += 97) {
        const double b = f.evaluate(t, pos[k]).beta;
        worst = std::max(worst, std::abs(sd(pos[k]) - b) / (1.0 + std::abs(b)));
      }
      CHECK(worst < 1e-5);
    }
    const std::vector<double> few{0.1, 0.2};
    const StepDrift direct(f, 0.3, few);
    CHECK_FALSE(direct.tabulated());
    CHECK(direct(0.1) == f.evaluate(0.3, 0.1).beta);
  }

  TEST_CASE("initial node validation") {
    const GridSpec g(-6, 6, 301);
    const DriftField f(solve("uniform:-1,1", "gaussian:0,1.5", g));
    CHECK(g.node(f.row_for(0.0)) == doctest::Approx(0.0));
    ScopedWarningCapture cap;
    f.row_for(3.0);
    CHECK(cap.contains("snapped"));
    CHECK_THROWS_AS(f.row_for(9.0), Error);
    CHECK_THROWS_AS(f.drift_eval(1.0, 0.0, 0.0), Error);
    CHECK(std::isfinite(f.evaluate(1.0, 0.0).beta));
  }
}
