#include <cmath>

#include "doctest.h"
#include "mfplan/error.hpp"
#include "mfplan/log.hpp"
#include "mfplan/schrodinger.hpp"
#include "oracles.hpp"

using namespace mfp;

namespace {

GridMeasure second_marginal(const ReferenceCoupling& ref) {
  std::vector<double> w(ref.x1_grid.size(), 0.0);
  for (std::size_t i = 0; i < ref.mu0.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j)
      if (ref.mu0.weight(i) > 0.0) w[j] += std::exp(ref.log_rho(i, j));
  return GridMeasure::normalized(ref.x1_grid, w);
}

}  // namespace

TEST_SUITE("schrodinger") {
  TEST_CASE("reference marginals") {
    const GridSpec g(-6, 6, 301);
    const double h = g.spacing();
    const auto ref = build_reference(parse_measure_spec("point:0", g), g);
    CHECK(wasserstein1(second_marginal(ref), parse_measure_spec("gaussian:0,1", g)) < h);

    const auto ref2 = build_reference(parse_measure_spec("gaussian:0,1", g), g);
    const auto m = second_marginal(ref2);
    const double w = oracle::l1_cdf_distance([&](double x) { return m.cdf(x); },
                                             [](double x) { return oracle::Phi(x / std::sqrt(2.0)); },
                                             -6.1, 6.1);
    CHECK(w < 2 * h);
  }

  TEST_CASE("reference coverage errors") {
    const GridSpec g(-2, 2, 81);
    CHECK_THROWS_AS(build_reference(parse_measure_spec("point:0", g), g), Error);
    ScopedWarningCapture cap;
    const GridSpec g4(-4.5, 4.5, 181);
    build_reference(parse_measure_spec("point:0", g4), g4);
    CHECK(cap.contains("loses"));
  }

  TEST_CASE("target equal to the reference marginal gives pi = rho") {
    const GridSpec g(-6, 6, 301);
    const auto mu0 = parse_measure_spec("mixture:(gaussian:-1,0.5;1)(uniform:0,2;1)", g);
    const auto ref = build_reference(mu0, g);
    const auto c = sinkhorn_solve(ref, heat_convolve(mu0, 1.0));
    CHECK(coupling_entropy(c) < 1e-8);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (mu0.weight(i) > 0.0)
        for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(c.log_zeta(i, j)));
    CHECK(worst < 1e-6);
    const auto d = integrability_diagnostics(c);
    CHECK(d.e_abs_log < 1e-6);
    CHECK(d.e_sq == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("point to translated gaussian") {
    const GridSpec g(-6, 6, 301);
    const auto ref = build_reference(parse_measure_spec("point:0", g), g);
    const auto c = sinkhorn_solve(ref, parse_measure_spec("gaussian:1,1", g));
    const std::size_t i0 = g.nearest(0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double y = g.node(j);
      if (std::abs(y) <= 4.0) CHECK(c.log_zeta(i0, j) == doctest::Approx(y - 0.5).epsilon(1e-6));
    }
    CHECK(coupling_entropy(c) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(integrability_diagnostics(c).e_sq == doctest::Approx(std::exp(1.0)).epsilon(1e-2));
  }

  TEST_CASE("agrees with a fine-grid multiplicative IPFP") {
    const GridSpec g(-6, 6, 61);
    const GridSpec fine(-6, 6, 241);
    const auto mu0 = parse_measure_spec("gaussian:0,0.5", g);
    const auto mu1 = parse_measure_spec("gaussian:0,1.2", g);
    const auto c = sinkhorn_solve(build_reference(mu0, g), mu1);

    const auto xf = oracle::linspace(-6, 6, 241);
    const auto a = oracle::density_weights(xf, [](double x) { return oracle::phi(x / 0.5); });
    const auto b = oracle::density_weights(xf, [](double x) { return oracle::phi(x / 1.2); });
    const auto pi = oracle::ipfp(xf, a, xf, b, 1.0, 1e-12, 20000);

    const auto xc = oracle::linspace(-6, 6, 61);
    for (double x0 : {-1.0, -0.4, 0.0, 0.6, 1.0}) {
      const std::size_t ic = g.nearest(x0), jf = fine.nearest(x0);
      std::vector<double> wc(61), wf(241);
      double sc = 0.0, sf = 0.0;
      for (std::size_t j = 0; j < 61; ++j) sc += (wc[j] = std::exp(c.log_pi(ic, j)));
      for (std::size_t j = 0; j < 241; ++j) sf += (wf[j] = pi[jf][j]);
      for (double& v : wc) v /= sc;
      for (double& v : wf) v /= sf;
      CHECK(oracle::w1_atoms(xc, wc, xf, wf) < 3 * g.spacing());
    }
  }

  TEST_CASE("solver errors") {
    const GridSpec g(-6, 6, 121);
    const auto ref = build_reference(parse_measure_spec("point:0", g), g);
    SinkhornOptions o;
    o.max_iter = 1;
    o.tol = 1e-15;
    const auto mu0 = parse_measure_spec("gaussian:0,1", g);
    const auto ref2 = build_reference(mu0, g);
    try {
      sinkhorn_solve(ref2, parse_measure_spec("gaussian:1,0.3", g), o);
      FAIL("expected a convergence error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::convergence);
    }
    CHECK_THROWS_AS(sinkhorn_solve(ref, parse_measure_spec("gaussian:0,1", GridSpec(-6, 6, 101))),
                    Error);
    // A point target far in the reference tail pushes log zeta past the bound.
    const GridSpec wide(-40, 40, 801);
    try {
      sinkhorn_solve(build_reference(parse_measure_spec("point:0", wide), wide),
                     parse_measure_spec("point:38", wide));
      FAIL("expected a divergence error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::divergence);
    }
  }

  TEST_CASE("refinement growth warning") {
    ScopedWarningCapture cap;
    CHECK_FALSE(warn_on_refinement_growth({1.0, 2.0}, {1.5, 3.0}));
    CHECK(warn_on_refinement_growth({1.0, 2.0}, {20.0, 3.0}));
    CHECK(cap.contains("refinement"));
  }
}
