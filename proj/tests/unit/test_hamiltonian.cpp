#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mfplan/error.hpp"
#include "mfplan/hamiltonian.hpp"
#include "oracles.hpp"

using namespace mfp;

TEST_SUITE("hamiltonian") {
  TEST_CASE("parsing") {
    CHECK(ControlSet::parse("R").kind == ControlSet::Kind::real_line);
    const auto iv = ControlSet::parse("interval:-1,2");
    CHECK(iv.lo == -1.0);
    CHECK(iv.hi == 2.0);
    CHECK(iv.contains(2.0));
    CHECK_FALSE(iv.contains(2.1));
    CHECK(CostSpec::parse("power:4,1").p == 4.0);
    CHECK(MeanFieldTerm::parse("second_moment:0.5")(2.0) == 1.0);
    CHECK_THROWS_AS(CostSpec::parse("cubic"), Error);
    CHECK_THROWS_AS(CostSpec::table({-1, 0, 1}, {0, 1, 0}), Error);  // not convex
    CHECK_THROWS_AS(ControlSet::parse("interval:2,1"), Error);
    CHECK_THROWS_AS(MeanFieldTerm::parse("cubic:1"), Error);
  }

  TEST_CASE("closed-form values") {
    const auto R = ControlSet::real_line();
    auto v = hamiltonian_eval(CostSpec::quadratic(), R, 2.0, 0.0);
    CHECK(v.H == doctest::Approx(2.0));
    CHECK(v.b_hat == doctest::Approx(2.0));

    const auto zero = CostSpec::power(2.0, 0.0);
    v = hamiltonian_eval(zero, ControlSet::interval(-1, 1), -3.0, 0.0);
    CHECK(v.H == doctest::Approx(3.0));
    CHECK(v.b_hat == -1.0);
    CHECK(argmax_selection(zero, ControlSet::interval(-1, 1), 0.0) == 0.0);
    CHECK_THROWS_AS(hamiltonian_eval(zero, R, 1.0, 0.0), Error);

    const auto table = CostSpec::table({-1, 0, 1}, {1, 0, 1});
    v = hamiltonian_eval(table, R, 0.5, 0.0);
    double brute = -1e300;
    for (double b : {-1.0, 0.0, 1.0}) brute = std::max(brute, b * 0.5 - std::abs(b));
    CHECK(v.H == brute);
    CHECK(v.b_hat == 0.0);

    CHECK(argmax_selection(CostSpec::quadratic(), R, 0.37) == doctest::Approx(0.37));
    const auto p4 = CostSpec::power(4, 1);
    const double root = oracle::bisect([](double b) { return b * b * b - 8.0; }, 0.0, 10.0);
    CHECK(argmax_selection(p4, R, 8.0) == doctest::Approx(root).epsilon(1e-12));
    CHECK(invert_drift_to_z(CostSpec::quadratic(), R, 1.7) == doctest::Approx(1.7));
    CHECK(invert_drift_to_z(p4, R, 2.0) == doctest::Approx(8.0));

    CostSpec mf = CostSpec::quadratic();
    mf.mf = MeanFieldTerm{0.5};
    CHECK(hamiltonian_eval(mf, R, 2.0, parse_measure_spec("gaussian:0,1", GridSpec(-8, 8, 801))).H ==
          doctest::Approx(2.0 - 0.5).epsilon(1e-6));
  }

  TEST_CASE("tie-break prefers small controls") {
    const auto tab = CostSpec::table({-1, 0, 1}, {1, 0, 1});
    // At z = 1 both b = 0 and b = 1 give value 0.
    CHECK(argmax_selection(tab, ControlSet::real_line(), 1.0) == 0.0);
    const auto grid = ControlSet::finite_grid({-2, -1, 1, 2});
    // Zero cost: b = -1 and b = 1 tie at z = 0; the smaller b wins.
    CHECK(argmax_selection(CostSpec::power(2, 0), grid, 0.0) == -1.0);
  }

  TEST_CASE("Fenchel-Young on random pairs") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> zdist(-5, 5), bdist(-5, 5);
    const auto R = ControlSet::real_line();
    const std::vector<std::pair<CostSpec, ControlSet>> cases{
        {CostSpec::quadratic(), R},
        {CostSpec::power(4, 1), R},
        {CostSpec::power(3, 2), R},
        {CostSpec::quadratic(), ControlSet::interval(-1, 2)},
        {CostSpec::table({-2, -1, 0, 1, 3}, {3, 0.8, 0, 0.6, 4}), R}};
    for (const auto& [cost, U] : cases) {
      for (int k = 0; k < 1000; ++k) {
        const double z = zdist(rng);
        double b = bdist(rng);
        if (cost.kind == CostSpec::Kind::table) b = cost.table_b[k % cost.table_b.size()];
        if (U.kind == ControlSet::Kind::interval) b = std::clamp(b, U.lo, U.hi);
        const auto h = hamiltonian_eval(cost, U, z, 0.0);
        CHECK(h.H + cost.running(b) >= b * z - 1e-9);
        CHECK(h.H + cost.running(h.b_hat) == doctest::Approx(h.b_hat * z).epsilon(1e-9).scale(1.0));
      }
    }
  }

  TEST_CASE("drift to Z round trip") {
    const auto R = ControlSet::real_line();
    for (const auto& cost : {CostSpec::quadratic(), CostSpec::power(4, 1), CostSpec::power(1.5, 0.7)})
      for (double beta = -3.0; beta <= 3.0; beta += 0.25) {
        const double z = invert_drift_to_z(cost, R, beta);
        CHECK(argmax_selection(cost, R, z) == doctest::Approx(beta).epsilon(1e-6).scale(1.0));
      }
    const auto tab = CostSpec::table({-2, -1, 0, 1, 3}, {3, 0.8, 0, 0.6, 4});
    for (double beta : {-2.0, -1.0, 0.0, 1.0, 3.0})
      CHECK(argmax_selection(tab, R, invert_drift_to_z(tab, R, beta)) == beta);
    try {
      invert_drift_to_z(tab, R, 0.5);
      FAIL("expected full_range");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::full_range);
    }
    CHECK_THROWS_AS(invert_drift_to_z(CostSpec::quadratic(), ControlSet::interval(-1, 1), 1.5), Error);
  }

  TEST_CASE("second-order example cost") {
    CHECK(hamiltonian2_eval(0.0, 2.0, 1.0).H == 1.0);
    CHECK(hamiltonian2_eval(0.0, 2.0, 1.0).a_hat == 2.0);
    const auto gauss = parse_measure_spec("gaussian:0,1", GridSpec(-8, 8, 1601));
    const auto v = hamiltonian2_eval(0.0, 4.0, gauss);
    CHECK(v.H == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(v.a_hat == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(hamiltonian2_eval(1.0, 0.0, 1.0).H == 0.0);
    CHECK(hamiltonian2_eval(1.0, -1.0, 3.0).a_hat == 0.0);
    for (double cm : {1.0, 1.5, 4.0})
      for (double g : {0.5, 1.0, 3.0}) {
        const double brute = oracle::sweep_max([&](double a) { return a * g / 2 - cm * a * a / 4; }, 0.0, 10.0);
        CHECK(hamiltonian2_eval(0.0, g, cm).H == doctest::Approx(brute).epsilon(1e-9));
        CHECK(std::abs(hamiltonian2_eval(0.0, g, cm).H - g * g / (4 * cm)) <= 1e-12);
      }
    CHECK_THROWS_AS(hamiltonian2_eval(0.0, 1.0, 0.5), Error);
  }

  TEST_CASE("growth and range probes") {
    std::vector<double> zs;
    for (int k = 1; k <= 64; ++k) zs.push_back(0.5 * k * (k % 2 ? 1 : -1));
    const auto R = ControlSet::real_line();
    const auto q = check_quadratic_growth(CostSpec::quadratic(), R, zs);
    CHECK(q.ok);
    CHECK(q.C1 == doctest::Approx(1.0));
    CHECK(q.C2 == doctest::Approx(0.0));
    CHECK_FALSE(check_quadratic_growth(CostSpec::quadratic(), ControlSet::interval(-1, 1), zs).ok);
    const auto p4 = check_quadratic_growth(CostSpec::power(4, 1), R, zs);
    CHECK_FALSE(p4.ok);
    CHECK(p4.exponent == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    CHECK(check_full_range(CostSpec::quadratic(), R).full);
    const auto iv = check_full_range(CostSpec::quadratic(), ControlSet::interval(-1, 1));
    CHECK_FALSE(iv.full);
    CHECK(iv.lo == -1.0);
    CHECK(iv.hi == 1.0);
    CHECK(check_full_range(CostSpec::power(4, 1), R).full);
  }
}
