#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mfplan/measures.hpp"

namespace mfp {

/// Control domain U in one dimension.
struct ControlSet {
  enum class Kind { real_line, interval, finite_grid };

  Kind kind = Kind::real_line;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> points;  // finite_grid only, sorted

  static ControlSet real_line() { return {}; }
  static ControlSet interval(double lo, double hi);
  static ControlSet finite_grid(std::vector<double> points);

  /// "R" | "interval:lo,hi" | "grid:path.csv" (one column, header line).
  static ControlSet parse(std::string_view text);

  bool contains(double b, double tol = 1e-9) const;
};

/// f_t(m) = kappa * E_m[x^2]; kappa = 0 is the zero term.
struct MeanFieldTerm {
  double kappa = 0.0;

  double operator()(double second_moment) const { return kappa * second_moment; }

  /// "zero" | "second_moment:kappa"
  static MeanFieldTerm parse(std::string_view text);
};

/// Running cost c(b) + mean-field term. Table costs are +inf off the table.
struct CostSpec {
  enum class Kind { quadratic, power, table };

  Kind kind = Kind::quadratic;
  double p = 2.0;
  double lambda = 1.0;
  std::vector<double> table_b;  // sorted
  std::vector<double> table_c;
  MeanFieldTerm mf;

  static CostSpec quadratic() { return {}; }
  static CostSpec power(double p, double lambda);
  /// Rejects unsorted or non-convex tables.
  static CostSpec table(std::vector<double> b, std::vector<double> c);

  /// "quadratic" | "power:p,lambda" | "table:path.csv" (columns b,c, header line).
  static CostSpec parse(std::string_view text);

  /// c(b) without the mean-field term; +inf where undefined.
  double running(double b) const;
};

struct HamiltonianValue {
  double H;
  double b_hat;  // selected maximizer
};

/// H(z, m) = sup_{b in U} { b z - c(b) } - f(m), with the deterministic
/// selection rule: smallest |b|, then smallest b. Throws a divergence error
/// when the supremum is infinite.
HamiltonianValue hamiltonian_eval(const CostSpec& cost, const ControlSet& U, double z,
                                  double second_moment);
HamiltonianValue hamiltonian_eval(const CostSpec& cost, const ControlSet& U, double z,
                                  const GridMeasure& m);
HamiltonianValue hamiltonian_eval(const CostSpec& cost, const ControlSet& U, double z,
                                  const EmpiricalMeasure& m);

double argmax_selection(const CostSpec& cost, const ControlSet& U, double z);

/// Some Z with beta in the subgradient of H at Z. Throws full_range when
/// beta is not attainable.
double invert_drift_to_z(const CostSpec& cost, const ControlSet& U, double beta);

/// The second-order example cost c(b, a, m) = C_m a^2 / 4 on U = {0} x [0, inf),
/// C_m = E_m[1 + x^2]: H(z, gamma, m) = sup_{a >= 0} { a gamma / 2 - C_m a^2 / 4 }.
struct Hamiltonian2Value {
  double H;
  double a_hat;
};

Hamiltonian2Value hamiltonian2_eval(double z, double gamma, double c_m);
Hamiltonian2Value hamiltonian2_eval(double z, double gamma, const GridMeasure& m);
Hamiltonian2Value hamiltonian2_eval(double z, double gamma, const EmpiricalMeasure& m);

struct GrowthCheck {
  double C1 = 0.0;
  double C2 = 0.0;
  double exponent = 0.0;  // fitted growth exponent of |b_hat| in |z|
  bool ok = false;
};

/// Probe of |b_hat(z)| >= C1 |z| - C2 on the given samples.
GrowthCheck check_quadratic_growth(const CostSpec& cost, const ControlSet& U,
                                   const std::vector<double>& z_samples);

struct RangeCheck {
  bool full = false;
  double lo = 0.0;  // attainable range of b_hat over the probe
  double hi = 0.0;
};

RangeCheck check_full_range(const CostSpec& cost, const ControlSet& U);

}  // namespace mfp
