#include "mfplan/hamiltonian.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "mfplan/error.hpp"

namespace mfp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double to_number(std::string_view s, std::string_view what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::parse, "bad number '" + std::string(s) + "' in " + std::string(what));
  return v;
}

std::pair<double, double> two_numbers(std::string_view s, std::string_view what) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos)
    throw Error(ErrorCode::parse, "expected two comma-separated numbers in " + std::string(what));
  return {to_number(s.substr(0, comma), what), to_number(s.substr(comma + 1), what)};
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t cols) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> out(cols);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto comma = rest.find(',');
      if (c + 1 < cols && comma == std::string_view::npos)
        throw Error(ErrorCode::parse, path + ": expected " + std::to_string(cols) + " columns");
      out[c].push_back(to_number(rest.substr(0, comma), path));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  if (out[0].empty()) throw Error(ErrorCode::parse, path + " has no rows");
  return out;
}

bool better(double value, double b, double best_value, double best_b) {
  const double tol = 1e-12 * (1.0 + std::abs(best_value));
  if (value > best_value + tol) return true;
  if (value < best_value - tol) return false;
  if (std::abs(b) != std::abs(best_b)) return std::abs(b) < std::abs(best_b);
  return b < best_b;
}

struct Point {
  double b;
  double c;
};

// Feasible (b, c(b)) pairs when the problem is discrete; nullopt otherwise.
std::optional<std::vector<Point>> discrete_points(const CostSpec& cost, const ControlSet& U) {
  std::vector<Point> pts;
  if (cost.kind == CostSpec::Kind::table) {
    for (std::size_t k = 0; k < cost.table_b.size(); ++k)
      if (U.contains(cost.table_b[k], 1e-12)) pts.push_back({cost.table_b[k], cost.table_c[k]});
  } else if (U.kind == ControlSet::Kind::finite_grid) {
    for (double b : U.points) pts.push_back({b, cost.running(b)});
  } else {
    return std::nullopt;
  }
  if (pts.empty())
    throw Error(ErrorCode::invalid_argument, "cost table and control set have no common point");
  return pts;
}

// Unconstrained maximizer of b z - lambda |b|^p / p.
double power_maximizer(const CostSpec& cost, double z) {
  if (z == 0.0) return 0.0;
  const double mag = std::pow(std::abs(z) / cost.lambda, 1.0 / (cost.p - 1.0));
  return z > 0.0 ? mag : -mag;
}

double power_slope(const CostSpec& cost, double b) {
  const double mag = cost.lambda * std::pow(std::abs(b), cost.p - 1.0);
  return b >= 0.0 ? mag : -mag;
}

HamiltonianValue sup_over_u(const CostSpec& cost, const ControlSet& U, double z) {
  if (auto pts = discrete_points(cost, U)) {
    HamiltonianValue best{-kInf, 0.0};
    for (const auto& pt : *pts) {
      const double v = pt.b * z - pt.c;
      if (best.H == -kInf || better(v, pt.b, best.H, best.b_hat)) best = {v, pt.b};
    }
    return best;
  }
  // quadratic or power on R / interval
  if (cost.lambda == 0.0) {
    if (U.kind == ControlSet::Kind::real_line) {
      if (z != 0.0)
        throw Error(ErrorCode::divergence,
                    "Hamiltonian diverges: zero cost on an unbounded control set");
      return {0.0, 0.0};
    }
    if (z > 0.0) return {U.hi * z, U.hi};
    if (z < 0.0) return {U.lo * z, U.lo};
    return {0.0, std::clamp(0.0, U.lo, U.hi)};
  }
  double b = power_maximizer(cost, z);
  if (U.kind == ControlSet::Kind::interval) b = std::clamp(b, U.lo, U.hi);
  return {b * z - cost.running(b), b};
}

}  // namespace

ControlSet ControlSet::interval(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::invalid_argument, "control interval requires finite lo < hi");
  ControlSet u;
  u.kind = Kind::interval;
  u.lo = lo;
  u.hi = hi;
  return u;
}

ControlSet ControlSet::finite_grid(std::vector<double> points) {
  if (points.empty()) throw Error(ErrorCode::invalid_argument, "control grid is empty");
  if (!std::is_sorted(points.begin(), points.end()))
    throw Error(ErrorCode::invalid_argument, "control grid must be sorted");
  ControlSet u;
  u.kind = Kind::finite_grid;
  u.lo = points.front();
  u.hi = points.back();
  u.points = std::move(points);
  return u;
}

ControlSet ControlSet::parse(std::string_view text) {
  if (text == "R") return real_line();
  if (text.starts_with("interval:")) {
    const auto [lo, hi] = two_numbers(text.substr(9), text);
    return interval(lo, hi);
  }
  if (text.starts_with("grid:"))
    return finite_grid(read_numeric_csv(std::string(text.substr(5)), 1)[0]);
  throw Error(ErrorCode::parse, "unknown control set '" + std::string(text) + "'");
}

bool ControlSet::contains(double b, double tol) const {
  switch (kind) {
    case Kind::real_line:
      return std::isfinite(b);
    case Kind::interval:
      return b >= lo - tol && b <= hi + tol;
    case Kind::finite_grid:
      return std::any_of(points.begin(), points.end(),
                         [&](double p) { return std::abs(p - b) <= tol; });
  }
  return false;
}

MeanFieldTerm MeanFieldTerm::parse(std::string_view text) {
  if (text == "zero") return {};
  if (text.starts_with("second_moment:")) return {to_number(text.substr(14), text)};
  throw Error(ErrorCode::parse, "unknown mean-field term '" + std::string(text) + "'");
}

CostSpec CostSpec::power(double p, double lambda) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw Error(ErrorCode::invalid_argument, "power cost needs p > 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::invalid_argument, "power cost needs lambda >= 0");
  CostSpec c;
  c.kind = Kind::power;
  c.p = p;
  c.lambda = lambda;
  return c;
}

CostSpec CostSpec::table(std::vector<double> b, std::vector<double> c) {
  if (b.empty() || b.size() != c.size())
    throw Error(ErrorCode::invalid_argument, "cost table needs matching non-empty columns");
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (!std::isfinite(b[k]) || !std::isfinite(c[k]))
      throw Error(ErrorCode::invalid_argument, "cost table values must be finite");
    if (k > 0 && !(b[k] > b[k - 1]))
      throw Error(ErrorCode::invalid_argument, "cost table must be strictly sorted in b");
  }
  for (std::size_t k = 1; k + 1 < b.size(); ++k) {
    const double left = (c[k] - c[k - 1]) / (b[k] - b[k - 1]);
    const double right = (c[k + 1] - c[k]) / (b[k + 1] - b[k]);
    if (right < left - 1e-12 * (1.0 + std::abs(left)))
      throw Error(ErrorCode::invalid_argument, "cost table is not convex");
  }
  CostSpec s;
  s.kind = Kind::table;
  s.table_b = std::move(b);
  s.table_c = std::move(c);
  return s;
}

CostSpec CostSpec::parse(std::string_view text) {
  if (text == "quadratic") return quadratic();
  if (text.starts_with("power:")) {
    const auto [p, lambda] = two_numbers(text.substr(6), text);
    return power(p, lambda);
  }
  if (text.starts_with("table:")) {
    auto cols = read_numeric_csv(std::string(text.substr(6)), 2);
    return table(std::move(cols[0]), std::move(cols[1]));
  }
  throw Error(ErrorCode::parse, "unknown cost '" + std::string(text) + "'");
}

double CostSpec::running(double b) const {
  switch (kind) {
    case Kind::quadratic:
      return 0.5 * b * b;
    case Kind::power:
      return lambda == 0.0 ? 0.0 : lambda * std::pow(std::abs(b), p) / p;
    case Kind::table: {
      const auto it = std::lower_bound(table_b.begin(), table_b.end(), b - 1e-12);
      if (it != table_b.end() && std::abs(*it - b) <= 1e-12)
        return table_c[static_cast<std::size_t>(it - table_b.begin())];
      return kInf;
    }
  }
  return kInf;
}

HamiltonianValue hamiltonian_eval(const CostSpec& cost, const ControlSet& U, double z,
                                  double second_moment) {
  if (!std::isfinite(z)) throw Error(ErrorCode::non_finite, "Hamiltonian evaluated at non-finite z");
  auto v = sup_over_u(cost, U, z);
  v.H -= cost.mf(second_moment);
  return v;
}

HamiltonianValue hamiltonian_eval(const CostSpec& cost, const ControlSet& U, double z,
                                  const GridMeasure& m) {
  return hamiltonian_eval(cost, U, z, m.second_moment());
}

HamiltonianValue hamiltonian_eval(const CostSpec& cost, const ControlSet& U, double z,
                                  const EmpiricalMeasure& m) {
  return hamiltonian_eval(cost, U, z, m.second_moment());
}

double argmax_selection(const CostSpec& cost, const ControlSet& U, double z) {
  return sup_over_u(cost, U, z).b_hat;
}

double invert_drift_to_z(const CostSpec& cost, const ControlSet& U, double beta) {
  auto out_of_range = [&] {
    return Error(ErrorCode::full_range,
                 "drift value " + std::to_string(beta) +
                     " is not attainable: the full range condition fails for this cost and control set");
  };
  if (!std::isfinite(beta)) throw Error(ErrorCode::non_finite, "non-finite drift value");

  if (auto pts = discrete_points(cost, U)) {
    const auto& p = *pts;
    std::size_t k = 0;
    while (k < p.size() && std::abs(p[k].b - beta) > 1e-9) ++k;
    if (k == p.size()) throw out_of_range();
    if (p.size() == 1) return 0.0;
    const double left = k > 0 ? (p[k].c - p[k - 1].c) / (p[k].b - p[k - 1].b) : -kInf;
    const double right = k + 1 < p.size() ? (p[k + 1].c - p[k].c) / (p[k + 1].b - p[k].b) : kInf;
    // A point strictly inside the subdifferential selects b_k uniquely.
    if (!(right > left)) throw out_of_range();
    if (left == -kInf) return right - 1.0;
    if (right == kInf) return left + 1.0;
    return 0.5 * (left + right);
  }
  if (!U.contains(beta, 0.0)) throw out_of_range();
  if (cost.kind == CostSpec::Kind::quadratic) return beta;
  return power_slope(cost, beta);
}

Hamiltonian2Value hamiltonian2_eval(double /*z*/, double gamma, double c_m) {
  if (!(c_m >= 1.0)) throw Error(ErrorCode::invalid_argument, "C_m must be >= 1");
  if (!(gamma > 0.0)) return {0.0, 0.0};
  return {gamma * gamma / (4.0 * c_m), gamma / c_m};
}

Hamiltonian2Value hamiltonian2_eval(double z, double gamma, const GridMeasure& m) {
  return hamiltonian2_eval(z, gamma, 1.0 + m.second_moment());
}

Hamiltonian2Value hamiltonian2_eval(double z, double gamma, const EmpiricalMeasure& m) {
  return hamiltonian2_eval(z, gamma, 1.0 + m.second_moment());
}

GrowthCheck check_quadratic_growth(const CostSpec& cost, const ControlSet& U,
                                   const std::vector<double>& z_samples) {
  GrowthCheck out;
  std::vector<std::pair<double, double>> pts;  // (|z|, |b_hat|)
  try {
    for (double z : z_samples) pts.emplace_back(std::abs(z), std::abs(argmax_selection(cost, U, z)));
  } catch (const Error&) {
    return out;
  }
  if (pts.size() < 2) return out;
  std::sort(pts.begin(), pts.end());
  const auto& top = pts.back();
  const auto& mid = pts[pts.size() / 2];
  if (top.first > mid.first && mid.first > 0.0 && mid.second > 0.0 && top.second > 0.0)
    out.exponent = std::log(top.second / mid.second) / std::log(top.first / mid.first);
  double c1 = kInf;
  for (std::size_t k = pts.size() / 2; k < pts.size(); ++k)
    if (pts[k].first > 0.0) c1 = std::min(c1, pts[k].second / pts[k].first);
  if (!std::isfinite(c1)) return out;
  double c2 = 0.0;
  for (const auto& [az, ab] : pts) c2 = std::max(c2, c1 * az - ab);
  out.C1 = c1;
  out.C2 = c2;
  out.ok = out.exponent >= 0.99 && c1 >= 1e-6;
  return out;
}

RangeCheck check_full_range(const CostSpec& cost, const ControlSet& U) {
  RangeCheck out;
  if (auto pts = discrete_points(cost, U)) {
    out.lo = pts->front().b;
    out.hi = pts->back().b;
    return out;
  }
  if (U.kind == ControlSet::Kind::interval) {
    out.lo = U.lo;
    out.hi = U.hi;
    return out;
  }
  if (cost.lambda == 0.0) return out;  // sup diverges away from z = 0
  const double b_small_hi = argmax_selection(cost, U, 1e3);
  const double b_small_lo = argmax_selection(cost, U, -1e3);
  out.hi = argmax_selection(cost, U, 1e6);
  out.lo = argmax_selection(cost, U, -1e6);
  out.full = out.hi > b_small_hi && out.lo < b_small_lo;
  return out;
}

}  // namespace mfp
