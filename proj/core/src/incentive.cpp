#include "mfplan/incentive.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "mfplan/error.hpp"

namespace mfp {

namespace {

void check_flow(const PathEnsemble& ens, const FlowMoments& flow) {
  if (flow.second_moment.size() != ens.time.steps() + 1)
    throw Error(ErrorCode::grid_mismatch, "flow and ensemble use different time grids");
}

IncentiveValues sized(std::size_t n) {
  return {std::vector<double>(n), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
          std::vector<double>(n, 0.0), std::vector<double>(n)};
}

void require_paths(const PathEnsemble& ens, const char* what) {
  if (!ens.has_full_paths())
    throw Error(ErrorCode::invalid_argument,
                std::string(what) + " needs stored paths; rerun the simulation with paths kept");
}

double parse_value(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::parse, "bad number in '" + std::string(what) + "'");
  return v;
}

void finish_xi(IncentiveValues& v, const PathEnsemble& ens, const Y0Spec& y0) {
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    v.y0[p] = y0(ens.x0[p]);
    v.xi[p] = v.y0[p] + (v.stoch_int[p] - v.quad_term[p] + v.mf_term[p]);
  }
}

}  // namespace

double Y0Spec::operator()(double x0) const {
  if (table_x.empty()) return constant;
  if (x0 <= table_x.front()) return constant + table_y.front();
  if (x0 >= table_x.back()) return constant + table_y.back();
  const auto it = std::upper_bound(table_x.begin(), table_x.end(), x0);
  const std::size_t k = static_cast<std::size_t>(it - table_x.begin());
  const double s = (x0 - table_x[k - 1]) / (table_x[k] - table_x[k - 1]);
  return constant + table_y[k - 1] + s * (table_y[k] - table_y[k - 1]);
}

Y0Spec Y0Spec::from_csv(const std::string& path, double constant) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open y0 table " + path);
  std::string line;
  std::getline(in, line);
  Y0Spec s;
  s.constant = constant;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::parse, path + ": expected x,y0");
    const std::string_view sv(line);
    const double x = parse_value(sv.substr(0, comma), path);
    if (!s.table_x.empty() && !(x > s.table_x.back()))
      throw Error(ErrorCode::parse, path + ": x must be strictly increasing");
    s.table_x.push_back(x);
    s.table_y.push_back(parse_value(sv.substr(comma + 1), path));
  }
  if (s.table_x.empty()) throw Error(ErrorCode::parse, path + " has no rows");
  return s;
}

IncentiveValues incentive_lq(const PathEnsemble& ens, const DriftField& field,
                             const CostSpec& cost, const FlowMoments& flow, const Y0Spec& y0,
                             LqRoute route) {
  if (cost.kind != CostSpec::Kind::quadratic)
    throw Error(ErrorCode::invalid_argument, "the LQ incentive needs the quadratic cost");
  check_flow(ens, flow);
  const std::size_t np = ens.n_paths;
  const std::size_t ns = ens.time.steps();
  const double dt = ens.time.dt();
  if (route == LqRoute::automatic)
    route = ens.has_full_paths() ? LqRoute::paths : LqRoute::accumulators;

  IncentiveValues v = sized(np);
  double mf = 0.0;
  for (std::size_t k = 0; k < ns; ++k) mf += cost.mf(flow.second_moment[k]) * dt;
  std::fill(v.mf_term.begin(), v.mf_term.end(), mf);

  if (route == LqRoute::accumulators) {
    v.stoch_int = ens.acc.stoch_int;
    v.quad_term = ens.acc.drift_energy;
  } else {
    require_paths(ens, "path recomputation of the LQ incentive");
    std::vector<double> x(np);
    for (std::size_t k = 0; k < ns; ++k) {
      for (std::size_t p = 0; p < np; ++p) x[p] = ens.paths(p, k);
      const StepDrift drift(field, ens.time.t(k), x);
      parallel_for(np, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
          if (ens.failed[p]) continue;
          const double beta = drift(x[p]);
          v.stoch_int[p] += beta * (ens.paths(p, k + 1) - x[p]);
          v.quad_term[p] += 0.5 * beta * beta * dt;
        }
      });
    }
  }
  finish_xi(v, ens, y0);
  return v;
}

IncentiveValues incentive_drift(const PathEnsemble& ens, const DriftField& field,
                                const CostSpec& cost, const ControlSet& U,
                                const FlowMoments& flow, const Y0Spec& y0) {
  check_flow(ens, flow);
  require_paths(ens, "the drift-control incentive");
  const std::size_t np = ens.n_paths;
  const std::size_t ns = ens.time.steps();
  const double dt = ens.time.dt();
  IncentiveValues v = sized(np);
  double mf = 0.0;
  for (std::size_t k = 0; k < ns; ++k) mf += cost.mf(flow.second_moment[k]) * dt;
  std::fill(v.mf_term.begin(), v.mf_term.end(), mf);

  std::vector<double> x(np);
  for (std::size_t k = 0; k < ns; ++k) {
    for (std::size_t p = 0; p < np; ++p) x[p] = ens.paths(p, k);
    const StepDrift drift(field, ens.time.t(k), x);
    parallel_for(np, [&](std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p) {
        if (ens.failed[p]) continue;
        const double z = invert_drift_to_z(cost, U, drift(x[p]));
        // Zero second moment leaves H without its mean-field part, which
        // sits in mf_term instead.
        const double h0 = hamiltonian_eval(cost, U, z, 0.0).H;
        v.stoch_int[p] += z * (ens.paths(p, k + 1) - x[p]);
        v.quad_term[p] += h0 * dt;
      }
    });
  }
  finish_xi(v, ens, y0);
  return v;
}

ZSpec ZSpec::parse(std::string_view text) {
  if (text == "zero") return {};
  if (text.starts_with("const:")) return {parse_value(text.substr(6), text)};
  throw Error(ErrorCode::parse, "unknown Z process '" + std::string(text) + "'");
}

GammaSpec GammaSpec::parse(std::string_view text) {
  if (text == "zero") return {};
  if (text == "cm_sigma2") return {GammaSpec::Kind::cm_sigma2, 0.0};
  if (text.starts_with("const:")) return {GammaSpec::Kind::constant, parse_value(text.substr(6), text)};
  throw Error(ErrorCode::parse, "unknown Gamma process '" + std::string(text) + "'");
}

Matrix realized_variance(const PathEnsemble& ens, std::size_t window) {
  require_paths(ens, "the realized variance estimate");
  if (window == 0) throw Error(ErrorCode::invalid_argument, "variance window must be positive");
  const std::size_t np = ens.n_paths;
  const std::size_t ns = ens.time.steps();
  const double dt = ens.time.dt();
  Matrix out(np, ns);
  const std::size_t back = window / 2;
  parallel_for(np, [&](std::size_t b, std::size_t e) {
    std::vector<double> prefix(ns + 1, 0.0);
    for (std::size_t p = b; p < e; ++p) {
      for (std::size_t k = 0; k < ns; ++k) {
        const double dx = ens.paths(p, k + 1) - ens.paths(p, k);
        prefix[k + 1] = prefix[k] + dx * dx / dt;
      }
      for (std::size_t k = 0; k < ns; ++k) {
        // window of `window` increments centred on k, shifted inside [0, ns)
        std::size_t lo = k >= back ? k - back : 0;
        std::size_t hi = std::min(ns, lo + window);
        lo = hi >= window ? hi - window : 0;
        out(p, k) = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
      }
    }
  });
  return out;
}

IncentiveValues incentive_second_order(const PathEnsemble& ens, const ZSpec& z,
                                       const GammaSpec& gamma, const FlowMoments& flow,
                                       std::size_t window, double y0) {
  if (flow.second_moment.empty())
    throw Error(ErrorCode::invalid_argument, "the second-order incentive needs a flow");
  check_flow(ens, flow);
  const Matrix sigma2 = realized_variance(ens, window);
  const std::size_t np = ens.n_paths;
  const std::size_t ns = ens.time.steps();
  const double dt = ens.time.dt();
  IncentiveValues v = sized(np);
  parallel_for(np, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      for (std::size_t k = 0; k < ns; ++k) {
        const double s2 = sigma2(p, k);
        if (!std::isfinite(s2))
          throw Error(ErrorCode::non_finite, "non-finite quadratic-variation estimate");
        const double c_m = 1.0 + flow.second_moment[k];
        const double g = gamma.kind == GammaSpec::Kind::cm_sigma2 ? c_m * s2 : gamma.value;
        const double h = hamiltonian2_eval(z.value, g, c_m).H;
        v.stoch_int[p] += z.value * (ens.paths(p, k + 1) - ens.paths(p, k));
        v.quad_term[p] += (h - 0.5 * g * s2) * dt;
      }
    }
  });
  finish_xi(v, ens, Y0Spec{y0, {}, {}});
  return v;
}

Objective objective_j(const IncentiveValues& xi, const PathEnsemble& ens, const CostSpec& cost,
                      const FlowMoments& flow) {
  check_flow(ens, flow);
  const std::size_t np = ens.n_paths;
  if (xi.xi.size() != np)
    throw Error(ErrorCode::grid_mismatch, "incentive values belong to a different ensemble");
  const std::size_t ns = ens.time.steps();
  const double dt = ens.time.dt();
  double mf = 0.0;
  for (std::size_t k = 0; k < ns; ++k) mf += cost.mf(flow.second_moment[k]) * dt;

  Objective out;
  out.per_path.assign(np, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> alive;
  alive.reserve(np);
  for (std::size_t p = 0; p < np; ++p) {
    if (ens.failed[p]) continue;
    const double running =
        ens.acc.drift_energy[p] + ens.acc.cross[p] + 0.5 * ens.acc.delta_sq[p] + mf;
    out.per_path[p] = xi.xi[p] - running;
    alive.push_back(out.per_path[p]);
  }
  const auto m = mean_with_error(alive);
  out.j = m.mean;
  out.se = m.se;
  return out;
}

MeanWithError paired_difference(const Objective& a, const Objective& b) {
  if (a.per_path.size() != b.per_path.size())
    throw Error(ErrorCode::grid_mismatch, "objectives come from ensembles of different size");
  std::vector<double> d;
  d.reserve(a.per_path.size());
  for (std::size_t p = 0; p < a.per_path.size(); ++p)
    if (std::isfinite(a.per_path[p]) && std::isfinite(b.per_path[p]))
      d.push_back(a.per_path[p] - b.per_path[p]);
  return mean_with_error(d);
}

double xi_tail(const IncentiveValues& v, const PathEnsemble& ens, double level) {
  std::vector<double> a;
  a.reserve(v.xi.size());
  for (std::size_t p = 0; p < v.xi.size(); ++p)
    if (!ens.failed[p]) a.push_back(std::abs(v.xi[p]));
  if (a.empty()) return 0.0;
  const auto k = std::min(a.size() - 1, static_cast<std::size_t>(level * static_cast<double>(a.size())));
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
  return a[k];
}

}  // namespace mfp
