#include "mfplan/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mfplan/error.hpp"
#include "mfplan/parallel.hpp"

namespace mfp {

namespace {

using nlohmann::ordered_json;

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

void precise(std::ostream& os) { os.precision(17); }

double num(std::string_view s, const std::string& path) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::parse, path + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    writer(os);
    os.flush();
    if (!os) throw Error(ErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  write_atomic(path, [&](std::ostream& os) { os << content; });
}

void write_coupling_csv(std::ostream& os, const Coupling& c) {
  precise(os);
  os << "i,j,x0,x1,pi,log_zeta\n";
  const GridSpec& xg = c.ref.mu0.grid();
  const GridSpec& yg = c.mu1.grid();
  for (std::size_t i = 0; i < c.log_pi.rows(); ++i)
    for (std::size_t j = 0; j < c.log_pi.cols(); ++j) {
      const double lp = c.log_pi(i, j);
      if (!std::isfinite(lp)) continue;
      const double pi = std::exp(lp);
      if (pi == 0.0) continue;
      os << i << ',' << j << ',' << xg.node(i) << ',' << yg.node(j) << ',' << pi << ','
         << c.log_zeta(i, j) << '\n';
    }
}

std::string bridge_report_json(const Coupling& c) {
  const auto diag = integrability_diagnostics(c);
  ordered_json j;
  j["entropy"] = coupling_entropy(c);
  j["iterations"] = c.iterations;
  j["marginal_err"] = c.marginal_err;
  j["e_abs_log"] = diag.e_abs_log;
  j["e_sq"] = diag.e_sq;
  j["horizon"] = c.ref.horizon;
  j["x0_grid"] = {{"lo", c.ref.mu0.grid().lo()}, {"hi", c.ref.mu0.grid().hi()}, {"n", c.ref.mu0.grid().size()}};
  j["x1_grid"] = {{"lo", c.mu1.grid().lo()}, {"hi", c.mu1.grid().hi()}, {"n", c.mu1.grid().size()}};
  return j.dump(2) + "\n";
}

void write_drift_csv(std::ostream& os, const DriftField& field, const std::vector<double>& times,
                     const std::vector<double>& xs, const std::vector<double>& x0s) {
  precise(os);
  os << "t,x0,x,beta\n";
  for (double x0 : x0s) {
    field.row_for(x0);
    for (double t : times)
      for (double x : xs) os << t << ',' << x0 << ',' << x << ',' << field.evaluate(t, x).beta << '\n';
  }
}

void write_paths_csv(std::ostream& os, const PathEnsemble& ens, std::size_t max_paths) {
  precise(os);
  os << "path,k,t,x\n";
  const std::size_t np = std::min(max_paths, ens.n_paths);
  std::vector<std::size_t> steps;
  if (ens.has_full_paths()) {
    for (std::size_t k = 0; k <= ens.time.steps(); ++k) steps.push_back(k);
  } else {
    steps = ens.recorded_steps;
  }
  std::vector<std::vector<double>> sections;
  if (!ens.has_full_paths())
    for (std::size_t k : steps) sections.push_back(ens.cross_section(k));
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const std::size_t k = steps[s];
      const double x = ens.has_full_paths() ? ens.paths(p, k) : sections[s][p];
      os << p << ',' << k << ',' << ens.time.t(k) << ',' << x << '\n';
    }
}

void write_flow_csv(std::ostream& os, const PathEnsemble& ens, const std::vector<double>& levels) {
  precise(os);
  os << "t,quantile_level,value\n";
  for (std::size_t k : ens.recorded_steps) {
    auto all = ens.cross_section(k);
    std::vector<double> x;
    x.reserve(all.size());
    for (std::size_t p = 0; p < all.size(); ++p)
      if (!ens.failed[p]) x.push_back(all[p]);
    std::sort(x.begin(), x.end());
    if (x.empty()) continue;
    for (double q : levels) {
      // type-7 sample quantile
      const double pos = q * static_cast<double>(x.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, x.size() - 1);
      const double v = x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
      os << ens.time.t(k) << ',' << q << ',' << v << '\n';
    }
  }
}

void write_moments_csv(std::ostream& os, const PathEnsemble& ens) {
  precise(os);
  os << "t,mean,second_moment\n";
  for (std::size_t k = 0; k <= ens.time.steps(); ++k)
    os << ens.time.t(k) << ',' << ens.flow.mean[k] << ',' << ens.flow.second_moment[k] << '\n';
}

void write_xi_csv(std::ostream& os, const IncentiveValues& v) {
  precise(os);
  os << "path,xi,stoch_int,quad_term,mf_term\n";
  for (std::size_t p = 0; p < v.xi.size(); ++p)
    os << p << ',' << v.xi[p] << ',' << v.stoch_int[p] << ',' << v.quad_term[p] << ','
       << v.mf_term[p] << '\n';
}

PathEnsemble read_paths_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open paths file " + path);
  std::string line;
  std::getline(in, line);
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t max_k = 0;
  double t_end = 0.0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view sv(line);
    double f[4];
    for (int c = 0; c < 4; ++c) {
      const auto comma = sv.find(',');
      if (c < 3 && comma == std::string_view::npos)
        throw Error(ErrorCode::parse, path + ": expected path,k,t,x");
      f[c] = num(sv.substr(0, comma), path);
      sv = comma == std::string_view::npos ? std::string_view{} : sv.substr(comma + 1);
    }
    const auto p = static_cast<std::size_t>(f[0]);
    const auto k = static_cast<std::size_t>(f[1]);
    rows[p].emplace_back(k, f[3]);
    if (k >= max_k) {
      max_k = k;
      t_end = f[2];
    }
  }
  if (rows.empty()) throw Error(ErrorCode::parse, path + " holds no paths");
  PathEnsemble e;
  e.time = TimeGrid(max_k, t_end);
  e.n_paths = rows.size();
  e.paths = Matrix(e.n_paths, max_k + 1);
  e.failed.assign(e.n_paths, 0);
  e.x0.resize(e.n_paths);
  e.drift_used = DriftUsed::zero;
  std::size_t p = 0;
  for (auto& [id, pts] : rows) {
    if (pts.size() != max_k + 1)
      throw Error(ErrorCode::parse, path + ": path " + std::to_string(id) + " does not cover every step");
    for (const auto& [k, x] : pts) e.paths(p, k) = x;
    e.x0[p] = e.paths(p, 0);
    ++p;
  }
  e.flow.mean.assign(max_k + 1, 0.0);
  e.flow.second_moment.assign(max_k + 1, 0.0);
  std::vector<double> col(e.n_paths);
  for (std::size_t k = 0; k <= max_k; ++k) {
    for (std::size_t q = 0; q < e.n_paths; ++q) col[q] = e.paths(q, k);
    e.flow.mean[k] = pairwise_sum(col) / static_cast<double>(e.n_paths);
    for (double& v : col) v *= v;
    e.flow.second_moment[k] = pairwise_sum(col) / static_cast<double>(e.n_paths);
  }
  return e;
}

std::string report_json(const VerificationReport& r) {
  ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = hex64(r.config_hash);
  j["seed"] = r.seed;
  j["pass"] = r.pass();
  j["planning"] = {{"w1_terminal", r.planning.w1_terminal},
                   {"ks_terminal", r.planning.ks_terminal},
                   {"tol_w1", r.planning.tol_w1},
                   {"pass", r.planning.pass}};
  j["entropy"] = {{"h_grid", r.entropy.h_grid},   {"h_mc", r.entropy.h_mc},
                  {"h_mc_se", r.entropy.h_mc_se}, {"rel_err", r.entropy.rel_err},
                  {"tol_rel", r.entropy.tol_rel}, {"pass", r.entropy.pass}};
  ordered_json gaps = ordered_json::array();
  for (const auto& g : r.gap.entries)
    gaps.push_back({{"delta_spec", g.delta_spec},
                    {"predicted", g.predicted},
                    {"measured", g.measured},
                    {"se", g.se},
                    {"pass", g.pass}});
  j["gap"] = {{"equilibrium_j", r.gap.eq_j},
              {"equilibrium_se", r.gap.eq_se},
              {"y0", r.gap.y0},
              {"equilibrium_pass", r.gap.eq_pass},
              {"entries", gaps},
              {"pass", r.gap.pass}};
  j["assumptions"] = {
      {"quadratic_growth",
       {{"C1", r.assumptions.quadratic_growth.C1},
        {"C2", r.assumptions.quadratic_growth.C2},
        {"exponent", r.assumptions.quadratic_growth.exponent},
        {"ok", r.assumptions.quadratic_growth.ok}}},
      {"full_range",
       {{"full", r.assumptions.full_range.full},
        {"lo", r.assumptions.full_range.lo},
        {"hi", r.assumptions.full_range.hi}}},
      {"pass", r.assumptions.pass}};
  return j.dump(2) + "\n";
}

BassReport bass_report(const BassModel& model, const BassEnsemble& be, BassScheme scheme) {
  BassReport r;
  r.c = model.c();
  r.scheme = scheme == BassScheme::exact ? "exact" : "euler";
  const auto term = be.ens.terminal();
  const EmpiricalMeasure em(term);
  r.w1_terminal = wasserstein1(em, model.mu1());
  r.ks_terminal = ks_statistic(em, model.mu1());
  const auto m = mean_with_error(term);
  r.mean_terminal = m.mean;
  r.mean_terminal_se = m.se;
  const auto x1 = be.ens.cross_section(be.ens.time.steps());
  std::size_t above = 0;
  for (std::size_t p = 0; p < x1.size(); ++p) {
    const double err = std::abs(x1[p] - be.target[p]);
    r.max_abs_error = std::max(r.max_abs_error, err);
    above += err >= 0.05;
  }
  r.frac_error_above = static_cast<double>(above) / static_cast<double>(x1.size());
  return r;
}

std::string bass_report_json(const BassReport& r) {
  ordered_json j;
  j["scheme"] = r.scheme;
  j["c"] = r.c;
  j["w1_terminal"] = r.w1_terminal;
  j["ks_terminal"] = r.ks_terminal;
  j["mean_terminal"] = r.mean_terminal;
  j["mean_terminal_se"] = r.mean_terminal_se;
  j["max_abs_error_vs_T"] = r.max_abs_error;
  j["fraction_error_above_0.05"] = r.frac_error_above;
  return j.dump(2) + "\n";
}

std::string objective_json(const ObjectiveSummary& s) {
  ordered_json j;
  j["J"] = s.j;
  j["SE"] = s.se;
  j["xi_abs_quantile_0.999"] = s.xi_tail_999;
  ordered_json gaps = ordered_json::array();
  for (const auto& g : s.gaps)
    gaps.push_back({{"delta_spec", g.delta_spec},
                    {"gap_measured", g.measured},
                    {"gap_predicted", g.predicted},
                    {"se", g.se},
                    {"pass", g.pass}});
  j["gap_vs_equilibrium"] = gaps;
  return j.dump(2) + "\n";
}

}  // namespace mfp
