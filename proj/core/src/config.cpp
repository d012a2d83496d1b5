#include "mfplan/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include "json.hpp"
#include <sstream>

#include "mfplan/error.hpp"

namespace mfp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

double to_real(std::string_view key, std::string_view v) {
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error(ErrorCode::parse, "config key '" + std::string(key) + "': bad number '" +
                                      std::string(v) + "'");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::parse, "config key '" + std::string(key) +
                                      "': expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::parse, "config key '" + std::string(key) + "': expected a boolean");
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',' || ch == ';' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void flatten(const nlohmann::json& j, const std::string& prefix, RunConfig& cfg) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = *it;
    if (v.is_object()) {
      flatten(v, key, cfg);
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) {
        if (!joined.empty()) joined += ";";
        joined += e.is_string() ? e.get<std::string>() : e.dump();
      }
      set_config_value(cfg, key, joined);
    } else if (v.is_string()) {
      set_config_value(cfg, key, v.get<std::string>());
    } else if (v.is_number_float()) {
      set_config_value(cfg, key, format_real(v.get<double>()));
    } else {
      set_config_value(cfg, key, v.dump());
    }
  }
}

}  // namespace

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  const std::string k(trim(key));
  auto positive = [&](std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::parse, "config key '" + k + "' must be positive");
    return static_cast<std::size_t>(n);
  };
  auto positive_real = [&](double x) {
    if (!(x > 0.0)) throw Error(ErrorCode::parse, "config key '" + k + "' must be positive");
    return x;
  };

  if (k == "mu0") c.mu0 = v;
  else if (k == "mu1") c.mu1 = v;
  else if (k == "grid.lo") c.grid.lo = to_real(k, v);
  else if (k == "grid.hi") c.grid.hi = to_real(k, v);
  else if (k == "grid.n") c.grid.n = positive(to_uint(k, v));
  else if (k == "y_grid.lo") { c.y_grid_set = true; c.y_grid.lo = to_real(k, v); }
  else if (k == "y_grid.hi") { c.y_grid_set = true; c.y_grid.hi = to_real(k, v); }
  else if (k == "y_grid.n") { c.y_grid_set = true; c.y_grid.n = positive(to_uint(k, v)); }
  else if (k == "sinkhorn.tol") c.sinkhorn_tol = positive_real(to_real(k, v));
  else if (k == "sinkhorn.max_iter") c.sinkhorn_max_iter = positive(to_uint(k, v));
  else if (k == "sim.paths") c.n_paths = positive(to_uint(k, v));
  else if (k == "sim.steps") c.n_steps = positive(to_uint(k, v));
  else if (k == "sim.seed") c.seed = to_uint(k, v);
  else if (k == "sim.store_paths") c.store_paths = to_bool(k, v);
  else if (k == "horizon") c.horizon = positive_real(to_real(k, v));
  else if (k == "t_cap_eps") c.t_cap_eps = positive_real(to_real(k, v));
  else if (k == "cost") c.cost = v;
  else if (k == "control") c.control = v;
  else if (k == "mf_term") c.mf_term = v;
  else if (k == "y0") c.y0 = to_real(k, v);
  else if (k == "y0_table") c.y0_table = v;
  else if (k == "perturbations") c.perturbations = split_list(v);
  else if (k == "tol.w1") c.tol.w1 = positive_real(to_real(k, v));
  else if (k == "tol.entropy_rel") c.tol.entropy_rel = positive_real(to_real(k, v));
  else if (k == "tol.gap_abs") c.tol.gap_abs = to_real(k, v);
  else if (k == "tol.gap_se") c.tol.gap_se = to_real(k, v);
  else if (k == "incentive.kind") c.incentive = v;
  else if (k == "incentive.z") c.z_process = v;
  else if (k == "incentive.gamma") c.gamma_process = v;
  else if (k == "incentive.window") c.sigma_window = positive(to_uint(k, v));
  else if (k == "incentive.paths_csv") c.paths_csv = v;
  else if (k == "bass.scheme") c.bass_scheme = v;
  else if (k == "output") c.output_dir = v;
  else if (k == "threads") c.threads = static_cast<std::size_t>(to_uint(k, v));
  else throw Error(ErrorCode::parse, "unknown config key '" + k + "'");
}

RunConfig parse_config_text(std::string_view text) {
  RunConfig cfg;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse, std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::parse, "config JSON must be an object");
    flatten(j, "", cfg);
    return cfg;
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::parse, "config line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["mu0"] = mu0;
  kv["mu1"] = mu1;
  kv["grid.lo"] = format_real(grid.lo);
  kv["grid.hi"] = format_real(grid.hi);
  kv["grid.n"] = std::to_string(grid.n);
  const GridConfig& yg = y_grid_set ? y_grid : grid;
  kv["y_grid.lo"] = format_real(yg.lo);
  kv["y_grid.hi"] = format_real(yg.hi);
  kv["y_grid.n"] = std::to_string(yg.n);
  kv["sinkhorn.tol"] = format_real(sinkhorn_tol);
  kv["sinkhorn.max_iter"] = std::to_string(sinkhorn_max_iter);
  kv["sim.paths"] = std::to_string(n_paths);
  kv["sim.steps"] = std::to_string(n_steps);
  kv["sim.seed"] = std::to_string(seed);
  kv["sim.store_paths"] = store_paths ? "true" : "false";
  kv["horizon"] = format_real(horizon);
  kv["t_cap_eps"] = format_real(t_cap_eps);
  kv["cost"] = cost;
  kv["control"] = control;
  kv["mf_term"] = mf_term;
  kv["y0"] = format_real(y0);
  kv["y0_table"] = y0_table;
  std::string pert;
  for (const auto& p : perturbations) pert += (pert.empty() ? "" : ";") + p;
  kv["perturbations"] = pert;
  kv["tol.w1"] = format_real(tol.w1);
  kv["tol.entropy_rel"] = format_real(tol.entropy_rel);
  kv["tol.gap_abs"] = format_real(tol.gap_abs);
  kv["tol.gap_se"] = format_real(tol.gap_se);
  kv["incentive.kind"] = incentive;
  kv["incentive.z"] = z_process;
  kv["incentive.gamma"] = gamma_process;
  kv["incentive.window"] = std::to_string(sigma_window);
  kv["incentive.paths_csv"] = paths_csv;
  kv["bass.scheme"] = bass_scheme;
  // output directory and thread count do not change results
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : cfg.canonical()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace mfp
