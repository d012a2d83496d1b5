#include "mfplan/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mfplan/error.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/random.hpp"

namespace mfp {

TimeGrid::TimeGrid(std::size_t n_steps, double horizon) : n_(n_steps), horizon_(horizon) {
  if (n_steps < 10) throw Error(ErrorCode::invalid_argument, "time grid needs at least 10 steps");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorCode::invalid_argument, "time horizon must be positive");
}

double TimeGrid::t(std::size_t k) const {
  if (k == n_) return horizon_;
  return static_cast<double>(k) * horizon_ / static_cast<double>(n_);
}

std::size_t TimeGrid::index_of(double t) const {
  const double pos = t / horizon_ * static_cast<double>(n_);
  const double k = std::round(pos);
  if (!(k >= 0.0 && k <= static_cast<double>(n_)) || std::abs(pos - k) > 1e-9 * (1.0 + k))
    throw Error(ErrorCode::invalid_argument,
                "time " + std::to_string(t) + " is not on the simulation grid");
  return static_cast<std::size_t>(k);
}

Perturbation Perturbation::parse(std::string_view spec) {
  if (spec.empty() || spec == "none") return {};
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw Error(ErrorCode::parse, "perturbation '" + std::string(spec) + "' lacks 'kind:'");
  const std::string_view kind = spec.substr(0, colon);
  std::string_view arg = spec.substr(colon + 1);
  if (!arg.empty() && arg.front() == '+') arg.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
  if (arg.empty() || ec != std::errc() || ptr != arg.data() + arg.size() || !std::isfinite(v))
    throw Error(ErrorCode::parse, "bad perturbation value in '" + std::string(spec) + "'");
  if (kind == "const") return {Kind::constant, v};
  if (kind == "sin") return {Kind::sine, v};
  if (kind == "state") return {Kind::state, v};
  throw Error(ErrorCode::parse, "unknown perturbation kind '" + std::string(kind) + "'");
}

std::string Perturbation::spec() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::constant:
      os << "const:" << value;
      break;
    case Kind::sine:
      os << "sin:" << value;
      break;
    case Kind::state:
      os << "state:" << value;
      break;
  }
  return os.str();
}

double Perturbation::operator()(double t, double x) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::constant:
      return value;
    case Kind::sine:
      return value * std::sin(2.0 * std::numbers::pi * t);
    case Kind::state:
      return value * x;
  }
  return 0.0;
}

std::size_t PathEnsemble::failures() const {
  return static_cast<std::size_t>(std::count(failed.begin(), failed.end(), std::uint8_t{1}));
}

std::vector<double> PathEnsemble::cross_section(std::size_t k) const {
  if (k > time.steps()) throw Error(ErrorCode::invalid_argument, "step index out of range");
  const auto rec = std::find(recorded_steps.begin(), recorded_steps.end(), k);
  if (rec != recorded_steps.end()) {
    const auto row = recorded.row(static_cast<std::size_t>(rec - recorded_steps.begin()));
    return {row.begin(), row.end()};
  }
  if (!has_full_paths())
    throw Error(ErrorCode::invalid_argument,
                "step " + std::to_string(k) + " was not recorded and full paths were not kept");
  std::vector<double> out(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) out[p] = paths(p, k);
  return out;
}

std::vector<double> PathEnsemble::terminal() const {
  const auto all = cross_section(time.steps());
  std::vector<double> out;
  out.reserve(all.size());
  for (std::size_t p = 0; p < all.size(); ++p)
    if (!failed[p]) out.push_back(all[p]);
  return out;
}

std::vector<double> stratified_initial_points(const GridMeasure& mu0, std::size_t n,
                                              std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keys(n);
  for (std::size_t p = 0; p < n; ++p) keys[p] = {random_bits(seed, Stream::permutation, p), p};
  std::sort(keys.begin(), keys.end());
  std::vector<double> x0(n);
  const double dn = static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    x0[keys[r].second] = atomic_quantile(mu0, (static_cast<double>(r) + 0.5) / dn);
  return x0;
}

namespace {

enum class Mode { follow, perturbed, reference };

std::vector<std::size_t> recorded_step_set(std::size_t n, const std::vector<std::size_t>& extra) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= 10; ++i) out.push_back((i * n + 5) / 10);
  for (std::size_t k : extra) {
    if (k > n) throw Error(ErrorCode::invalid_argument, "record step beyond the time grid");
    out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PathEnsemble run(const DriftField& field, const TimeGrid& tg, const SimulationOptions& opts,
                 const Perturbation& delta, Mode mode) {
  if (opts.n_paths < 100) throw Error(ErrorCode::invalid_argument, "need at least 100 paths");
  if (std::abs(tg.horizon() - field.horizon()) > 1e-12)
    throw Error(ErrorCode::grid_mismatch, "time grid horizon differs from the coupling horizon");

  const std::size_t np = opts.n_paths;
  const std::size_t ns = tg.steps();
  const double dt = tg.dt();
  const double sqdt = std::sqrt(dt);
  const double y_cell = field.target_spacing();

  PathEnsemble e;
  e.time = tg;
  e.n_paths = np;
  e.seed = opts.seed;
  e.drift_used = mode == Mode::follow      ? DriftUsed::equilibrium
                 : mode == Mode::perturbed ? DriftUsed::perturbed
                                           : DriftUsed::zero;
  e.delta = delta;
  e.x0 = stratified_initial_points(field.mu0(), np, opts.seed);
  e.failed.assign(np, 0);
  e.acc = {std::vector<double>(np, 0.0), std::vector<double>(np, 0.0),
           std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
  e.flow.mean.resize(ns + 1);
  e.flow.second_moment.resize(ns + 1);
  e.recorded_steps = recorded_step_set(ns, opts.record_steps);
  e.recorded = Matrix(e.recorded_steps.size(), np);
  const bool keep = opts.store_paths || np * (ns + 1) <= opts.full_path_budget;
  if (keep) e.paths = Matrix(np, ns + 1);

  std::vector<double> x = e.x0;
  std::vector<double> sq(np);
  std::size_t next_record = 0;

  auto snapshot = [&](std::size_t k) {
    if (keep)
      for (std::size_t p = 0; p < np; ++p) e.paths(p, k) = x[p];
    if (next_record < e.recorded_steps.size() && e.recorded_steps[next_record] == k) {
      std::copy(x.begin(), x.end(), e.recorded.row(next_record).begin());
      ++next_record;
    }
    // Moments over surviving paths; failed ones contribute zero and are
    // removed from the count.
    std::size_t alive = 0;
    for (std::size_t p = 0; p < np; ++p) {
      const bool ok = !e.failed[p];
      alive += ok;
      sq[p] = ok ? x[p] : 0.0;
    }
    const double denom = static_cast<double>(std::max<std::size_t>(alive, 1));
    e.flow.mean[k] = pairwise_sum(sq) / denom;
    for (std::size_t p = 0; p < np; ++p) sq[p] *= sq[p];
    e.flow.second_moment[k] = pairwise_sum(sq) / denom;
  };

  snapshot(0);
  for (std::size_t k = 0; k < ns; ++k) {
    const double t = tg.t(k);
    const StepDrift drift(field, t, x);
    const bool exact_last = opts.exact_final_step && k + 1 == ns && mode != Mode::reference;
    const double remaining = tg.horizon() - t;
    parallel_for(np, [&](std::size_t b, std::size_t end) {
      for (std::size_t p = b; p < end; ++p) {
        if (e.failed[p]) continue;
        const double xp = x[p];
        const double beta = drift(xp);
        const double d = mode == Mode::perturbed ? delta(t, xp) : 0.0;
        double next;
        if (exact_last) {
          const auto u = uniform_pair(opts.seed, Stream::auxiliary, p, k);
          const double y = field.sample_terminal(remaining, xp, 1.0 - u.u1);
          next = y + y_cell * (u.u2 - 0.5) + d * dt;
        } else {
          const double g = standard_normal(opts.seed, Stream::brownian, p, k);
          const double b_used = mode == Mode::reference ? 0.0 : beta + d;
          next = xp + b_used * dt + sqdt * g;
        }
        if (!std::isfinite(next) || !std::isfinite(beta)) {
          e.failed[p] = 1;
          continue;
        }
        e.acc.stoch_int[p] += beta * (next - xp);
        e.acc.drift_energy[p] += 0.5 * beta * beta * dt;
        e.acc.delta_sq[p] += d * d * dt;
        e.acc.cross[p] += beta * d * dt;
        x[p] = next;
      }
    });
    snapshot(k + 1);
  }

  const std::size_t fails = e.failures();
  if (static_cast<double>(fails) > opts.failure_budget * static_cast<double>(np))
    throw Error(ErrorCode::non_finite,
                std::to_string(fails) + " of " + std::to_string(np) +
                    " paths became non-finite, above the failure budget");
  return e;
}

}  // namespace

PathEnsemble simulate_equilibrium(const DriftField& field, const TimeGrid& tg,
                                  const SimulationOptions& opts) {
  return run(field, tg, opts, {}, Mode::follow);
}

PathEnsemble simulate_perturbed(const DriftField& field, const Perturbation& delta,
                                const TimeGrid& tg, const SimulationOptions& opts) {
  return run(field, tg, opts, delta, Mode::perturbed);
}

PathEnsemble simulate_reference(const DriftField& field, const TimeGrid& tg,
                                const SimulationOptions& opts) {
  return run(field, tg, opts, {}, Mode::reference);
}

std::vector<EmpiricalMeasure> empirical_flow(const PathEnsemble& ens,
                                             const std::vector<double>& times) {
  std::vector<EmpiricalMeasure> out;
  out.reserve(times.size());
  for (double t : times) {
    const auto all = ens.cross_section(ens.time.index_of(t));
    std::vector<double> alive;
    alive.reserve(all.size());
    for (std::size_t p = 0; p < all.size(); ++p)
      if (!ens.failed[p]) alive.push_back(all[p]);
    out.emplace_back(std::move(alive));
  }
  return out;
}

}  // namespace mfp
