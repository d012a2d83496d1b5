#include "mfplan/bass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfplan/error.hpp"
#include "mfplan/gaussian.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/random.hpp"

namespace mfp {

namespace {

// Beyond this many standard deviations Phi is 0 or 1 in double precision.
constexpr double kReach = 38.0;

}  // namespace

BassModel::BassModel(const GridMeasure& mu1, double t_cap_eps)
    : mu1_(mu1), c_(mu1.mean()), t_cap_(1.0 - t_cap_eps) {
  if (!(t_cap_eps > 0.0 && t_cap_eps < 1.0))
    throw Error(ErrorCode::invalid_argument, "t_cap epsilon must lie in (0, 1)");
  std::vector<std::size_t> atoms;
  for (std::size_t i = 0; i < mu1.size(); ++i)
    if (mu1.weight(i) > 0.0) atoms.push_back(i);
  first_ = mu1.grid().node(atoms.front());
  double acc = 0.0;
  for (std::size_t a = 0; a + 1 < atoms.size(); ++a) {
    const double f = mu1.cumulative(atoms[a]);
    if (!(f > 0.0 && f < 1.0)) continue;
    at_.push_back(normal_quantile(f));
    size_.push_back(mu1.grid().node(atoms[a + 1]) - mu1.grid().node(atoms[a]));
    before_.push_back(acc);
    acc += size_.back();
  }
  before_.push_back(acc);
}

double BassModel::T(double x) const {
  // T jumps after b_k: T(b_k) keeps the lower atom (left-continuous inverse).
  const auto k = static_cast<std::size_t>(std::lower_bound(at_.begin(), at_.end(), x) - at_.begin());
  return first_ + before_[k];
}

BassModel::Value BassModel::evaluate(double t, double x) const {
  const double s = std::sqrt(1.0 - std::min(t, t_cap_));
  const double reach = kReach * s;
  const auto lo = static_cast<std::size_t>(
      std::lower_bound(at_.begin(), at_.end(), x - reach) - at_.begin());
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(at_.begin(), at_.end(), x + reach) - at_.begin());
  double u = first_ + before_[lo];
  double sig = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    const double z = (x - at_[k]) / s;
    u += size_[k] * normal_cdf(z);
    sig += size_[k] * normal_pdf(z);
  }
  return {u, sig / s};
}

double BassModel::u(double t, double x) const { return evaluate(t, x).u; }
double BassModel::sigma(double t, double x) const { return evaluate(t, x).sigma; }

BassSlice::BassSlice(const BassModel& model, double t, std::span<const double> positions)
    : model_(&model), t_(t) {
  if (positions.empty()) return;
  const auto [mn, mx] = std::minmax_element(positions.begin(), positions.end());
  const double s = std::sqrt(1.0 - std::min(t, model.t_cap()));
  const double step = s / 8.0;
  const double points = std::floor((*mx - *mn) / step) + 2.0;
  if (!(points <= static_cast<double>(positions.size()) / 4.0)) return;
  const auto n = static_cast<std::size_t>(points);
  lo_ = *mn;
  step_ = step;
  u_.resize(n);
  s_.resize(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto v = model.evaluate(t, lo_ + static_cast<double>(k) * step_);
      u_[k] = v.u;
      s_[k] = v.sigma;
    }
  });
}

BassModel::Value BassSlice::operator()(double x) const {
  if (u_.empty()) return model_->evaluate(t_, x);
  const double pos = (x - lo_) / step_;
  if (!(pos >= 0.0) || pos >= static_cast<double>(u_.size() - 1)) return model_->evaluate(t_, x);
  const auto k = static_cast<std::size_t>(pos);
  const double r = pos - static_cast<double>(k);
  const double r2 = r * r;
  const double r3 = r2 * r;
  const double u = (2 * r3 - 3 * r2 + 1) * u_[k] + (r3 - 2 * r2 + r) * step_ * s_[k] +
                   (-2 * r3 + 3 * r2) * u_[k + 1] + (r3 - r2) * step_ * s_[k + 1];
  const double sig = (1.0 - r) * s_[k] + r * s_[k + 1];
  return {u, sig};
}

BassScheme parse_bass_scheme(std::string_view text) {
  if (text == "exact") return BassScheme::exact;
  if (text == "euler") return BassScheme::euler;
  throw Error(ErrorCode::parse, "unknown Bass scheme '" + std::string(text) + "'");
}

BassEnsemble bass_simulate(const BassModel& model, const GridMeasure& mu0, const TimeGrid& tg,
                           const SimulationOptions& opts, BassScheme scheme) {
  if (opts.n_paths < 100) throw Error(ErrorCode::invalid_argument, "need at least 100 paths");
  if (std::abs(tg.horizon() - 1.0) > 1e-12)
    throw Error(ErrorCode::invalid_argument, "the Bass construction runs on [0, 1]");
  const std::size_t np = opts.n_paths;
  const std::size_t ns = tg.steps();
  const double dt = tg.dt();
  const double sqdt = std::sqrt(dt);
  const double c = model.c();

  BassEnsemble out;
  PathEnsemble& e = out.ens;
  e.time = tg;
  e.n_paths = np;
  e.seed = opts.seed;
  e.drift_used = DriftUsed::equilibrium;
  e.x0 = stratified_initial_points(mu0, np, opts.seed);
  e.failed.assign(np, 0);
  e.acc = {std::vector<double>(np, 0.0), std::vector<double>(np, 0.0),
           std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
  e.flow.mean.resize(ns + 1);
  e.flow.second_moment.resize(ns + 1);
  for (std::size_t i = 0; i <= 10; ++i) e.recorded_steps.push_back((i * ns + 5) / 10);
  for (std::size_t k : opts.record_steps) e.recorded_steps.push_back(std::min(k, ns));
  std::sort(e.recorded_steps.begin(), e.recorded_steps.end());
  e.recorded_steps.erase(std::unique(e.recorded_steps.begin(), e.recorded_steps.end()),
                         e.recorded_steps.end());
  e.recorded = Matrix(e.recorded_steps.size(), np);
  const bool keep = opts.store_paths || np * (ns + 1) <= opts.full_path_budget;
  if (keep) e.paths = Matrix(np, ns + 1);

  std::vector<double> x = e.x0;
  std::vector<double> b(np, 0.0);
  std::vector<double> u_prev(np, c);  // u(0, B_0) = u(0, 0) = c
  std::vector<double> tmp(np);
  std::size_t next_record = 0;

  auto snapshot = [&](std::size_t k) {
    if (keep)
      for (std::size_t p = 0; p < np; ++p) e.paths(p, k) = x[p];
    if (next_record < e.recorded_steps.size() && e.recorded_steps[next_record] == k) {
      std::copy(x.begin(), x.end(), e.recorded.row(next_record).begin());
      ++next_record;
    }
    e.flow.mean[k] = pairwise_sum(x) / static_cast<double>(np);
    for (std::size_t p = 0; p < np; ++p) tmp[p] = x[p] * x[p];
    e.flow.second_moment[k] = pairwise_sum(tmp) / static_cast<double>(np);
  };

  snapshot(0);
  for (std::size_t k = 0; k < ns; ++k) {
    const double t = tg.t(k);
    const bool last = k + 1 == ns;
    if (scheme == BassScheme::euler) {
      const BassSlice slice(model, t, b);
      parallel_for(np, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
          const double db = sqdt * standard_normal(opts.seed, Stream::auxiliary, p, k);
          x[p] += (c - e.x0[p]) * dt + slice(b[p]).sigma * db;
          b[p] += db;
        }
      });
    } else {
      for (std::size_t p = 0; p < np; ++p)
        b[p] += sqdt * standard_normal(opts.seed, Stream::auxiliary, p, k);
      if (last) {
        parallel_for(np, [&](std::size_t lo, std::size_t hi) {
          for (std::size_t p = lo; p < hi; ++p) {
            const double u = model.T(b[p]);
            x[p] += (c - e.x0[p]) * dt + (u - u_prev[p]);
            u_prev[p] = u;
          }
        });
      } else {
        const BassSlice slice(model, tg.t(k + 1), b);
        parallel_for(np, [&](std::size_t lo, std::size_t hi) {
          for (std::size_t p = lo; p < hi; ++p) {
            const double u = slice(b[p]).u;
            x[p] += (c - e.x0[p]) * dt + (u - u_prev[p]);
            u_prev[p] = u;
          }
        });
      }
    }
    for (std::size_t p = 0; p < np; ++p)
      if (!std::isfinite(x[p])) e.failed[p] = 1;
    snapshot(k + 1);
  }
  out.b_terminal = b;
  out.target.resize(np);
  for (std::size_t p = 0; p < np; ++p) out.target[p] = model.T(b[p]);
  if (static_cast<double>(e.failures()) > opts.failure_budget * static_cast<double>(np))
    throw Error(ErrorCode::non_finite, "Bass simulation exceeded the failure budget");
  return out;
}

PathEnsemble simulate_brownian(const TimeGrid& tg, std::size_t n_paths, std::uint64_t seed,
                               double start) {
  const std::size_t ns = tg.steps();
  const double sqdt = std::sqrt(tg.dt());
  PathEnsemble e;
  e.time = tg;
  e.n_paths = n_paths;
  e.seed = seed;
  e.drift_used = DriftUsed::zero;
  e.x0.assign(n_paths, start);
  e.failed.assign(n_paths, 0);
  e.paths = Matrix(n_paths, ns + 1);
  parallel_for(n_paths, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      double w = start;
      e.paths(p, 0) = w;
      for (std::size_t k = 0; k < ns; ++k) {
        w += sqdt * standard_normal(seed, Stream::brownian, p, k);
        e.paths(p, k + 1) = w;
      }
    }
  });
  e.flow.mean.assign(ns + 1, 0.0);
  e.flow.second_moment.assign(ns + 1, 0.0);
  for (std::size_t k = 0; k <= ns; ++k) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      s1 += e.paths(p, k);
      s2 += e.paths(p, k) * e.paths(p, k);
    }
    e.flow.mean[k] = s1 / static_cast<double>(n_paths);
    e.flow.second_moment[k] = s2 / static_cast<double>(n_paths);
  }
  return e;
}

PathEnsemble time_change_embed(const PathEnsemble& w_paths, const std::vector<double>& tau,
                               const TimeGrid& out_grid) {
  if (!w_paths.has_full_paths())
    throw Error(ErrorCode::invalid_argument, "time change needs stored Brownian paths");
  if (tau.size() != w_paths.n_paths)
    throw Error(ErrorCode::invalid_argument, "one stopping value per path is required");
  if (std::abs(out_grid.horizon() - 1.0) > 1e-12)
    throw Error(ErrorCode::invalid_argument, "the time-changed process lives on [0, 1]");
  const double w_end = w_paths.time.horizon();
  for (double v : tau) {
    if (!(v >= 0.0)) throw Error(ErrorCode::invalid_argument, "stopping values must be >= 0");
    if (v > w_end * (1.0 + 1e-12))
      throw Error(ErrorCode::invalid_argument,
                  "stopping value " + std::to_string(v) + " exceeds the simulated W horizon");
  }
  const std::size_t np = w_paths.n_paths;
  const std::size_t ns = out_grid.steps();
  const std::size_t nw = w_paths.time.steps();
  const double wdt = w_paths.time.dt();

  PathEnsemble e;
  e.time = out_grid;
  e.n_paths = np;
  e.seed = w_paths.seed;
  e.drift_used = DriftUsed::zero;
  e.failed.assign(np, 0);
  e.x0.resize(np);
  e.paths = Matrix(np, ns + 1);
  parallel_for(np, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t k = 0; k <= ns; ++k) {
        const double t = out_grid.t(k);
        const double clock = k == ns ? tau[p] : std::min(tau[p], t / (1.0 - t));
        const double pos = std::min(clock / wdt, static_cast<double>(nw));
        const auto i = std::min(static_cast<std::size_t>(pos), nw - 1);
        const double r = pos - static_cast<double>(i);
        e.paths(p, k) = (1.0 - r) * w_paths.paths(p, i) + r * w_paths.paths(p, i + 1);
      }
      e.x0[p] = e.paths(p, 0);
    }
  });
  e.flow.mean.assign(ns + 1, 0.0);
  e.flow.second_moment.assign(ns + 1, 0.0);
  for (std::size_t k = 0; k <= ns; ++k) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      s1 += e.paths(p, k);
      s2 += e.paths(p, k) * e.paths(p, k);
    }
    e.flow.mean[k] = s1 / static_cast<double>(np);
    e.flow.second_moment[k] = s2 / static_cast<double>(np);
  }
  return e;
}

}  // namespace mfp
