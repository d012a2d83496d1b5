#include "mfplan/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mfplan/error.hpp"
#include "mfplan/log.hpp"
#include "mfplan/parallel.hpp"

namespace mfp {

namespace {

// Columns whose log weight trails the best one by more than this are dropped.
constexpr double kLogCut = 40.0;

}  // namespace

DriftField::DriftField(const Coupling& c, double t_cap_eps)
    : horizon_(c.ref.horizon),
      t_cap_(c.ref.horizon * (1.0 - t_cap_eps)),
      y_spacing_(c.mu1.grid().spacing()),
      mu0_(c.ref.mu0),
      x0_grid_(c.ref.mu0.grid()),
      f_(c.f) {
  if (!(t_cap_eps > 0.0 && t_cap_eps < 1.0))
    throw Error(ErrorCode::invalid_argument, "t_cap epsilon must lie in (0, 1)");
  const GridSpec& yg = c.mu1.grid();
  const double log_h = std::log(yg.spacing());
  for (std::size_t j = 0; j < yg.size(); ++j) {
    if (c.mu1.weight(j) > 0.0) {
      y_.push_back(yg.node(j));
      lg_.push_back(c.g[j] + log_h);
    }
  }
  lg_max_ = *std::max_element(lg_.begin(), lg_.end());
  min_gap_ = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < y_.size(); ++j) min_gap_ = std::min(min_gap_, y_[j] - y_[j - 1]);
  if (!std::isfinite(min_gap_)) min_gap_ = yg.spacing();
  for (std::size_t i = 0; i < c.ref.mu0.size(); ++i)
    if (c.ref.mu0.weight(i) > 0.0) active_rows_.push_back(i);
}

std::size_t DriftField::row_for(double x0) const {
  const double h = x0_grid_.spacing();
  if (!(x0 >= x0_grid_.lo() - h && x0 <= x0_grid_.hi() + h))
    throw Error(ErrorCode::invalid_argument,
                "x0 = " + std::to_string(x0) + " lies outside the initial grid");
  const double pos = (x0 - x0_grid_.lo()) / h;
  auto it = std::lower_bound(active_rows_.begin(), active_rows_.end(), pos,
                             [](std::size_t i, double p) { return static_cast<double>(i) < p; });
  std::size_t best;
  if (it == active_rows_.end())
    best = active_rows_.back();
  else if (it == active_rows_.begin())
    best = *it;
  else
    best = (static_cast<double>(*it) - pos < pos - static_cast<double>(*(it - 1))) ? *it : *(it - 1);
  if (std::abs(x0_grid_.node(best) - x0) > 0.5 * h * (1.0 + 1e-9))
    warn("x0 = " + std::to_string(x0) + " snapped to initial node " +
         std::to_string(x0_grid_.node(best)));
  return best;
}

void DriftField::check_time(double t) const {
  if (!(t >= 0.0 && t <= t_cap_))
    throw Error(ErrorCode::invalid_argument,
                "drift evaluated at t = " + std::to_string(t) + " outside [0, t_cap]");
}

DriftField::Window DriftField::window(double s2, double x) const {
  const std::size_t n = y_.size();
  const double inv = 0.5 / s2;
  auto it = std::lower_bound(y_.begin(), y_.end(), x);
  std::size_t near = static_cast<std::size_t>(it - y_.begin());
  if (near == n || (near > 0 && x - y_[near - 1] < y_[near] - x)) near = near == 0 ? 0 : near - 1;
  const double d_near = y_[near] - x;
  const double a_near = lg_[near] - d_near * d_near * inv;
  const double radius = std::sqrt(2.0 * s2 * (lg_max_ - a_near + kLogCut));
  const auto lo = std::lower_bound(y_.begin(), y_.end(), x - radius) - y_.begin();
  const auto hi = std::upper_bound(y_.begin(), y_.end(), x + radius) - y_.begin();
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), a_near};
}

DriftField::Sums DriftField::sums(double s2, double x) const {
  const double inv = 0.5 / s2;
  const Window w = window(s2, x);
  double m = w.a_near;
  for (std::size_t j = w.lo; j < w.hi; ++j) {
    const double d = y_[j] - x;
    m = std::max(m, lg_[j] - d * d * inv);
  }
  double s0 = 0.0, s1 = 0.0, sq = 0.0;
  for (std::size_t j = w.lo; j < w.hi; ++j) {
    const double d = y_[j] - x;
    const double e = std::exp(lg_[j] - d * d * inv - m);
    s0 += e;
    s1 += e * d;
    sq += e * d * d;
  }
  return {m + std::log(s0), s1 / s0, sq / s0};
}

std::size_t DriftField::window_size(double t, double x) const {
  const Window w = window(horizon_ - std::min(t, t_cap_), x);
  return w.hi - w.lo;
}

double DriftField::sample_terminal(double s2, double x, double u) const {
  const double inv = 0.5 / s2;
  const Window w = window(s2, x);
  double m = w.a_near;
  for (std::size_t j = w.lo; j < w.hi; ++j) {
    const double d = y_[j] - x;
    m = std::max(m, lg_[j] - d * d * inv);
  }
  double total = 0.0;
  for (std::size_t j = w.lo; j < w.hi; ++j) {
    const double d = y_[j] - x;
    total += std::exp(lg_[j] - d * d * inv - m);
  }
  const double target = u * total;
  double acc = 0.0;
  std::size_t last = w.lo;
  for (std::size_t j = w.lo; j < w.hi; ++j) {
    const double d = y_[j] - x;
    const double e = std::exp(lg_[j] - d * d * inv - m);
    if (e > 0.0) last = j;
    acc += e;
    if (target < acc) return y_[j];
  }
  return y_[last];
}

double DriftField::log_m(double t, double x0, double x) const {
  check_time(t);
  const std::size_t i = row_for(x0);
  const double s2 = horizon_ - t;
  return f_[i] + sums(s2, x).lse - 0.5 * std::log(2.0 * std::numbers::pi * s2);
}

double DriftField::drift_eval(double t, double x0, double x) const {
  check_time(t);
  row_for(x0);
  return evaluate(t, x).beta;
}

double DriftField::target_mean(double t, double x0, double x) const {
  check_time(t);
  row_for(x0);
  return x + sums(horizon_ - t, x).m1;
}

DriftField::Value DriftField::evaluate(double t, double x) const {
  const double s2 = horizon_ - std::min(t, t_cap_);
  const Sums s = sums(s2, x);
  const double var = std::max(0.0, s.m2 - s.m1 * s.m1);
  return {s.m1 / s2, var / (s2 * s2) - 1.0 / s2};
}

StepDrift::StepDrift(const DriftField& field, double t, std::span<const double> positions)
    : field_(&field), t_(t) {
  if (positions.empty()) return;
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  for (double x : positions) {
    if (!std::isfinite(x)) continue;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  if (!(xmin <= xmax)) return;
  const double s2 = field.horizon() - std::min(t, field.t_cap());
  const double s = std::sqrt(s2);
  // Softmax transitions between neighbouring nodes happen on the scale s^2/gap.
  const double scale = std::min(s, s2 / field.min_node_gap());
  const double step = std::min(0.05, scale / 8.0);
  const auto ys = field.nodes();
  xmin = std::max(xmin, ys.front() - 20.0 * s - 1.0);
  xmax = std::min(xmax, ys.back() + 20.0 * s + 1.0);
  if (!(xmin < xmax)) return;
  const double points = std::floor((xmax - xmin) / step) + 2.0;
  if (points > static_cast<double>(positions.size()) / 4.0) return;

  const auto n = static_cast<std::size_t>(points);
  lo_ = xmin;
  step_ = step;
  beta_.resize(n);
  dbeta_.resize(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto v = field.evaluate(t, lo_ + static_cast<double>(k) * step_);
      beta_[k] = v.beta;
      dbeta_[k] = v.dbeta;
    }
  });
}

double StepDrift::operator()(double x) const {
  if (beta_.empty()) return field_->evaluate(t_, x).beta;
  const double pos = (x - lo_) / step_;
  if (!(pos >= 0.0) || pos >= static_cast<double>(beta_.size() - 1))
    return field_->evaluate(t_, x).beta;
  const auto k = static_cast<std::size_t>(pos);
  const double u = pos - static_cast<double>(k);
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
  const double h10 = u3 - 2.0 * u2 + u;
  const double h01 = -2.0 * u3 + 3.0 * u2;
  const double h11 = u3 - u2;
  return h00 * beta_[k] + h10 * step_ * dbeta_[k] + h01 * beta_[k + 1] +
         h11 * step_ * dbeta_[k + 1];
}

}  // namespace mfp
