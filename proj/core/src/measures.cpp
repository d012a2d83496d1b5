#include "mfplan/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mfplan/error.hpp"
#include "mfplan/gaussian.hpp"
#include "mfplan/log.hpp"

namespace mfp {

// ---------------------------------------------------------------------------
// GridSpec

GridSpec::GridSpec(double lo, double hi, std::size_t n) : lo_(lo), hi_(hi), n_(n) {
  if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi))
    throw Error(ErrorCode::invalid_argument, "grid requires finite lo < hi");
  if (n < 2) throw Error(ErrorCode::invalid_argument, "grid requires n >= 2");
}

double GridSpec::node(std::size_t i) const {
  if (i + 1 == n_) return hi_;
  return lo_ + static_cast<double>(i) * spacing();
}

std::size_t GridSpec::nearest(double x) const {
  const double r = std::round((x - lo_) / spacing());
  if (!(r > 0.0)) return 0;
  if (r >= static_cast<double>(n_ - 1)) return n_ - 1;
  return static_cast<std::size_t>(r);
}

double GridSpec::edge(std::size_t k) const {
  return lo_ + (static_cast<double>(k) - 0.5) * spacing();
}

// ---------------------------------------------------------------------------
// GridMeasure

GridMeasure::GridMeasure(GridSpec grid, std::vector<double> weights)
    : grid_(grid), w_(std::move(weights)) {
  if (w_.size() != grid_.size())
    throw Error(ErrorCode::invalid_argument, "weight count does not match grid");
  double total = 0.0;
  for (double w : w_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::invalid_argument, "weights must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::invalid_argument,
                "weights must sum to 1 (got " + std::to_string(total) + ")");
  cum_.resize(w_.size());
  std::partial_sum(w_.begin(), w_.end(), cum_.begin());
  cum_.back() = 1.0;
}

GridMeasure GridMeasure::normalized(GridSpec grid, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total))
    throw Error(ErrorCode::invalid_argument, "measure has no mass on the grid");
  for (double& w : weights) w /= total;
  // A second pass absorbs the rounding of the first division.
  total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return GridMeasure(grid, std::move(weights));
}

double GridMeasure::cdf(double x) const {
  const double h = grid_.spacing();
  const double pos = (x - grid_.edge(0)) / h;
  if (pos <= 0.0) return 0.0;
  if (pos >= static_cast<double>(w_.size())) return 1.0;
  const auto k = static_cast<std::size_t>(pos);
  const double before = k == 0 ? 0.0 : cum_[k - 1];
  return before + w_[k] * (pos - static_cast<double>(k));
}

std::size_t GridMeasure::first_reaching(double p) const {
  const auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
  if (it == cum_.end()) return cum_.size() - 1;
  return static_cast<std::size_t>(it - cum_.begin());
}

double GridMeasure::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * grid_.node(i);
  return s;
}

double GridMeasure::second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    const double x = grid_.node(i);
    s += w_[i] * x * x;
  }
  return s;
}

double GridMeasure::variance() const {
  const double m = mean();
  return second_moment() - m * m;
}

// ---------------------------------------------------------------------------
// EmpiricalMeasure

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples) : x_(std::move(samples)) {
  if (x_.empty()) throw Error(ErrorCode::invalid_argument, "empirical measure is empty");
  for (double v : x_)
    if (!std::isfinite(v))
      throw Error(ErrorCode::non_finite, "empirical measure has non-finite sample");
  std::sort(x_.begin(), x_.end());
}

double EmpiricalMeasure::cdf(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return static_cast<double>(it - x_.begin()) / static_cast<double>(x_.size());
}

double EmpiricalMeasure::mean() const {
  return std::accumulate(x_.begin(), x_.end(), 0.0) / static_cast<double>(x_.size());
}

double EmpiricalMeasure::second_moment() const {
  double s = 0.0;
  for (double v : x_) s += v * v;
  return s / static_cast<double>(x_.size());
}

// ---------------------------------------------------------------------------
// Spec parsing

namespace {

struct RawMass {
  std::vector<double> w;
  double lost = 0.0;
};

double parse_number(std::string_view s, std::string_view context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::parse,
                "bad number '" + std::string(s) + "' in " + std::string(context));
  return v;
}

std::vector<double> parse_args(std::string_view args, std::size_t expected,
                               std::string_view spec) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = args.find(',', start);
    out.push_back(parse_number(args.substr(start, comma - start), spec));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.size() != expected)
    throw Error(ErrorCode::parse, "wrong argument count in '" + std::string(spec) + "'");
  return out;
}

RawMass raw_gaussian(double mean, double sd, const GridSpec& g) {
  if (!(sd > 0.0)) throw Error(ErrorCode::invalid_argument, "gaussian std must be > 0");
  RawMass r;
  r.w.assign(g.size(), 0.0);
  const double h = g.spacing();
  const double inside =
      normal_cdf((g.edge(g.size()) - mean) / sd) - normal_cdf((g.edge(0) - mean) / sd);
  r.lost = std::max(0.0, 1.0 - inside);
  if (sd >= h) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = (g.node(i) - mean) / sd;
      r.w[i] = std::exp(-0.5 * z * z);
      total += r.w[i];
    }
    if (total > 0.0)
      for (double& w : r.w) w *= inside / total;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i)
      r.w[i] = normal_cdf((g.edge(i + 1) - mean) / sd) - normal_cdf((g.edge(i) - mean) / sd);
  }
  return r;
}

RawMass raw_uniform(double a, double b, const GridSpec& g) {
  if (!(a < b)) throw Error(ErrorCode::invalid_argument, "uniform requires a < b");
  RawMass r;
  r.w.assign(g.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double overlap = std::min(b, g.edge(i + 1)) - std::max(a, g.edge(i));
    if (overlap > 0.0) {
      r.w[i] = overlap / (b - a);
      total += r.w[i];
    }
  }
  r.lost = std::max(0.0, 1.0 - total);
  return r;
}

void add_atom(RawMass& r, double x, double mass, const GridSpec& g) {
  if (g.in_hull(x))
    r.w[g.nearest(x)] += mass;
  else
    r.lost += mass;
}

RawMass raw_csv(const std::string& path, const GridSpec& g) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open measure file " + path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::parse, "measure file " + path + " is empty");
  RawMass r;
  r.w.assign(g.size(), 0.0);
  double total = 0.0;
  double prev_x = -std::numeric_limits<double>::infinity();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": expected x,weight");
    const std::string_view sv(line);
    const double x = parse_number(sv.substr(0, comma), path);
    const double w = parse_number(sv.substr(comma + 1), path);
    if (x < prev_x)
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": rows not sorted by x");
    if (w < 0.0)
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": negative weight");
    prev_x = x;
    total += w;
    add_atom(r, x, w, g);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::parse, "measure file " + path + " has no mass");
  for (double& w : r.w) w /= total;
  r.lost /= total;
  return r;
}

RawMass raw_measure(std::string_view spec, const GridSpec& g);

RawMass raw_mixture(std::string_view body, std::string_view spec, const GridSpec& g) {
  RawMass r;
  r.w.assign(g.size(), 0.0);
  std::vector<std::pair<RawMass, double>> parts;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const char c = body[pos];
    if (c == ' ' || c == '+' || c == ',') {
      ++pos;
      continue;
    }
    if (c != '(')
      throw Error(ErrorCode::parse, "mixture component must be parenthesized in '" + std::string(spec) + "'");
    int depth = 0;
    std::size_t close = pos;
    for (; close < body.size(); ++close) {
      if (body[close] == '(') ++depth;
      if (body[close] == ')' && --depth == 0) break;
    }
    if (close == body.size())
      throw Error(ErrorCode::parse, "unbalanced parentheses in '" + std::string(spec) + "'");
    const std::string_view inner = body.substr(pos + 1, close - pos - 1);
    const std::size_t semi = inner.rfind(';');
    if (semi == std::string_view::npos)
      throw Error(ErrorCode::parse, "mixture component needs ';weight' in '" + std::string(spec) + "'");
    const double weight = parse_number(inner.substr(semi + 1), spec);
    if (!(weight > 0.0))
      throw Error(ErrorCode::parse, "mixture weights must be positive");
    parts.emplace_back(raw_measure(inner.substr(0, semi), g), weight);
    pos = close + 1;
  }
  if (parts.empty()) throw Error(ErrorCode::parse, "empty mixture '" + std::string(spec) + "'");
  double total = 0.0;
  for (const auto& [_, w] : parts) total += w;
  for (const auto& [part, w] : parts) {
    for (std::size_t i = 0; i < g.size(); ++i) r.w[i] += part.w[i] * w / total;
    r.lost += part.lost * w / total;
  }
  return r;
}

RawMass raw_measure(std::string_view spec, const GridSpec& g) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw Error(ErrorCode::parse, "measure spec '" + std::string(spec) + "' lacks 'kind:'");
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view body = spec.substr(colon + 1);
  if (kind == "gaussian") {
    const auto a = parse_args(body, 2, spec);
    return raw_gaussian(a[0], a[1], g);
  }
  if (kind == "uniform") {
    const auto a = parse_args(body, 2, spec);
    return raw_uniform(a[0], a[1], g);
  }
  if (kind == "point") {
    const auto a = parse_args(body, 1, spec);
    RawMass r;
    r.w.assign(g.size(), 0.0);
    add_atom(r, a[0], 1.0, g);
    return r;
  }
  if (kind == "twopoint") {
    const auto a = parse_args(body, 3, spec);
    if (!(a[2] >= 0.0 && a[2] <= 1.0))
      throw Error(ErrorCode::invalid_argument, "twopoint probability must lie in [0, 1]");
    RawMass r;
    r.w.assign(g.size(), 0.0);
    add_atom(r, a[0], a[2], g);
    add_atom(r, a[1], 1.0 - a[2], g);
    return r;
  }
  if (kind == "mixture") return raw_mixture(body, spec, g);
  if (kind == "csv") return raw_csv(std::string(body), g);
  throw Error(ErrorCode::parse, "unknown measure kind '" + std::string(kind) + "'");
}

GridMeasure finish(RawMass r, const GridSpec& g, std::string_view what) {
  if (r.lost > 1e-2)
    throw Error(ErrorCode::coverage, std::string(what) + ": " + std::to_string(r.lost) +
                                         " of the mass lies outside the grid window");
  if (r.lost > 1e-6)
    warn(std::string(what) + ": clipped " + std::to_string(r.lost) +
         " of the mass outside the grid window");
  return GridMeasure::normalized(g, std::move(r.w));
}

// Sum over the infinite lattice hZ of h * N(0, t) density. Equals one up to
// exponentially small terms once sqrt(t) exceeds a few spacings.
double lattice_kernel_mass(double h, double t) {
  const double sd = std::sqrt(t);
  const auto reach = static_cast<long>(std::ceil(40.0 * sd / h)) + 1;
  double s = 0.0;
  for (long m = -reach; m <= reach; ++m)
    s += h * std::exp(log_gaussian_density(static_cast<double>(m) * h, t));
  return s;
}

std::vector<double> raw_convolution(const GridMeasure& mu, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw Error(ErrorCode::invalid_argument, "heat_convolve requires t > 0");
  const GridSpec& g = mu.grid();
  const double h = g.spacing();
  const std::size_t n = g.size();
  const double norm = lattice_kernel_mass(h, t);
  std::vector<double> kernel(n);
  for (std::size_t d = 0; d < n; ++d)
    kernel[d] = h * std::exp(log_gaussian_density(static_cast<double>(d) * h, t)) / norm;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = mu.weight(i);
    if (wi == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) out[j] += wi * kernel[i > j ? i - j : j - i];
  }
  return out;
}

// Piecewise-linear CDF with optional jumps: knots carry left and right
// limits, the function is linear from right(k) to left(k + 1) in between,
// zero before the first knot and one after the last.
struct Knot {
  double x;
  double left;
  double right;
};

class PiecewiseCdf {
 public:
  explicit PiecewiseCdf(const GridMeasure& mu) {
    const GridSpec& g = mu.grid();
    knots_.reserve(g.size() + 1);
    knots_.push_back({g.edge(0), 0.0, 0.0});
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double f = mu.cumulative(i);
      knots_.push_back({g.edge(i + 1), f, f});
    }
  }

  explicit PiecewiseCdf(const EmpiricalMeasure& mu) {
    const auto x = mu.samples();
    const double n = static_cast<double>(x.size());
    std::size_t i = 0;
    while (i < x.size()) {
      std::size_t j = i;
      while (j < x.size() && x[j] == x[i]) ++j;
      knots_.push_back({x[i], static_cast<double>(i) / n, static_cast<double>(j) / n});
      i = j;
    }
  }

  std::span<const Knot> knots() const { return knots_; }

  // Value just left (side = 0) or right (side = 1) of x.
  double eval(double x, int side) const {
    const auto it = std::lower_bound(knots_.begin(), knots_.end(), x,
                                     [](const Knot& k, double v) { return k.x < v; });
    if (it != knots_.end() && it->x == x) return side == 0 ? it->left : it->right;
    if (it == knots_.begin()) return 0.0;
    if (it == knots_.end()) return 1.0;
    const Knot& a = *(it - 1);
    const Knot& b = *it;
    const double s = (x - a.x) / (b.x - a.x);
    return a.right + s * (b.left - a.right);
  }

 private:
  std::vector<Knot> knots_;
};

std::vector<double> merged_knots(const PiecewiseCdf& a, const PiecewiseCdf& b) {
  std::vector<double> xs;
  xs.reserve(a.knots().size() + b.knots().size());
  for (const auto& k : a.knots()) xs.push_back(k.x);
  for (const auto& k : b.knots()) xs.push_back(k.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

double integrate_abs_linear(double da, double db, double width) {
  if ((da >= 0.0 && db >= 0.0) || (da <= 0.0 && db <= 0.0))
    return 0.5 * (std::abs(da) + std::abs(db)) * width;
  return 0.5 * (da * da + db * db) / (std::abs(da) + std::abs(db)) * width;
}

double w1_piecewise(const PiecewiseCdf& a, const PiecewiseCdf& b) {
  const auto xs = merged_knots(a, b);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double da = a.eval(xs[k], 1) - b.eval(xs[k], 1);
    const double db = a.eval(xs[k + 1], 0) - b.eval(xs[k + 1], 0);
    total += integrate_abs_linear(da, db, xs[k + 1] - xs[k]);
  }
  return total;
}

}  // namespace

GridMeasure parse_measure_spec(std::string_view spec, const GridSpec& grid) {
  return finish(raw_measure(spec, grid), grid, "measure '" + std::string(spec) + "'");
}

GridMeasure load_measure_csv(const std::string& path, const GridSpec& grid) {
  return finish(raw_csv(path, grid), grid, "measure file " + path);
}

double heat_convolved_mass(const GridMeasure& mu, double t) {
  const auto out = raw_convolution(mu, t);
  return std::accumulate(out.begin(), out.end(), 0.0);
}

GridMeasure heat_convolve(const GridMeasure& mu, double t) {
  RawMass r;
  r.lost = std::max(0.0, 1.0 - heat_convolved_mass(mu, t));
  // Each source node's kernel is renormalized over the grid, the same way the
  // reference coupling builds its rows, so the result is exactly the second
  // marginal of that coupling.
  const GridSpec& g = mu.grid();
  const std::size_t n = g.size();
  const double h = g.spacing();
  std::vector<double> logk(n);
  r.w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = mu.weight(i);
    if (wi == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j)
      logk[j] = log_gaussian_density(g.node(j) - g.node(i), t) + std::log(h);
    const double norm = log_sum_exp(logk);
    for (std::size_t j = 0; j < n; ++j) r.w[j] += wi * std::exp(logk[j] - norm);
  }
  return finish(std::move(r), g, "heat convolution");
}

double wasserstein1(const GridMeasure& a, const GridMeasure& b) {
  return w1_piecewise(PiecewiseCdf(a), PiecewiseCdf(b));
}
double wasserstein1(const GridMeasure& a, const EmpiricalMeasure& b) {
  return w1_piecewise(PiecewiseCdf(a), PiecewiseCdf(b));
}
double wasserstein1(const EmpiricalMeasure& a, const GridMeasure& b) {
  return w1_piecewise(PiecewiseCdf(a), PiecewiseCdf(b));
}
double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return w1_piecewise(PiecewiseCdf(a), PiecewiseCdf(b));
}

double ks_statistic(const EmpiricalMeasure& a, const GridMeasure& b) {
  const PiecewiseCdf fa(a);
  const PiecewiseCdf fb(b);
  double sup = 0.0;
  for (double x : merged_knots(fa, fb)) {
    sup = std::max(sup, std::abs(fa.eval(x, 0) - fb.eval(x, 0)));
    sup = std::max(sup, std::abs(fa.eval(x, 1) - fb.eval(x, 1)));
  }
  return std::min(sup, 1.0);
}

double quantile(const GridMeasure& mu, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::invalid_argument, "quantile level must lie in (0, 1)");
  const GridSpec& g = mu.grid();
  std::size_t k = mu.first_reaching(p);
  while (k + 1 < mu.size() && mu.weight(k) == 0.0) ++k;
  const double before = k == 0 ? 0.0 : mu.cumulative(k - 1);
  const double frac = mu.weight(k) > 0.0 ? (p - before) / mu.weight(k) : 1.0;
  return g.edge(k) + std::clamp(frac, 0.0, 1.0) * g.spacing();
}

double atomic_quantile(const GridMeasure& mu, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw Error(ErrorCode::invalid_argument, "quantile level must lie in (0, 1]");
  return mu.grid().node(mu.first_reaching(p));
}

}  // namespace mfp
