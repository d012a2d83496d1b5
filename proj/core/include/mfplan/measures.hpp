#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfp {

/// Uniform 1D grid: node i sits at lo + i * (hi - lo) / (n - 1).
class GridSpec {
 public:
  GridSpec(double lo, double hi, std::size_t n);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const { return n_; }
  double spacing() const { return (hi_ - lo_) / static_cast<double>(n_ - 1); }
  double node(std::size_t i) const;

  /// Nearest node index, clamped to the grid.
  std::size_t nearest(double x) const;

  /// Cell edges: node i owns [edge(i), edge(i + 1)]; k runs over 0..n.
  double edge(std::size_t k) const;

  /// True when x lies in the union of the node cells.
  bool in_hull(double x) const {
    const double h = spacing();
    return x >= lo_ - 0.5 * h && x <= hi_ + 0.5 * h;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  double lo_;
  double hi_;
  std::size_t n_;
};

/// Probability measure stored as mass per grid node.
///
/// For distribution functions the mass of node i is read as spread
/// uniformly over its cell, which gives a continuous piecewise-linear CDF.
/// Sampling helpers that need atoms (stratified initial points, the Bass
/// quantile map) use atomic_quantile instead.
class GridMeasure {
 public:
  /// Weights must be non-negative and sum to one within 1e-12.
  GridMeasure(GridSpec grid, std::vector<double> weights);

  /// Scales arbitrary non-negative weights to unit mass.
  static GridMeasure normalized(GridSpec grid, std::vector<double> weights);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> weights() const { return w_; }
  double weight(std::size_t i) const { return w_[i]; }
  std::size_t size() const { return w_.size(); }

  /// Cumulative mass up to and including node i.
  double cumulative(std::size_t i) const { return cum_[i]; }

  /// Smallest node index whose cumulative mass reaches p.
  std::size_t first_reaching(double p) const;

  double cdf(double x) const;
  double mean() const;
  double second_moment() const;
  double variance() const;

 private:
  GridSpec grid_;
  std::vector<double> w_;
  std::vector<double> cum_;
};

/// Sample-based measure; samples are kept sorted.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::vector<double> samples);

  std::span<const double> samples() const { return x_; }
  std::size_t size() const { return x_.size(); }
  double cdf(double x) const;
  double mean() const;
  double second_moment() const;

 private:
  std::vector<double> x_;
};

/// Parses one of
///   gaussian:mean,std   uniform:a,b   point:x   twopoint:x1,x2,p
///   mixture:(spec;weight)(spec;weight)...   csv:path
/// and discretizes it on the grid. Mass falling outside the grid hull is
/// clipped with a warning above 1e-6 and rejected above 1e-2.
GridMeasure parse_measure_spec(std::string_view spec, const GridSpec& grid);

/// Reads the two-column `x,weight` CSV format (header required, x sorted).
GridMeasure load_measure_csv(const std::string& path, const GridSpec& grid);

/// Convolution with N(0, t) on the same grid; every node's kernel is
/// renormalized over the grid.
GridMeasure heat_convolve(const GridMeasure& mu, double t);

/// Total mass of the discrete convolution before renormalization.
double heat_convolved_mass(const GridMeasure& mu, double t);

double wasserstein1(const GridMeasure& a, const GridMeasure& b);
double wasserstein1(const GridMeasure& a, const EmpiricalMeasure& b);
double wasserstein1(const EmpiricalMeasure& a, const GridMeasure& b);
double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Kolmogorov-Smirnov distance between the empirical CDF of a and the CDF of b.
double ks_statistic(const EmpiricalMeasure& a, const GridMeasure& b);

/// Left-continuous inverse of the piecewise-linear CDF; p in (0, 1).
double quantile(const GridMeasure& mu, double p);

/// Left-continuous inverse of the atomic CDF: always returns a node.
double atomic_quantile(const GridMeasure& mu, double p);

}  // namespace mfp
