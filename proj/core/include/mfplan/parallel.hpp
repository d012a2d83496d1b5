#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace mfp {

/// Caps the number of worker threads used by parallel stages. Zero restores
/// the default (MFP_THREADS, else the hardware concurrency).
void set_worker_count(std::size_t n);
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each.
/// Chunk boundaries depend on n only, never on the worker count, so every
/// index is processed by identical code regardless of scheduling.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values);

struct MeanWithError {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

MeanWithError mean_with_error(std::span<const double> values);

}  // namespace mfp
