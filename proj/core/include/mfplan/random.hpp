#pragma once

#include <array>
#include <cstdint>

namespace mfp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw
/// is a pure function of (key, counter), which is what makes path ensembles
/// reproducible under any parallel schedule.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> ctr);

enum class Stream : std::uint32_t {
  brownian = 0,
  permutation = 1,
  auxiliary = 2,
};

struct UniformPair {
  double u1;  // in (0, 1]
  double u2;  // in [0, 1)
};

UniformPair uniform_pair(std::uint64_t seed, Stream stream, std::uint64_t a,
                         std::uint64_t b);

/// Standard normal variate keyed by (seed, stream, path, step).
double standard_normal(std::uint64_t seed, Stream stream, std::uint64_t path,
                       std::uint64_t step);

/// 64-bit hash of (seed, stream, index); used for seeded permutations.
std::uint64_t random_bits(std::uint64_t seed, Stream stream,
                          std::uint64_t index);

}  // namespace mfp
