#include "mfplan/random.hpp"

#include <cmath>
#include <numbers>

namespace mfp {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> block(std::uint64_t seed, Stream stream,
                                   std::uint64_t a, std::uint64_t b) {
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                         static_cast<std::uint32_t>(seed >> 32)};
  const std::uint32_t tag = static_cast<std::uint32_t>(stream) << 24;
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
      static_cast<std::uint32_t>(a),
      static_cast<std::uint32_t>(a >> 32) ^ tag};
  return philox4x32(key, ctr);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;  // 53 bits
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> ctr) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

UniformPair uniform_pair(std::uint64_t seed, Stream stream, std::uint64_t a,
                         std::uint64_t b) {
  const auto r = block(seed, stream, a, b);
  return {1.0 - to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

double standard_normal(std::uint64_t seed, Stream stream, std::uint64_t path,
                       std::uint64_t step) {
  const auto [u1, u2] = uniform_pair(seed, stream, path, step);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t random_bits(std::uint64_t seed, Stream stream,
                          std::uint64_t index) {
  const auto r = block(seed, stream, index, 0);
  return (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
}

}  // namespace mfp
