#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gpr {

// Root of a reproducible random stream: every draw is a pure function of
// (seed, stream, key, counter).
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  // Derived independent stream, e.g. one per gate or per generator.
  RngSeed substream(std::uint64_t id) const;
};

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-based uniform random bit generator. Each (seed, key) pair names an
// independent sequence; the position within it is an explicit counter, so the
// draws do not depend on which thread evaluates them or in what order keys are
// visited. Satisfies std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(RngSeed seed, std::uint64_t key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1).
  double uniform();

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_key_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int cached_ = 0;
};

}  // namespace gpr
