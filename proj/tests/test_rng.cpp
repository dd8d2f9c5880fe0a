#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gpr/rng.hpp"

using namespace gpr;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5U, 0xe169c58dU, 0xbc57ac4cU, 0x9b00dbd8U});
  CHECK(philox4x32({0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU}, {0xffffffffU, 0xffffffffU}) ==
        A4{0x408f276dU, 0x41c83b0eU, 0xa20bc7c6U, 0x6d5451fdU});
  CHECK(philox4x32({0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U}, {0xa4093822U, 0x299f31d0U}) ==
        A4{0xd16cfe09U, 0x94fdccebU, 0x5001e420U, 0x24126ea1U});
}

TEST_CASE("streams are reproducible") {
  const RngSeed s{42, 7};
  CounterRng a(s, 3), b(s, 3);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  CounterRng c(s, 4), d(s.substream(1), 3), e(RngSeed{43, 7}, 3);
  CounterRng ref(s, 3);
  int same_c = 0, same_d = 0, same_e = 0;
  for (int i = 0; i < 100; ++i) {
    const auto r = ref();
    same_c += c() == r;
    same_d += d() == r;
    same_e += e() == r;
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
  CHECK(same_e == 0);
  CHECK(s.substream(1).stream != s.substream(2).stream);
  CHECK(s.substream(1).stream == RngSeed{42, 7}.substream(1).stream);
}

TEST_CASE("uniform moments") {
  CounterRng r(RngSeed{1, 0}, 0);
  const int n = 200000;
  double m = 0.0, m2 = 0.0, lo = 1.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    m += u;
    m2 += u * u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  m /= n;
  m2 /= n;
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(m - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(m2 - m * m - 1.0 / 12.0) < 0.002);
}

TEST_CASE("distinct streams are uncorrelated") {
  // lag-0 cross correlation and lag-1 serial correlation of uniform draws
  const int n = 100000;
  CounterRng a(RngSeed{5, 0}.substream(1), 0), b(RngSeed{5, 0}.substream(2), 0);
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = a.uniform() - 0.5;
    y[i] = b.uniform() - 0.5;
  }
  double cross = 0.0, serial = 0.0;
  for (int i = 0; i < n; ++i) {
    cross += x[i] * y[i];
    if (i + 1 < n) serial += x[i] * x[i + 1];
  }
  const double var = 1.0 / 12.0;
  CHECK(std::abs(cross / n / var) < 5.0 / std::sqrt(n));
  CHECK(std::abs(serial / (n - 1) / var) < 5.0 / std::sqrt(n));
}

TEST_CASE("works with std distributions") {
  CounterRng r(RngSeed{9, 9}, 1);
  std::poisson_distribution<long> p(3.0);
  double m = 0.0;
  for (int i = 0; i < 20000; ++i) m += static_cast<double>(p(r));
  CHECK(m / 20000 == doctest::Approx(3.0).epsilon(0.03));
}
