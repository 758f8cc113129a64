#include <doctest.h>

#include <cmath>
#include <set>

#include "mckv/rng.hpp"

using namespace mckv;

TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("unit mapping stays inside the open interval") {
  CHECK(bits_to_open_unit(0) > 0.0);
  CHECK(bits_to_open_unit(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("increments are pure functions of their inputs") {
  const NoiseStream s{42, 7};
  CHECK(sample_increment(s, 100, 3) == sample_increment(s, 100, 3));
  CHECK(sample_increment(s, 100, 3) != sample_increment(s, 101, 3));
  CHECK(sample_increment(s, 100, 3) != sample_increment(NoiseStream{42, 8}, 100, 3));
  CHECK(sample_increment(s, 100, 3) != sample_increment(NoiseStream{43, 7}, 100, 3));
  // negative steps are valid counters too
  CHECK(sample_increment(s, -5, 1) == sample_increment(s, -5, 1));
  CHECK(sample_increment(s, -5, 1) != sample_increment(s, 5, 1));
}

TEST_CASE("component j of a wider increment matches a narrower one") {
  const NoiseStream s{1, 2};
  const auto a = sample_increment(s, 9, 2);
  const auto b = sample_increment(s, 9, 5);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
}

TEST_CASE("normal moments") {
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = sample_increment(NoiseStream{5, static_cast<std::uint32_t>(i)}, 3, 1)[0];
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(std::abs(m2 - 1.0) < 0.015);
  CHECK(std::abs(m4 - 3.0) < 0.08);
}

TEST_CASE("no repeated draws across streams and steps") {
  std::set<double> seen;
  for (std::uint32_t s = 0; s < 100; ++s)
    for (int k = 0; k < 100; ++k) seen.insert(sample_increment(NoiseStream{0, s}, k, 1)[0]);
  CHECK(seen.size() == 10000);
}
