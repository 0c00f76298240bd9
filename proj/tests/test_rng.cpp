#include <doctest.h>

#include <cmath>

#include "crtgee/rng.hpp"

using crtgee::Rng;

TEST_CASE("substreams are deterministic and distinct") {
  Rng a = Rng::substream(42, 7, 3);
  Rng b = Rng::substream(42, 7, 3);
  Rng c = Rng::substream(42, 7, 4);
  Rng d = Rng::substream(42, 8, 3);
  bool same_ab = true, same_ac = true, same_ad = true;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    same_ab &= va == b.next_u64();
    same_ac &= va == c.next_u64();
    same_ad &= va == d.next_u64();
  }
  CHECK(same_ab);
  CHECK_FALSE(same_ac);
  CHECK_FALSE(same_ad);
}

TEST_CASE("uniform stays in [0,1) with the right first moments") {
  Rng rng(123);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n - (sum / n) * (sum / n) ==
        doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal moments") {
  Rng rng(99);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sum4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("poisson moments and support") {
  Rng rng(7);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  long min_draw = 1000;
  for (int i = 0; i < n; ++i) {
    const long k = rng.poisson(30.0);
    min_draw = std::min(min_draw, k);
    sum += static_cast<double>(k);
    sum2 += static_cast<double>(k) * static_cast<double>(k);
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(30.0).epsilon(0.01));
  CHECK(sum2 / n - mean * mean == doctest::Approx(30.0).epsilon(0.05));
  CHECK(min_draw >= 0);
}

TEST_CASE("poisson rejects out-of-range means") {
  Rng rng(1);
  CHECK_THROWS_AS(rng.poisson(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.poisson(1000.0), std::invalid_argument);
}
