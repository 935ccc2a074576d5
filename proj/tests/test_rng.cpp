#include <cmath>
#include <vector>

#include "doctest.h"
#include "ngcg/rng.hpp"

using namespace ngcg;

TEST_CASE("rng determinism and stream independence") {
  Rng a = Rng::derive(42, kTagParams, 7);
  Rng b = Rng::derive(42, kTagParams, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::derive(42, kTagParams, 8);
  Rng d = Rng::derive(42, kTagInit, 7);
  Rng e = Rng::derive(43, kTagParams, 7);
  Rng base = Rng::derive(42, kTagParams, 7);
  CHECK(base.next_u64() != c.next_u64());
  CHECK(Rng::derive(42, kTagParams, 7).next_u64() != d.next_u64());
  CHECK(Rng::derive(42, kTagParams, 7).next_u64() != e.next_u64());
}

TEST_CASE("uniform stays in range") {
  Rng rng(123);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("normal moments") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(9);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(v);
  std::vector<bool> seen(50, false);
  for (int x : v) seen[x] = true;
  for (bool s : seen) CHECK(s);
}
