#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "moecs/numkernel.hpp"

using namespace moecs;

TEST_CASE("dot and norms") {
  const RealVec u{1, 2, 3}, v{4, -5, 6};
  CHECK(dot(u, v) == doctest::Approx(12.0));
  CHECK(norm2(RealVec{3, 4}) == doctest::Approx(5.0));
  CHECK(norm_inf(v) == 6.0);
  CHECK_THROWS_AS(dot(u, RealVec{1, 2}), DimensionError);
}

TEST_CASE("matvec and axpy") {
  const RealMat m(2, 3, {1, 2, 3, 4, 5, 6});
  const RealVec y = matvec(m, RealVec{1, 0, -1});
  CHECK(y == RealVec{-2, -2});
  CHECK(axpy(2.0, RealVec{1, 1}, RealVec{0, 3}) == RealVec{2, 5});
  CHECK_THROWS_AS(matvec(m, RealVec{1, 2}), DimensionError);
  CHECK_THROWS_AS(RealMat(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("all_finite") {
  CHECK(all_finite(RealVec{0, 1, -2}));
  CHECK_FALSE(all_finite(RealVec{0, NAN}));
  CHECK_FALSE(all_finite(RealVec{INFINITY}));
}

TEST_CASE("rng streams are reproducible and independent") {
  RngStream a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  std::vector<std::uint64_t> xa, xc, xd;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    xa.push_back(va);
    xc.push_back(c.next_u64());
    xd.push_back(d.next_u64());
  }
  CHECK(xa != xc);
  CHECK(xa != xd);
}

TEST_CASE("next_unit is in [0,1) with mean near one half") {
  RngStream r(7);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(s / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("next_index covers the range uniformly") {
  RngStream r(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.next_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(r.next_index(0), ParameterError);
}

TEST_CASE("draw_uniform and draw_normal") {
  RngStream r(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = draw_normal(r, 2.0, 3.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.02));
  for (int i = 0; i < 1000; ++i) {
    const double u = draw_uniform(r, -2.0, 5.0);
    REQUIRE(u >= -2.0);
    REQUIRE(u < 5.0);
  }
  CHECK_THROWS_AS(draw_uniform(r, 1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(draw_normal(r, 0.0, 0.0), ParameterError);
}

TEST_CASE("shuffle is a permutation and deterministic") {
  std::vector<int> v(50), w;
  std::iota(v.begin(), v.end(), 0);
  w = v;
  RngStream r1(5), r2(5);
  shuffle(v, r1);
  shuffle(w, r2);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("derive_seed separates keys") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 4; ++a)
    for (std::uint64_t b = 0; b < 10; ++b)
      for (std::uint64_t c = 0; c < 3; ++c) seen.insert(derive_seed(0, {a, b, c}));
  CHECK(seen.size() == 120);
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("split streams differ from the parent") {
  RngStream r(9, 4);
  RngStream c1 = r.split(1), c2 = r.split(2);
  CHECK(c1.next_u64() != c2.next_u64());
}
