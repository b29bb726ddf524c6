#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"

#include "bdsde/noise.hpp"

using namespace bdsde;

TEST_CASE("same seed gives identical arrays") {
  const TimeGrid g(1.0, 8);
  const BundleShape s{2, 1, 3, 5};
  const auto a = generate_paths(g, s, 42);
  const auto b = generate_paths(g, s, 42);
  REQUIRE(a.dw().size() == b.dw().size());
  CHECK(std::memcmp(a.dw().data(), b.dw().data(), a.dw().size_bytes()) == 0);
  CHECK(std::memcmp(a.db().data(), b.db().data(), a.db().size_bytes()) == 0);
  const auto c = generate_paths(g, s, 43);
  CHECK(std::memcmp(a.dw().data(), c.dw().data(), a.dw().size_bytes()) != 0);
}

TEST_CASE("thread count does not change the bundle") {
  const TimeGrid g(1.0, 16);
  const BundleShape s{1, 2, 4, 100};
  NoiseOptions one, four;
  four.threads = 4;
  const auto a = generate_paths(g, s, 9, one);
  const auto b = generate_paths(g, s, 9, four);
  CHECK(std::memcmp(a.dw().data(), b.dw().data(), a.dw().size_bytes()) == 0);
  CHECK(std::memcmp(a.db().data(), b.db().data(), a.db().size_bytes()) == 0);
}

TEST_CASE("single streams match the bundle slices") {
  const TimeGrid g(2.0, 7);
  const BundleShape s{2, 3, 3, 4};
  const auto bundle = generate_paths(g, s, 5);
  for (int b = 0; b < s.outer; ++b) {
    const auto ob = outer_stream(g, s.l, 5, b);
    const auto slice_b = bundle.db_path(b);
    REQUIRE(ob.size() == slice_b.size());
    CHECK(std::memcmp(ob.data(), slice_b.data(), slice_b.size_bytes()) == 0);
    for (int w = 0; w < s.inner; ++w) {
      const auto iw = inner_stream(g, s.d, 5, b, w);
      const auto slice = bundle.dw_path(b, w);
      REQUIRE(iw.size() == slice.size());
      CHECK(std::memcmp(iw.data(), slice.data(), slice.size_bytes()) == 0);
    }
  }
}

TEST_CASE("variance of W_T at N=1") {
  const double T = 1.0;
  const int M = 100000;
  const auto bundle = generate_paths(TimeGrid(T, 1), BundleShape{1, 1, 1, M}, 2024);
  double s2 = 0.0, s4 = 0.0;
  for (int w = 0; w < M; ++w) {
    const double x = bundle.dw_at(0, w, 0, 0);
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double var = s2 / M;
  const double se = std::sqrt((s4 / M - var * var) / M);
  CHECK(std::abs(var - T) <= 3.0 * se);
}

TEST_CASE("W and B increments are uncorrelated") {
  const int M = 100000;
  const auto bundle = generate_paths(TimeGrid(1.0, 2), BundleShape{1, 1, M, 1}, 77);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
      for (int b = 0; b < M; ++b) {
        const double x = bundle.dw_at(b, 0, i, 0), y = bundle.db_at(b, j, 0);
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
      }
      const double cov = sxy / M - (sx / M) * (sy / M);
      const double rho = cov / std::sqrt((sxx / M - sx * sx / M / M) * (syy / M - sy * sy / M / M));
      CHECK(std::abs(rho) <= 3.0 / std::sqrt(static_cast<double>(M)));
    }
  }
}

TEST_CASE("increments are Gaussian (Jarque-Bera)") {
  const int M = 50000;
  const auto bundle = generate_paths(TimeGrid(1.0, 4), BundleShape{1, 1, 1, M / 4}, 3);
  const auto x = bundle.dw();
  double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d; m3 += d * d * d; m4 += d * d * d * d;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n; m3 /= n; m4 /= n;
  const double skew = m3 / std::pow(m2, 1.5), kurt = m4 / (m2 * m2);
  const double jb = n / 6.0 * (skew * skew + (kurt - 3.0) * (kurt - 3.0) / 4.0);
  CHECK(jb < 13.8);  // chi-square(2) 0.999 quantile
  CHECK(m2 == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("cumulate") {
  const TimeGrid g(1.0, 4);
  PathBundle bundle(g, BundleShape{1, 1, 1, 1}, 0);
  SUBCASE("zero increments") {
    const auto pv = cumulate(bundle);
    for (double v : pv.w) CHECK(v == 0.0);
    for (double v : pv.b_tail) CHECK(v == 0.0);
  }
  SUBCASE("single increment at node 0") {
    bundle.dw_mut()[0] = 0.3;
    const auto pv = cumulate(bundle);
    CHECK(pv.w_at(0, 0, 0, 0) == 0.0);
    for (int i = 1; i <= 4; ++i) CHECK(pv.w_at(0, 0, i, 0) == 0.3);
  }
  SUBCASE("B tail at node 0 is B_T") {
    const double inc[] = {0.1, -0.25, 0.5, 0.125};
    for (int i = 0; i < 4; ++i) bundle.db_mut()[i] = inc[i];
    const auto pv = cumulate(bundle);
    CHECK(pv.b_terminal(0, 0) == ((0.125 + 0.5) + -0.25) + 0.1);
    CHECK(pv.tail_at(0, 4, 0) == 0.0);
    CHECK(pv.tail_at(0, 3, 0) == 0.125);
  }
}

TEST_CASE("bundle binary round trip") {
  const auto a = generate_paths(TimeGrid(0.5, 5), BundleShape{2, 2, 2, 3}, 99);
  std::stringstream ss;
  write_bundle(ss, a);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 8) == "BDSDEPB1");
  const auto b = read_bundle(ss);
  CHECK(b.grid() == a.grid());
  CHECK(b.seed() == 99);
  CHECK(b.shape().inner == 3);
  CHECK(std::memcmp(a.dw().data(), b.dw().data(), a.dw().size_bytes()) == 0);
  CHECK(std::memcmp(a.db().data(), b.db().data(), a.db().size_bytes()) == 0);

  std::stringstream bad("NOTABUNDLE");
  CHECK_THROWS(read_bundle(bad));
}

TEST_CASE("memory budget") {
  NoiseOptions tiny;
  tiny.memory_budget_bytes = 1024;
  try {
    generate_paths(TimeGrid(1.0, 100), BundleShape{1, 1, 10, 1000}, 1, tiny);
    FAIL("expected ResourceError");
  } catch (const ResourceError& e) {
    CHECK(e.required_bytes() > 1024);
  }
}
