#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "orientpipe/angles.hpp"

using namespace orientpipe;
using namespace orientpipe::angles;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Direct evaluation of the soft-label definition in long double.
std::vector<long double> oracle_soft_labels(long double alpha, int k) {
  const long double width = 360.0L / k;
  std::vector<long double> e(static_cast<std::size_t>(k));
  long double sum = 0.0L;
  for (int j = 0; j < k; ++j) {
    const long double r = width * j + width / 2.0L;
    long double d = std::fmod(std::fabs(alpha - r), 360.0L);
    d = std::min(d, 360.0L - d);
    e[static_cast<std::size_t>(j)] = std::exp(-d * d / 90.0L);
    sum += e[static_cast<std::size_t>(j)];
  }
  for (auto& v : e) v /= sum;
  return e;
}

}  // namespace

TEST_CASE("normalize maps into [0, 360)") {
  CHECK(normalize(0.0) == 0.0);
  CHECK(normalize(360.0) == 0.0);
  CHECK(normalize(-10.0) == 350.0);
  CHECK(normalize(725.0) == 5.0);
  CHECK(normalize(-1e-20) < 360.0);
  CHECK(normalize_signed(190.0) == -170.0);
  CHECK(round_for_output(359.9999999) == 0.0);
}

TEST_CASE("BinSet geometry") {
  const BinSet b12(12);
  CHECK(b12.width() == 30.0);
  CHECK(b12.center(1) == 15.0);
  CHECK(b12.center(12) == 345.0);
  const BinSet b24(24);
  CHECK(b24.width() == 15.0);
  for (std::size_t j = 1; j < b24.centers().size(); ++j) CHECK(b24.centers()[j] > b24.centers()[j - 1]);
  CHECK(b24.width() * b24.k() == 360.0);
  CHECK_THROWS_AS(BinSet(1), Error);
}

TEST_CASE("cyclic_distance examples") {
  CHECK(cyclic_distance(45, 45) == 0.0);
  CHECK_THAT(cyclic_distance(350, 10), WithinRel(400.0 / 90.0, 1e-15));
  CHECK(cyclic_distance(0, 180) == 360.0);
}

TEST_CASE("cyclic_distance properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-720.0, 720.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng);
    const double d = cyclic_distance(a, b);
    CHECK_THAT(d, WithinAbs(cyclic_distance(b, a), 1e-9));
    CHECK_THAT(d, WithinAbs(cyclic_distance(a + 360.0, b - 720.0), 1e-8));
    CHECK(d >= 0.0);
    CHECK(d <= 360.0);
  }
  CHECK(cyclic_distance(30.0, 390.0) == 0.0);
}

TEST_CASE("soft_labels examples") {
  const BinSet bins(12);
  SECTION("bin centre is the unique peak with symmetric neighbours") {
    const auto y = soft_labels(15.0, bins);
    for (std::size_t j = 1; j < 12; ++j) CHECK(y[0] > y[j]);
    CHECK_THAT(y[1], WithinAbs(y[11], 1e-15));
  }
  SECTION("alpha = 31 leans to bin 2") {
    const auto y = soft_labels(31.0, bins);
    const auto o = oracle_soft_labels(31.0L, 12);
    for (std::size_t j = 0; j < 12; ++j) CHECK_THAT(y[j], WithinAbs(static_cast<double>(o[j]), 1e-14));
    CHECK_THAT(y[1], WithinAbs(0.6607563667758457, 1e-12));
    CHECK_THAT(y[0], WithinAbs(0.33924363021249726, 1e-12));
    double rest = 0.0;
    for (std::size_t j = 2; j < 12; ++j) rest += y[j];
    CHECK(rest < 0.01);
  }
  SECTION("boundary splits evenly") {
    const auto y = soft_labels(30.0, bins);
    CHECK_THAT(y[0], WithinAbs(y[1], 1e-12));
  }
}

TEST_CASE("soft_labels match the direct evaluation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  for (int k : {12, 24, 7}) {
    const BinSet bins(k);
    for (int i = 0; i < 500; ++i) {
      const double a = u(rng);
      const auto y = soft_labels(a, bins);
      const auto o = oracle_soft_labels(a, k);
      for (std::size_t j = 0; j < y.size(); ++j) REQUIRE_THAT(y[j], WithinAbs(static_cast<double>(o[j]), 1e-13));
    }
  }
}

TEST_CASE("soft_labels shift equivariance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  std::uniform_int_distribution<int> shift(-30, 30);
  const BinSet bins(12);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng);
    const int m = shift(rng);
    const auto y = soft_labels(a, bins);
    const auto z = soft_labels(a + bins.width() * m, bins);
    for (int j = 0; j < 12; ++j) {
      const int src = ((j - m) % 12 + 12) % 12;
      REQUIRE_THAT(z[static_cast<std::size_t>(j)], WithinAbs(y[static_cast<std::size_t>(src)], 1e-12));
    }
  }
}

TEST_CASE("Distribution validation") {
  CHECK_THROWS_AS(SoftLabels(std::vector<double>{0.5, 0.4}), Error);
  CHECK_THROWS_AS(SoftLabels(std::vector<double>{}), Error);
  CHECK_NOTHROW(SoftLabels(std::vector<double>{1.0, 0.0}));
  CHECK_THROWS_AS(ProbVector(std::vector<double>{1.0, 0.0}), Error);
  CHECK_THROWS_AS(ProbVector(std::vector<double>{1.5, -0.5}), Error);
}

TEST_CASE("cross entropy") {
  const BinSet bins(12);
  const std::vector<double> uniform(12, 1.0 / 12.0);
  CHECK_THAT(cyclic_cross_entropy(ProbVector(uniform), one_hot(4, bins)), WithinRel(std::log(12.0), 1e-14));
  const auto y = soft_labels(31.0, bins);
  const std::vector<double> yv(y.values().begin(), y.values().end());
  CHECK_THAT(cross_entropy(yv, yv), WithinAbs(entropy(y), 1e-15));
  CHECK_THROWS_AS(cross_entropy(std::vector<double>(3, 1.0 / 3), yv), Error);
}

TEST_CASE("Gibbs inequality on random instances") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  const BinSet bins(12);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> logits(12);
    for (auto& v : logits) v = n(rng);
    const ProbVector x(softmax(logits));
    const auto y = soft_labels(u(rng), bins);
    CHECK(cyclic_cross_entropy(x, y) >= entropy(y) - 1e-12);
  }
}

TEST_CASE("gradient examples") {
  const BinSet bins(12);
  const std::vector<double> flat(12, 0.3);
  const auto g0 = cyclic_cross_entropy_grad(flat, SoftLabels(std::vector<double>(12, 1.0 / 12.0)));
  for (double v : g0) CHECK(std::fabs(v) < 1e-15);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> logits(12);
  for (auto& v : logits) v = n(rng);
  const auto g = cyclic_cross_entropy_grad(logits, soft_labels(200.0, bins));
  double sum = 0.0;
  for (double v : g) sum += v;
  CHECK(std::fabs(sum) < 1e-15);
  CHECK_THROWS_AS(cyclic_cross_entropy_grad(std::vector<double>(5, 0.0), soft_labels(1.0, bins)), Error);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  for (int k : {12, 24}) {
    const BinSet bins(k);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> z(static_cast<std::size_t>(k));
      for (auto& v : z) v = n(rng);
      const auto y = soft_labels(u(rng), bins);
      const auto g = cyclic_cross_entropy_grad(z, y);
      auto loss = [&](const std::vector<double>& l) { return cross_entropy(softmax(l), y.values()); };
      for (std::size_t j = 0; j < z.size(); ++j) {
        auto zp = z, zm = z;
        zp[j] += 1e-5;
        zm[j] -= 1e-5;
        const double fd = (loss(zp) - loss(zm)) / 2e-5;
        REQUIRE(std::fabs(fd - g[j]) <= 1e-6 * std::max(std::fabs(g[j]), 1e-3));
      }
    }
  }
}

TEST_CASE("bin_of") {
  const BinSet b12(12), b24(24);
  CHECK(bin_of(0.0, b12) == 1);
  CHECK(bin_of(359.9, b12) == 12);
  CHECK(bin_of(30.0, b12) == 2);
  CHECK(bin_of(45.0, b24) == 4);
  CHECK(bin_of(-15.0, b12) == 12);
  CHECK(bin_of(360.0, b12) == 1);
  for (int j = 1; j <= 12; ++j) CHECK(bin_of(decode_angle(one_hot(j, b12), b12), b12) == j);
}

TEST_CASE("decode_angle") {
  const BinSet bins(12);
  CHECK(decode_angle(one_hot(3, bins), bins) == 75.0);
  const std::vector<double> uniform(12, 1.0 / 12.0);
  CHECK_THROWS_AS(decode_angle(uniform, bins, DecodeMode::CircularMean), Error);
  CHECK(decode_angle(uniform, bins) == 15.0);
  const auto y = soft_labels(31.0, bins);
  const double cm = decode_angle(y, bins, DecodeMode::CircularMean);
  CHECK(arc_length(cm, 31.0) < arc_length(decode_angle(y, bins), 31.0));
}

TEST_CASE("noiseless decoding error is at most half a bin") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 360.0);
  for (int k : {12, 24}) {
    const BinSet bins(k);
    for (int i = 0; i < 20000; ++i) {
      const double a = u(rng);
      const double d = decode_angle(one_hot(bin_of(a, bins), bins), bins);
      REQUIRE(arc_length(d, a) <= bins.width() / 2.0 + 1e-12);
    }
  }
}

TEST_CASE("circular_interpolate") {
  CHECK_THAT(circular_interpolate(350, 10, 0.5).degrees, WithinAbs(0.0, 1e-12));
  CHECK(circular_interpolate(90, 90, 0.3).degrees == 90.0);
  CHECK_THAT(circular_interpolate(0, 90, 0.25).degrees, WithinAbs(22.5, 1e-12));
  CHECK(circular_interpolate(10, 200, 0.0).degrees == 10.0);
  CHECK(circular_interpolate(10, 200, 1.0).degrees == 200.0);
  const auto anti = circular_interpolate(0, 180, 0.5);
  CHECK(anti.antipodal);
  CHECK_THAT(anti.degrees, WithinAbs(90.0, 1e-12));
  CHECK_FALSE(circular_interpolate(0, 179, 0.5).antipodal);
  CHECK_THROWS_AS(circular_interpolate(0, 10, 1.5), Error);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 360.0), t(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double a = u(rng), b = u(rng), s = t(rng);
    const double m = circular_interpolate(a, b, s).degrees;
    REQUIRE(m >= 0.0);
    REQUIRE(m < 360.0);
    REQUIRE_THAT(arc_length(a, m) + arc_length(m, b), WithinAbs(arc_length(a, b), 1e-9));
  }
}

TEST_CASE("euler_to_heading") {
  CHECK(euler_to_heading({0, 0, 0}) == 0.0);
  CHECK_THAT(euler_to_heading({0, 0, 90}), WithinAbs(90.0, 1e-12));
  CHECK_THAT(euler_to_heading({0, 45, 30}), WithinAbs(30.0, 1e-12));
  CHECK_THAT(euler_to_heading({25, 10, -45}), WithinAbs(315.0, 1e-12));
  CHECK_THROWS_AS(euler_to_heading({0, 90, 0}), Error);
  CHECK_THROWS_AS(EulerOrientation(std::nan(""), 0, 0), Error);
  const EulerOrientation e(0, 0, 270);
  CHECK(e.yaw_z == -90.0);
}
