#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "chebrisk/distmoments.hpp"
#include "chebrisk/error.hpp"
#include "chebrisk/mcoracle.hpp"

using namespace chebrisk;

namespace {

const double kR2 = std::sqrt(2.0);

// E[X^k] for X = a + (b - a) U, U ~ Beta(alpha, beta), in 50 digits so the
// alternating binomial sum does not lose accuracy.
double beta_affine_moment_mp(const Beta& d, int k) {
  using F = boost::multiprecision::cpp_bin_float_50;
  std::vector<F> base(k + 1);
  base[0] = 1;
  for (int j = 1; j <= k; ++j) base[j] = base[j - 1] * (F(d.alpha) + j - 1) / (F(d.alpha) + F(d.beta) + j - 1);
  F sum = 0, binom = 1;
  const F a = d.a, w = F(d.b) - F(d.a);
  for (int j = 0; j <= k; ++j) {
    sum += binom * pow(a, k - j) * pow(w, j) * base[j];
    binom = binom * (k - j) / (j + 1);
  }
  return static_cast<double>(sum);
}

double exact_moment(const Marginal& m, int k) {
  if (const auto* b = std::get_if<Beta>(&m)) return beta_affine_moment_mp(*b, k);
  return raw_moment(m, k);
}

std::vector<Marginal> zoo() {
  return {Uniform{-0.5, 0.5},  Uniform{-0.8, -0.5}, Uniform{0.0, 0.1},   Uniform{-1.0, 1.0},
          Beta{3 - kR2, 3 + kR2, 0.0, 1.0}, Beta{4, 4, 0.0, 1.0}, Beta{0.5, 2.0, -1.0, 0.2},
          Beta{2, 3, -0.9, -0.1}, PointMass{0.3},      PointMass{-1.0}};
}

}  // namespace

TEST_CASE("raw_moment examples") {
  CHECK(raw_moment(Uniform{-0.5, 0.5}, 1) == 0.0);
  CHECK(raw_moment(Uniform{-0.5, 0.5}, 2) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(raw_moment(Beta{3 - kR2, 3 + kR2}, 1) == doctest::Approx((3 - kR2) / 6).epsilon(1e-14));
  CHECK(raw_moment(PointMass{0.3}, 3) == doctest::Approx(0.027).epsilon(1e-14));
  for (const auto& m : zoo()) CHECK(raw_moment(m, 0) == 1.0);
}

TEST_CASE("uniform moments match the closed form") {
  const Uniform u{-0.8, -0.5};
  for (int k = 0; k <= 40; ++k) {
    const double want = (std::pow(u.b, k + 1) - std::pow(u.a, k + 1)) / ((k + 1) * (u.b - u.a));
    CHECK(raw_moment(u, k) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("beta moments match the gamma-function formula") {
  for (auto [a, b] : {std::pair{3 - kR2, 3 + kR2}, std::pair{4.0, 4.0}, std::pair{0.5, 2.0}}) {
    const Beta d{a, b, 0.0, 1.0};
    for (int k = 0; k <= 60; ++k) {
      const double want = boost::math::beta(a + k, b) / boost::math::beta(a, b);
      CHECK(std::abs(raw_moment(d, k) - want) <= 1e-10 * want);
    }
  }
}

TEST_CASE("affine_moments examples") {
  const std::vector<double> base = raw_moments(Beta{2, 5}, 10);
  const std::vector<double> same = affine_moments(base, 0.0, 1.0);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK(same[k] == doctest::Approx(base[k]).epsilon(1e-15));

  const std::vector<double> point0 = raw_moments(PointMass{0.0}, 8);
  const std::vector<double> shifted = affine_moments(point0, 0.3, 0.9);
  for (int k = 0; k <= 8; ++k) CHECK(shifted[k] == doctest::Approx(std::pow(0.3, k)).epsilon(1e-14));

  const std::vector<double> unit = raw_moments(Uniform{0.0, 1.0}, 20);
  const std::vector<double> tenth = affine_moments(unit, 0.0, 0.1);
  for (int k = 0; k <= 20; ++k) {
    CHECK(std::abs(tenth[k] - std::pow(0.1, k) / (k + 1)) < 1e-12);
    CHECK(std::abs(tenth[k] - raw_moment(Uniform{0.0, 0.1}, k)) < 1e-12);
  }
}

TEST_CASE("affine beta moments against a multiprecision oracle") {
  for (const Beta& d : {Beta{0.5, 2.0, -1.0, 0.2}, Beta{4, 4, 0.0, 1.0}, Beta{2, 3, -0.9, -0.1}, Beta{1.5, 0.7, 0.2, 0.9}}) {
    const std::vector<double> v = raw_moments(d, 60);
    for (int k = 0; k <= 60; ++k) {
      const double want = beta_affine_moment_mp(d, k);
      CHECK(std::abs(v[k] - want) <= 1e-13 + 1e-11 * std::abs(want));
    }
  }
}

TEST_CASE("moments are bounded and even moments nonnegative") {
  for (const auto& m : zoo()) {
    const std::vector<double> v = raw_moments(m, 60);
    for (int k = 0; k <= 60; ++k) {
      CHECK(std::abs(v[k]) <= 1.0 + 1e-15);
      if (k % 2 == 0) CHECK(v[k] >= 0.0);
    }
  }
}

TEST_CASE("raw moments agree with sample moments") {
  Rng rng(99);
  const int n = 1'000'000;
  for (const auto& m : zoo()) {
    std::vector<double> sum(9, 0.0), sum2(9, 0.0);
    for (int i = 0; i < n; ++i) {
      const double v = sample(m, rng);
      double p = 1.0;
      for (int k = 0; k <= 8; ++k) {
        sum[k] += p;
        sum2[k] += p * p;
        p *= v;
      }
    }
    for (int k = 1; k <= 8; ++k) {
      const double mean = sum[k] / n;
      const double se = std::sqrt(std::max(sum2[k] / n - mean * mean, 0.0) / n);
      CHECK_MESSAGE(std::abs(mean - raw_moment(m, k)) <= 4 * se + 1e-13, describe(m), " k=", k);
    }
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate(Uniform{0.5, 0.5}), Error);
  CHECK_THROWS_AS(validate(Uniform{-2.0, 0.0}), Error);
  CHECK_THROWS_AS(validate(Beta{0.0, 1.0}), Error);
  CHECK_THROWS_AS(validate(Beta{1.0, 1.0, 0.0, 1.5}), Error);
  CHECK_THROWS_AS(validate(PointMass{1.5}), Error);
  CHECK_THROWS_AS(validate(MomentTable{{0.5, 0.1}}), Error);
  CHECK_NOTHROW(validate(MomentTable{{1.0, 0.0, 1.0 / 3}}));
}

TEST_CASE("explicit tables report the order they are missing") {
  const MomentTable t{{1.0, 0.0, 1.0 / 3}};
  CHECK(raw_moment(t, 2) == doctest::Approx(1.0 / 3));
  try {
    raw_moment(t, 5);
    FAIL("expected InsufficientMoments");
  } catch (const InsufficientMoments& e) {
    CHECK(e.needed_order() == 5);
    CHECK(e.kind() == ErrorKind::kInsufficientMoments);
  }
}

TEST_CASE("moment tables must be realizable") {
  // two atoms at -0.5 and 0.5: the Chebyshev algorithm stops after two nodes
  std::vector<double> atoms(12);
  for (int k = 0; k < 12; ++k) atoms[k] = k % 2 == 0 ? std::pow(0.5, k) : 0.0;
  const QuadratureRule r = gauss_rule(MomentTable{atoms}, 11);
  CHECK(r.nodes.size() == 2);

  std::vector<double> bad(12, 0.0);
  bad[0] = 1.0;
  bad[2] = -0.5;
  try {
    gauss_rule(MomentTable{bad}, 11);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMomentInstability);
  }
}

TEST_CASE("MomentSequence caches consistently") {
  const MomentSequence seq(Beta{4, 4});
  const std::vector<double> p = seq.prefix(30);
  CHECK(p.size() == 31);
  for (int k = 0; k <= 30; ++k) CHECK(seq(k) == p[k]);
  CHECK(seq(45) == doctest::Approx(raw_moment(Beta{4, 4}, 45)).epsilon(1e-12));
}

TEST_CASE("gauss_rule integrates monomials exactly") {
  for (const auto& m : zoo()) {
    const QuadratureRule r = gauss_rule(m, 30);
    for (int k = 0; k <= 30; ++k) {
      double q = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) q += r.weights[i] * std::pow(r.nodes[i], k);
      CHECK_MESSAGE(std::abs(q - exact_moment(m, k)) < 1e-13, describe(m), " k=", k);
    }
  }
  const MomentTable t{raw_moments(Uniform{-1.0, 1.0}, 12)};
  const QuadratureRule r = gauss_rule(t, 11);
  double q = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) q += r.weights[i] * std::pow(r.nodes[i], 10);
  CHECK(q == doctest::Approx(1.0 / 11).epsilon(1e-10));
}
