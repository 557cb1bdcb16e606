#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "chebrisk/error.hpp"
#include "chebrisk/polycore.hpp"

using namespace chebrisk;

namespace {

MultiPoly x(std::size_t n, std::size_t i, double c = 1.0) { return MultiPoly::variable(n, i, c); }

ChebSeries random_series(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(degree + 1);
  for (auto& v : c) v = u(rng);
  return ChebSeries(c);
}

MultiPoly random_poly(std::mt19937_64& rng, std::size_t nvars, int max_deg, int nterms) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> e(0, max_deg);
  MultiPoly p(nvars);
  for (int t = 0; t < nterms; ++t) {
    Exponents ex(nvars);
    for (auto& v : ex) v = e(rng);
    p.add_term(ex, u(rng));
  }
  return p;
}

}  // namespace

TEST_CASE("poly_mul examples") {
  CHECK(poly_mul(x(1, 0), x(1, 0)) == [] {
    MultiPoly p(1);
    p.add_term({2}, 1.0);
    return p;
  }());

  const MultiPoly one = MultiPoly::constant(1, 1.0);
  const MultiPoly prod = poly_mul(one + x(1, 0), one - x(1, 0));
  CHECK(prod.size() == 2);
  CHECK(prod.coeff({0}) == 1.0);
  CHECK(prod.coeff({2}) == -1.0);
  CHECK(prod.coeff({1}) == 0.0);

  const MultiPoly z = x(2, 0, 0.5) - x(2, 1, 0.5);
  const MultiPoly z2 = poly_mul(z, z);
  CHECK(z2.coeff({2, 0}) == doctest::Approx(0.25));
  CHECK(z2.coeff({1, 1}) == doctest::Approx(-0.5));
  CHECK(z2.coeff({0, 2}) == doctest::Approx(0.25));
  CHECK(z2.size() == 3);

  CHECK_THROWS_AS(poly_mul(x(1, 0), x(2, 0)), Error);
}

TEST_CASE("poly_pow examples") {
  const MultiPoly a = x(2, 0, 3.0) + MultiPoly::constant(2, 2.0);
  CHECK(poly_pow(a, 0) == MultiPoly::constant(2, 1.0));

  const MultiPoly b2 = poly_pow(x(2, 0) + x(2, 1), 2);
  CHECK(b2.coeff({2, 0}) == 1.0);
  CHECK(b2.coeff({1, 1}) == 2.0);
  CHECK(b2.coeff({0, 2}) == 1.0);

  const MultiPoly z = (x(2, 0) - x(2, 1)) * 0.5;
  const MultiPoly z3 = poly_pow(z, 3);
  CHECK(z3.coeff({3, 0}) == doctest::Approx(0.125));
  CHECK(z3.coeff({2, 1}) == doctest::Approx(-0.375));
  CHECK(z3.coeff({1, 2}) == doctest::Approx(0.375));
  CHECK(z3.coeff({0, 3}) == doctest::Approx(-0.125));
}

TEST_CASE("poly_pow matches eval^k at random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const MultiPoly p = random_poly(rng, 3, 2, 4);
    const int k = 1 + trial % 6;
    const MultiPoly pk = poly_pow(p, k);
    for (int i = 0; i < 10; ++i) {
      const double pt[3] = {u(rng), u(rng), u(rng)};
      const double want = std::pow(p.evaluate(pt), k);
      CHECK(std::abs(pk.evaluate(pt) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("MultiPoly keeps no zero terms") {
  MultiPoly p(2);
  p.add_term({1, 0}, 1.0);
  p.add_term({1, 0}, -1.0);
  CHECK(p.is_zero());
  CHECK_THROWS_AS(p.add_term({1}, 1.0), Error);
}

TEST_CASE("compose_affine maps the box onto the support") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MultiPoly p = random_poly(rng, 2, 3, 5);
  const double c[2] = {0.1, -0.3}, h[2] = {0.4, 0.2};
  const MultiPoly q = compose_affine(p, c, h);
  for (int i = 0; i < 20; ++i) {
    const double t[2] = {u(rng), u(rng)};
    const double s[2] = {c[0] + h[0] * t[0], c[1] + h[1] * t[1]};
    CHECK(q.evaluate(t) == doctest::Approx(p.evaluate(s)).epsilon(1e-12));
  }
}

TEST_CASE("cheb_mul examples") {
  const ChebSeries t13 = cheb_mul(ChebSeries::basis(1), ChebSeries::basis(2));
  CHECK(t13[3] == 0.5);
  CHECK(t13[1] == 0.5);
  CHECK(t13[0] == 0.0);
  CHECK(t13.degree() == 3);

  const ChebSeries a({0.3, -1.0, 0.25});
  const ChebSeries id = cheb_mul(ChebSeries::basis(0), a);
  for (int k = 0; k <= 2; ++k) CHECK(id[k] == a[k]);

  const ChebSeries t33 = cheb_mul(ChebSeries::basis(3), ChebSeries::basis(3));
  for (int i = 0; i < 50; ++i) {
    const double z = -1.0 + 2.0 * i / 49.0;
    const double direct = std::cos(3 * std::acos(z)) * std::cos(3 * std::acos(z));
    CHECK(std::abs(cheb_eval(t33, z) - direct) < 1e-12);
  }
  CHECK(t33[6] == 0.5);
  CHECK(t33[0] == 0.5);
}

TEST_CASE("cheb_mul is pointwise multiplication") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ChebSeries a = random_series(rng, 1 + trial);
    const ChebSeries b = random_series(rng, 2 + 2 * trial);
    const ChebSeries ab = cheb_mul(a, b);
    CHECK(ab.degree() == a.degree() + b.degree());
    for (int i = 0; i < 100; ++i) {
      const double z = std::cos(M_PI * (i + 0.5) / 100.0);
      CHECK(std::abs(cheb_eval(ab, z) - cheb_eval(a, z) * cheb_eval(b, z)) < 1e-9);
    }
  }
}

TEST_CASE("cheb_eval examples") {
  CHECK(cheb_eval(ChebSeries::basis(2), 0.0) == -1.0);
  CHECK(cheb_eval(ChebSeries::basis(5), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cheb_eval(ChebSeries({1.0, 0.5, 0.25}), 0.5) == doctest::Approx(1.125).epsilon(1e-15));
}

TEST_CASE("cheb_integral examples and quadrature oracle") {
  CHECK(cheb_integral(ChebSeries::basis(0)) == 2.0);
  CHECK(cheb_integral(ChebSeries::basis(1)) == 0.0);
  CHECK(std::abs(cheb_integral(ChebSeries::basis(2)) + 2.0 / 3.0) < 1e-12);

  std::mt19937_64 rng(5);
  for (int deg : {3, 10, 25, 40}) {
    const ChebSeries a = random_series(rng, deg);
    const double numeric = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double z) { return cheb_eval(a, z); }, -1.0, 1.0, 10, 1e-14);
    CHECK(std::abs(cheb_integral(a) - numeric) < 1e-9);
  }
}

TEST_CASE("standard_to_cheb examples and round trip") {
  const double t2[3] = {-1.0, 0.0, 2.0};
  const ChebSeries c = standard_to_cheb(t2);
  CHECK(std::abs(c[2] - 1.0) < 1e-15);
  CHECK(std::abs(c[0]) < 1e-15);
  CHECK(std::abs(c[1]) < 1e-15);

  const double k[1] = {0.7};
  CHECK(standard_to_cheb(k)[0] == 0.7);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int deg : {8, 15, 30}) {
    std::vector<double> m(deg + 1);
    for (auto& v : m) v = u(rng);
    const std::vector<double> back = cheb_to_standard(standard_to_cheb(m));
    REQUIRE(back.size() >= m.size());
    double err = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) err = std::max(err, std::abs(back[i] - m[i]));
    CHECK(err < (deg <= 8 ? 1e-10 : 1e-9));
  }
}

TEST_CASE("box_bound examples") {
  CHECK(box_bound(MultiPoly::constant(2, 0.3)).value == doctest::Approx(0.3));
  MultiPoly xy(2);
  xy.add_term({1, 1}, 1.0);
  CHECK(box_bound(xy).value == doctest::Approx(1.0));

  MultiPoly t2(1);
  t2.add_term({2}, 2.0);
  t2.add_term({0}, -1.0);
  CHECK(box_bound(t2).value == doctest::Approx(1.0));
  CHECK(box_bound(t2, BoundMethod::kMonomial).value == doctest::Approx(3.0));
}

TEST_CASE("box_bound dominates the sampled maximum") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const MultiPoly p = random_poly(rng, 3, 4, 6);
    const double cheb = box_bound(p).value;
    const double mono = box_bound(p, BoundMethod::kMonomial).value;
    const double sub = box_bound_subdivided(p, 0.0, 256).value;
    double sampled = 0.0;
    for (int i = 0; i < 1'000'000; ++i) {
      const double pt[3] = {u(rng), u(rng), u(rng)};
      sampled = std::max(sampled, std::abs(p.evaluate(pt)));
    }
    CHECK(cheb >= sampled);
    CHECK(mono >= sampled);
    CHECK(sub >= sampled);
    CHECK(sub <= cheb + 1e-12);
  }
}

TEST_CASE("rescale_constraint") {
  MultiPoly small(1);
  small.add_term({1}, 0.5);
  const ScaledConstraint same = rescale_constraint(small, -0.2, 0.3);
  CHECK(same.scale == 1.0);
  CHECK(same.poly == small);
  CHECK(same.lower == -0.2);
  CHECK(same.upper == 0.3);

  const ScaledConstraint two = rescale_constraint(x(1, 0, 2.0), -1.0, 1.0);
  CHECK(two.poly == x(1, 0));
  CHECK(two.lower == -0.5);
  CHECK(two.upper == 0.5);

  CHECK_THROWS_AS(rescale_constraint(MultiPoly(1), 0.1, 0.2), Error);
  try {
    rescale_constraint(MultiPoly(1), 0.1, 0.2);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyUnsafeSet);
  }
}

TEST_CASE("rescale_constraint preserves membership on a grid") {
  // -x1^4 + 0.5 (x1^2 - x2^2) + 0.1 q with thresholds (-0.1, 0.2)
  MultiPoly p(3);
  p.add_term({4, 0, 0}, -1.0);
  p.add_term({2, 0, 0}, 0.5);
  p.add_term({0, 2, 0}, -0.5);
  p.add_term({0, 0, 1}, 0.1);
  const ScaledConstraint s = rescale_constraint(p, -0.1, 0.2);
  CHECK(s.lower >= -1.0);
  CHECK(s.upper <= 1.0);
  CHECK(box_bound(s.poly).value <= 1.0 + 1e-12);
  int mismatches = 0;
  for (int i = 0; i < 22; ++i)
    for (int j = 0; j < 22; ++j)
      for (int k = 0; k < 21; ++k) {
        const double pt[3] = {-1.0 + 2.0 * i / 21, -1.0 + 2.0 * j / 21, -1.0 + 2.0 * k / 20};
        const double v = p.evaluate(pt);
        const double w = s.poly.evaluate(pt);
        const bool in0 = -0.1 <= v && v <= 0.2;
        const bool in1 = s.lower <= w && w <= s.upper;
        // points within rounding of a threshold may flip either way
        if (in0 != in1 && std::abs(v + 0.1) > 1e-12 && std::abs(v - 0.2) > 1e-12) ++mismatches;
      }
  CHECK(mismatches == 0);
}
