#include <doctest.h>

#include <cmath>
#include <random>

#include "chebrisk/error.hpp"
#include "chebrisk/sosapprox.hpp"

using namespace chebrisk;

namespace {

double cheb_t(int k, double z) { return std::cos(k * std::acos(std::clamp(z, -1.0, 1.0))); }

// v(z)^T Q v(z) with v = (T_0, ..., T_{n-1}), evaluated pointwise.
double quad_form(const Eigen::MatrixXd& q, double z) {
  const int n = static_cast<int>(q.rows());
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v(k) = cheb_t(k, z);
  return v.dot(q * v);
}

const IndicatorCertificate& cert_k66() {
  static const IndicatorCertificate c = approximate_indicator(IntervalSet::single(-0.4, 0.0), 66);
  return c;
}

}  // namespace

TEST_CASE("IntervalSet complement examples") {
  const IntervalSet k = IntervalSet::single(-0.4, 0.0);
  CHECK(k.complement() == IntervalSet({{-1.0, -0.4}, {0.0, 1.0}}));
  CHECK(IntervalSet::full().complement().empty());
  CHECK(IntervalSet({{-1.0, -0.5}, {0.5, 1.0}}).complement() == IntervalSet::single(-0.5, 0.5));
  CHECK(IntervalSet().complement() == IntervalSet::full());
  CHECK(complement(complement(k)) == k);
  CHECK(k.measure() == doctest::Approx(0.4));
  CHECK(k.contains(-0.4));
  CHECK(k.contains(0.0));
  CHECK_FALSE(k.contains(0.01));
}

TEST_CASE("IntervalSet validation") {
  CHECK_THROWS_AS(IntervalSet::single(0.2, 0.1), Error);
  CHECK_THROWS_AS(IntervalSet::single(-1.5, 0.1), Error);
  CHECK_THROWS_AS(IntervalSet({{0.0, 0.5}, {0.4, 0.9}}), Error);
  CHECK_THROWS_AS(IntervalSet({{0.5, 0.9}, {-0.5, 0.0}}), Error);
}

TEST_CASE("effective_degree rounds odd degrees up") {
  CHECK(effective_degree(20) == 20);
  CHECK(effective_degree(21) == 22);
  CHECK(effective_degree(1) == 2);
  const SosProgram p = build_sdp(IntervalSet::single(-0.4, 0.0), 21);
  CHECK(p.degree == 22);
  CHECK(p.degree_rounded);
}

TEST_CASE("interval_multiplier equals (z - a)(b - z)") {
  const ChebSeries m = interval_multiplier(-0.4, 0.3);
  for (int i = 0; i <= 20; ++i) {
    const double z = -1.0 + 0.1 * i;
    CHECK(cheb_eval(m, z) == doctest::Approx((z + 0.4) * (0.3 - z)).epsilon(1e-14));
  }
}

TEST_CASE("gram_to_cheb_map matches pointwise products") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (const ChebSeries& mult : {ChebSeries({1.0}), interval_multiplier(-1.0, 1.0), interval_multiplier(-0.2, 0.7)}) {
    const int n = 7;
    Eigen::MatrixXd q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) q(i, j) = q(j, i) = g(rng);
    const std::vector<SymSparse> a = gram_to_cheb_map(n, mult);
    ChebSeries s(std::vector<double>(a.size()));
    for (std::size_t k = 0; k < a.size(); ++k) s.coeffs()[k] = inner(a[k], q);
    for (int i = 0; i <= 40; ++i) {
      const double z = std::cos(M_PI * i / 40.0);
      CHECK(std::abs(cheb_eval(s, z) - cheb_eval(mult, z) * quad_form(q, z)) < 1e-11);
    }
  }
}

TEST_CASE("build_sdp block layout") {
  const SosProgram single = build_sdp(IntervalSet::single(-0.4, 0.0), 66);
  CHECK(single.sdp.block_dims == std::vector<int>{34, 33, 34, 33});
  CHECK(single.sdp.free_dim == 0);
  const SosProgram two = build_sdp(IntervalSet::single(-0.4, 0.0).complement(), 66);
  CHECK(two.sdp.block_dims.size() == 6);
  CHECK(two.sdp.equalities.size() == 2 * 67);
  CHECK_NOTHROW(two.sdp.validate());
}

TEST_CASE("full box gives the constant one") {
  const IndicatorCertificate c = approximate_indicator(IntervalSet::full(), 20);
  REQUIRE(c.solver_status == SdpStatus::kOptimal);
  CHECK(c.objective_value == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(std::abs(c.coeffs[0] - 1.0) < 1e-6);
  for (int k = 1; k <= 20; ++k) CHECK(std::abs(c.coeffs[k]) < 1e-6);
  const CertificateAudit audit = validate_certificate(c);
  CHECK(audit.passed);
  CHECK(audit.grid_violation <= 1e-6);
}

TEST_CASE("empty target is the zero polynomial without a solve") {
  const IndicatorCertificate c = approximate_indicator(IntervalSet(), 30);
  CHECK(c.solver_status == SdpStatus::kOptimal);
  CHECK(c.iterations == 0);
  CHECK(c.objective_value == 0.0);
  for (double v : c.coeffs.coeffs()) CHECK(v == 0.0);
  CHECK(validate_certificate(c).passed);
}

TEST_CASE("d = 66 certificate for [-0.4, 0]") {
  const IndicatorCertificate& c = cert_k66();
  REQUIRE(c.solver_status == SdpStatus::kOptimal);
  CHECK(c.objective_value > 0.4);
  CHECK(c.objective_value < 2.0);
  CHECK(std::abs(cheb_integral(c.coeffs) - c.objective_value) < 1e-8 * (1 + c.objective_value));

  const CertificateAudit audit = validate_certificate(c);
  CHECK(audit.passed);
  CHECK(audit.grid_violation <= 1e-6);
  CHECK(audit.min_gram_eig >= -1e-7);

  const IntervalSet& k = c.target;
  for (int i = 0; i <= 10000; ++i) {
    const double z = -1.0 + 2.0 * i / 10000.0;
    CHECK(cheb_eval(c.coeffs, z) >= (k.contains(z) ? 1.0 : 0.0) - 1e-6);
  }
}

TEST_CASE("Gram blocks reproduce the polynomial") {
  for (const IntervalSet& target : {IntervalSet::single(-0.4, 0.0), IntervalSet::single(-0.4, 0.0).complement()}) {
    const IndicatorCertificate c = approximate_indicator(target, 40);
    REQUIRE(c.solver_status == SdpStatus::kOptimal);
    REQUIRE(c.gram_blocks.size() == 2 + 2 * target.intervals().size());
    double err = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double z = -1.0 + 2.0 * i / 400.0;
      const double p = cheb_eval(c.coeffs, z);
      const double global = quad_form(c.gram_blocks[0], z) + (1 - z * z) * quad_form(c.gram_blocks[1], z);
      err = std::max(err, std::abs(global - p));
      for (std::size_t j = 0; j < target.intervals().size(); ++j) {
        const auto [a, b] = target.intervals()[j];
        const double local =
            quad_form(c.gram_blocks[2 + 2 * j], z) + (z - a) * (b - z) * quad_form(c.gram_blocks[3 + 2 * j], z);
        err = std::max(err, std::abs(local + 1.0 - p));
      }
    }
    CHECK(err < 1e-7);
  }
}

TEST_CASE("objective is nonincreasing in the degree") {
  double prev = 1e9;
  for (int d : {20, 30, 40, 50, 60, 66}) {
    const IndicatorCertificate c = approximate_indicator(IntervalSet::single(-0.4, 0.0), d);
    REQUIRE(c.solver_status == SdpStatus::kOptimal);
    CHECK(c.objective_value <= prev + 1e-8);
    prev = c.objective_value;
  }
}

TEST_CASE("corrupted certificate fails the audit") {
  IndicatorCertificate bad = cert_k66();
  std::size_t k = 1;
  while (std::abs(bad.coeffs[k]) < 1e-3) ++k;
  bad.coeffs.coeffs()[k] = -bad.coeffs.coeffs()[k];
  const CertificateAudit audit = validate_certificate(bad);
  CHECK_FALSE(audit.passed);
  CHECK(audit.grid_violation > 1e-6);
  CHECK_FALSE(audit.failure.empty());

  IndicatorCertificate shifted = cert_k66();
  shifted.coeffs.coeffs()[0] -= 0.01;
  CHECK_FALSE(validate_certificate(shifted).passed);
}
