#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace chebrisk {

// Terms with |coefficient| below this are dropped after every operation.
inline constexpr double kCoeffDropTol = 1e-14;
inline constexpr int kMaxUnivariateDegree = 200;
inline constexpr int kMaxTotalDegree = 64;

using Exponents = std::vector<int>;

/// Graded lexicographic order: total degree first, then lexicographic.
struct GradedLexLess {
  bool operator()(const Exponents& a, const Exponents& b) const;
};

/// Sparse multivariate polynomial in the monomial basis.
class MultiPoly {
 public:
  using TermMap = std::map<Exponents, double, GradedLexLess>;

  explicit MultiPoly(std::size_t nvars = 1);

  static MultiPoly constant(std::size_t nvars, double value);
  static MultiPoly variable(std::size_t nvars, std::size_t index, double coeff = 1.0);

  /// Accumulates `coeff` onto the monomial `exps`.
  void add_term(const Exponents& exps, double coeff);

  std::size_t nvars() const noexcept { return nvars_; }
  const TermMap& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  int total_degree() const;
  int degree_in(std::size_t var) const;
  double coeff(const Exponents& exps) const;
  double evaluate(std::span<const double> point) const;

  MultiPoly operator-() const;
  MultiPoly& operator+=(const MultiPoly& other);
  MultiPoly& operator-=(const MultiPoly& other);
  MultiPoly& operator*=(double s);

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(MultiPoly a, double s) { return a *= s; }
  friend MultiPoly operator*(double s, MultiPoly a) { return a *= s; }
  friend bool operator==(const MultiPoly&, const MultiPoly&) = default;

 private:
  void check_arity(const MultiPoly& other) const;
  void prune();

  std::size_t nvars_;
  TermMap terms_;
};

MultiPoly poly_mul(const MultiPoly& a, const MultiPoly& b, int max_total_degree = kMaxTotalDegree);
MultiPoly poly_pow(const MultiPoly& a, int k, int max_total_degree = kMaxTotalDegree);

/// Substitutes x_v = center[v] + halfwidth[v] * t_v, giving a polynomial in t.
MultiPoly compose_affine(const MultiPoly& p, std::span<const double> center,
                         std::span<const double> halfwidth);

/// Univariate series sum_k c_k T_k(z). Trailing zeros may be stored.
class ChebSeries {
 public:
  ChebSeries() = default;
  explicit ChebSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

  static ChebSeries basis(int k, double scale = 1.0);

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  std::vector<double>& coeffs() noexcept { return coeffs_; }
  /// Index of the last nonzero coefficient; 0 for the zero series.
  int degree() const;
  double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }
  double operator()(double z) const;

 private:
  std::vector<double> coeffs_;
};

ChebSeries cheb_mul(const ChebSeries& a, const ChebSeries& b, int max_degree = kMaxUnivariateDegree);
/// Clenshaw evaluation. Arguments outside [-1,1] are allowed.
double cheb_eval(const ChebSeries& a, double z);
/// Integral over [-1,1].
double cheb_integral(const ChebSeries& a);
/// w_k with integral(T_k) = w_k over [-1,1].
std::vector<double> cheb_integral_weights(int degree);

ChebSeries standard_to_cheb(std::span<const double> monomial_coeffs);
std::vector<double> cheb_to_standard(const ChebSeries& a);

/// Row k holds the monomial coefficients of T_k, for k <= degree.
std::vector<std::vector<double>> cheb_monomial_table(int degree);

enum class BoundMethod { kChebyshev, kMonomial, kChebyshevSubdivided };
std::string_view to_string(BoundMethod m);

struct BoxBound {
  double value = 0.0;
  BoundMethod method = BoundMethod::kChebyshev;
};

/// Upper bound on max |p| over [-1,1]^nvars.
BoxBound box_bound(const MultiPoly& p, BoundMethod method = BoundMethod::kChebyshev);

/// Enclosure of the range of p over [-1,1]^nvars as (lo, hi), from the
/// tensor Chebyshev expansion.
std::pair<double, double> cheb_range_enclosure(const MultiPoly& p);

/// Tightens the Chebyshev bound by bisecting the box until the bound drops to
/// `target` or `max_boxes` sub-boxes have been examined. Always a valid bound.
BoxBound box_bound_subdivided(const MultiPoly& p, double target, int max_boxes = 4096);

struct ScaledConstraint {
  MultiPoly poly;
  double lower = 0.0;
  double upper = 0.0;
  double scale = 1.0;
  BoxBound bound;
};

/// Divides p, l, u by box_bound(p) when it exceeds 1, then clips the
/// thresholds to [-1,1]. Throws kEmptyUnsafeSet when {l <= p <= u} is empty
/// by construction.
ScaledConstraint rescale_constraint(const MultiPoly& p, double lower, double upper);
/// Same, with a bound computed by the caller (e.g. over a support box).
ScaledConstraint rescale_constraint(const MultiPoly& p, double lower, double upper,
                                    const BoxBound& bound);

}  // namespace chebrisk
