#pragma once

#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace chebrisk {

struct Uniform {
  double a = -1.0;
  double b = 1.0;
};

/// Beta(alpha, beta) mapped affinely from [0,1] onto [a,b].
struct Beta {
  double alpha = 1.0;
  double beta = 1.0;
  double a = 0.0;
  double b = 1.0;
};

struct PointMass {
  double v = 0.0;
};

/// Explicit raw moments; values[k] = E[X^k], values[0] = 1. Support is
/// assumed to lie in [-1,1].
struct MomentTable {
  std::vector<double> values;
};

using Marginal = std::variant<Uniform, Beta, PointMass, MomentTable>;

/// Throws kValidation unless the descriptor is well formed with support in [-1,1].
void validate(const Marginal& dist);

/// Closed support interval.
std::pair<double, double> support(const Marginal& dist);

std::string describe(const Marginal& dist);

/// E[X^k].
double raw_moment(const Marginal& dist, int k);

/// m_0..m_max_order.
std::vector<double> raw_moments(const Marginal& dist, int max_order);

/// Moments of a + (b - a) U given the moments of U.
std::vector<double> affine_moments(std::span<const double> base, double a, double b);

/// Lazily extended moment table for one marginal; safe to share across threads.
class MomentSequence {
 public:
  explicit MomentSequence(Marginal dist);

  double operator()(int k) const;
  /// Ensures orders 0..max_order are cached and returns a copy of them.
  std::vector<double> prefix(int max_order) const;
  const Marginal& marginal() const noexcept { return dist_; }

 private:
  void extend(int max_order) const;

  Marginal dist_;
  mutable std::mutex mutex_;
  mutable std::vector<double> cache_;
};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss rule for the marginal that integrates polynomials of degree
/// `exact_degree` exactly. Uniform and Beta use the Jacobi three-term
/// recurrence; moment tables go through the Chebyshev algorithm on the raw
/// moments, which needs orders up to 2N-1 for an N-node rule.
QuadratureRule gauss_rule(const Marginal& dist, int exact_degree);

}  // namespace chebrisk
