#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chebrisk/distmoments.hpp"
#include "chebrisk/polycore.hpp"

namespace chebrisk {

enum class MomentBasis { kStandard, kChebyshev };

/// m_0..m_d of a scalar variable in the monomial or Chebyshev basis.
struct MomentVector {
  std::vector<double> values;
  MomentBasis basis = MomentBasis::kStandard;

  int degree() const { return static_cast<int>(values.size()) - 1; }
};

/// How E[T_k(p(x,q))] is computed.
enum class MomentPath {
  /// Product Gauss quadrature built from each marginal's orthogonal-polynomial
  /// recurrence; exact for polynomials and free of monomial cancellation.
  kQuadrature,
  /// T_{k+1}(p) = 2 p T_k(p) - T_{k-1}(p) expanded as MultiPoly, then
  /// monomial expectations. Limited by the multivariate degree cap.
  kRecurrence,
  /// Standard moments mapped through the monomial table of T_k. Loses
  /// accuracy quickly with k.
  kConversion,
};

/// E[prod_v x_v^idx[v]] under independent marginals.
double monomial_expectation(const Exponents& idx, std::span<const Marginal> margins);

/// E[p(x)] for independent marginals.
double expectation(const MultiPoly& p, std::span<const Marginal> margins);

/// E[p^alpha] for alpha = 0..d via repeated poly_mul.
MomentVector z_moments_standard(const MultiPoly& p, std::span<const Marginal> margins, int d,
                                int max_total_degree = kMaxTotalDegree);

/// E[T_k(p)] for k = 0..d.
MomentVector z_moments_cheb(const MultiPoly& p, std::span<const Marginal> margins, int d,
                            MomentPath path = MomentPath::kQuadrature,
                            int max_total_degree = kMaxTotalDegree);

/// Chebyshev moments from standard moments through the T_k monomial table.
MomentVector cheb_moments_from_standard(const MomentVector& standard);

/// Both bases from one quadrature pass: first = standard, second = Chebyshev.
std::pair<MomentVector, MomentVector> z_moments_both(const MultiPoly& p,
                                                     std::span<const Marginal> margins, int d);

/// Largest d' such that |values_k| <= 1 + 1e-9 for all k <= d'.
int moment_validity_degree(const MomentVector& mv);

/// First order where the conversion path departs from `reference` by more
/// than tol, or reference.degree() when they agree throughout.
int path_divergence_degree(const MomentVector& reference, const MomentVector& converted,
                           double tol = 1e-8);

/// E[prod_j T_{i_j}(P_j)] over the box i_j <= degrees[j], stored densely with
/// the last index varying fastest.
class MixedChebMoments {
 public:
  MixedChebMoments() = default;
  explicit MixedChebMoments(std::vector<int> degrees);

  std::size_t ell() const noexcept { return degrees_.size(); }
  const std::vector<int>& degrees() const noexcept { return degrees_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::span<const int> idx) const { return values_[offset(idx)]; }
  double& at(std::span<const int> idx) { return values_[offset(idx)]; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  std::size_t offset(std::span<const int> idx) const;

 private:
  std::vector<int> degrees_;
  std::vector<double> values_;
};

inline constexpr std::size_t kDefaultMixedSizeCap = 20'000'000;

MixedChebMoments mixed_cheb_moments(std::span<const MultiPoly> polys,
                                    std::span<const Marginal> margins, std::span<const int> degrees,
                                    MomentPath path = MomentPath::kQuadrature,
                                    std::size_t size_cap = kDefaultMixedSizeCap);

}  // namespace chebrisk
