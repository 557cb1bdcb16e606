#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "chebrisk/polycore.hpp"
#include "chebrisk/sdpsolver.hpp"

namespace chebrisk {

struct Interval {
  double lo;
  double hi;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Sorted, disjoint closed intervals inside [-1,1].
class IntervalSet {
 public:
  IntervalSet() = default;
  /// Throws kValidation unless the intervals are sorted, disjoint and in [-1,1].
  explicit IntervalSet(std::vector<Interval> intervals);

  static IntervalSet single(double lo, double hi);
  static IntervalSet full() { return single(-1.0, 1.0); }

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }
  bool contains(double z) const;
  double measure() const;

  /// Closure of [-1,1] minus the union of the interiors.
  IntervalSet complement() const;

  std::string to_string() const;
  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> intervals_;
};

inline IntervalSet complement(const IntervalSet& s) { return s.complement(); }

/// The SDP for a degree-d indicator approximation, with its block layout.
/// Blocks 0 and 1 define p = s + (1 - z^2) s' on [-1,1]; blocks 2+2i and
/// 3+2i certify p - 1 = s + (z - a_i)(b_i - z) s' on interval i. There are
/// no free variables: the coefficients of p are read off blocks 0 and 1.
struct SosProgram {
  IntervalSet target;
  int degree = 0;
  bool degree_rounded = false;
  SdpProblem sdp;
};

/// Even degree >= 2 used for a requested degree.
int effective_degree(int requested);

SosProgram build_sdp(const IntervalSet& target, int degree);

/// For a Gram block of side n and multiplier g, entry k holds the symmetric
/// matrix A_k with coefficient of T_k in g(z) v(z)^T Q v(z) = <A_k, Q>,
/// where v = (T_0, ..., T_{n-1}).
std::vector<SymSparse> gram_to_cheb_map(int n, const ChebSeries& multiplier);

/// (z - a)(b - z) in the Chebyshev basis.
ChebSeries interval_multiplier(double a, double b);

struct CertificateResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double min_eig = 0.0;
  double grid_violation = 0.0;
};

struct IndicatorCertificate {
  IntervalSet target;
  int degree = 0;
  ChebSeries coeffs;
  std::vector<Eigen::MatrixXd> gram_blocks;
  double objective_value = 0.0;
  SdpStatus solver_status = SdpStatus::kOptimal;
  CertificateResiduals residuals;
  int iterations = 0;
  double solve_seconds = 0.0;
  bool degree_rounded = false;
};

struct AuditTolerances {
  double feas = 1e-6;
  double psd = 1e-7;
  double recon = 1e-7;
};

struct CertificateAudit {
  double min_box = 0.0;        // min p over the [-1,1] grid
  double min_target = 0.0;     // min p - 1 over the target grids
  double min_gram_eig = 0.0;
  double recon_residual = 0.0;
  double grid_violation = 0.0; // max(0, -min_box, -min_target)
  bool passed = false;
  std::string failure;
};

/// Solves for the minimal-integral polynomial upper approximation of the
/// indicator of `target`. A solver failure is reported through
/// solver_status and the residuals, not thrown.
IndicatorCertificate approximate_indicator(const IntervalSet& target, int degree,
                                           const SdpSettings& settings = {});

/// A posteriori audit on grids of `grid_n` points, independent of the solver.
CertificateAudit validate_certificate(const IndicatorCertificate& cert, int grid_n = 10000,
                                      const AuditTolerances& tol = {});

}  // namespace chebrisk
