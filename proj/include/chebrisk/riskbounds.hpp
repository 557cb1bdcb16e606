#pragma once

#include <string>
#include <vector>

#include "chebrisk/certcache.hpp"
#include "chebrisk/distmoments.hpp"
#include "chebrisk/polycore.hpp"
#include "chebrisk/propagate.hpp"
#include "chebrisk/sosapprox.hpp"

namespace chebrisk {

/// l <= P(x, q) <= u.
struct PolyConstraint {
  MultiPoly poly;
  double lower = 0.0;
  double upper = 0.0;
};

/// Probability that every constraint holds, with independent marginals for
/// the variables in declaration order.
struct RiskProblem {
  std::string name;
  std::vector<std::string> variables;
  std::vector<Marginal> margins;
  std::vector<PolyConstraint> constraints;
  int degree = 20;

  /// Throws kValidation on inconsistent sizes, bad marginals or l > u.
  void validate() const;
};

struct BoundValue {
  double raw = 0.0;
  double value = 0.0;  // clamped to [0,1]
  bool clamped = false;
};

struct RiskBounds {
  BoundValue lower;
  BoundValue upper;
  /// Several constraints: only the product upper bound is available and
  /// the lower bound is reported as 0.
  bool upper_only = false;
  /// Some constraint cannot hold on the support box, so the probability is 0.
  bool empty_set = false;
  int degree_requested = 0;
  int degree_used = 0;
  int validity_degree = 0;
  std::vector<std::string> certificate_ids;
  int certificates_solved = 0;
  std::vector<ScaledConstraint> scaled;
  double offline_s = 0.0;   // certificate fetch or solve
  double moments_s = 0.0;   // moment propagation
  double contract_s = 0.0;  // coefficient-moment contraction
  /// Equals contract_s: the dot products once moments are in hand.
  double online_s = 0.0;

  double p_l() const noexcept { return lower.value; }
  double p_u() const noexcept { return upper.value; }
};

struct EstimateConfig {
  SdpSettings solver;
  bool solve_missing = true;
  MomentPath path = MomentPath::kQuadrature;
  std::size_t mixed_size_cap = kDefaultMixedSizeCap;
  int max_boxes = 4096;
  /// Replaces RiskProblem::degree when positive.
  int degree_override = 0;
};

/// sum_k c_k m_k, clamped to [0,1]. Throws MomentInstability when the
/// moments are invalid below the certificate degree.
BoundValue upper_bound_single(const IndicatorCertificate& cert_k, const MomentVector& mz);

/// 1 - sum_k cbar_k m_k with the complement certificate.
BoundValue lower_bound_single(const IndicatorCertificate& cert_kbar, const MomentVector& mz);

/// sum over the index box of prod_j c^j_{i_j} m[i_1..i_l].
BoundValue upper_bound_multi(const std::vector<IndicatorCertificate>& certs, const MixedChebMoments& mixed);

/// Rescales each constraint by a bound on |P| over the product of the
/// marginal supports. Throws kEmptyUnsafeSet when a constraint cannot hold.
std::vector<ScaledConstraint> rescale_problem(const RiskProblem& problem, int max_boxes = 4096);

/// Full pipeline: rescale, certificates, moments, contraction.
RiskBounds estimate(const RiskProblem& problem, const CertificateCache& cache, const EstimateConfig& cfg = {});

struct AutoDegreeConfig {
  int start = 10;
  int step = 10;
  int max_degree = 120;
  double budget_s = 120.0;
};

/// Raises the degree in steps until the moment validity degree or the
/// wall-clock budget binds; returns the last completed estimate.
RiskBounds estimate_auto(const RiskProblem& problem, const CertificateCache& cache, const EstimateConfig& cfg,
                         const AutoDegreeConfig& auto_cfg = {});

}  // namespace chebrisk
