#include "chebrisk/riskbounds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

BoundValue clamp_unit(double raw) {
  BoundValue b;
  b.raw = raw;
  b.value = std::clamp(raw, 0.0, 1.0);
  b.clamped = b.value != raw;
  return b;
}

double contract(const ChebSeries& c, const MomentVector& mz) {
  if (mz.basis != MomentBasis::kChebyshev) {
    throw Error(ErrorKind::kValidation, "bounds need Chebyshev-basis moments");
  }
  const int d = c.degree();
  if (d > mz.degree()) {
    throw Error(ErrorKind::kValidation, "certificate degree " + std::to_string(d) + " exceeds moment length " +
                                            std::to_string(mz.degree()));
  }
  const int valid = moment_validity_degree(mz);
  if (valid < d) throw MomentInstability(valid);
  double s = 0.0;
  for (int k = 0; k <= d; ++k) s += c[k] * mz.values[k];
  return s;
}

int even_floor(int d) { return d - (d % 2 != 0 ? 1 : 0); }

// Prefixes the stage name while keeping the error kind and payload.
template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const MomentInstability&) {
    throw;
  } catch (const InsufficientMoments&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  }
}

}  // namespace

void RiskProblem::validate() const {
  if (margins.empty()) throw Error(ErrorKind::kValidation, "problem has no variables");
  if (!variables.empty() && variables.size() != margins.size()) {
    throw Error(ErrorKind::kValidation, "variable names and marginals differ in count");
  }
  if (constraints.empty()) throw Error(ErrorKind::kValidation, "problem has no constraints");
  if (degree < 1) throw Error(ErrorKind::kValidation, "degree must be positive");
  for (const auto& m : margins) chebrisk::validate(m);
  for (const auto& c : constraints) {
    if (c.poly.nvars() != margins.size()) {
      throw Error(ErrorKind::kValidation, "constraint polynomial has " + std::to_string(c.poly.nvars()) +
                                              " variables, problem has " + std::to_string(margins.size()));
    }
    if (!(c.lower <= c.upper) || !std::isfinite(c.lower) || !std::isfinite(c.upper)) {
      throw Error(ErrorKind::kValidation, "constraint thresholds must satisfy l <= u");
    }
  }
}

BoundValue upper_bound_single(const IndicatorCertificate& cert_k, const MomentVector& mz) {
  return clamp_unit(contract(cert_k.coeffs, mz));
}

BoundValue lower_bound_single(const IndicatorCertificate& cert_kbar, const MomentVector& mz) {
  return clamp_unit(1.0 - contract(cert_kbar.coeffs, mz));
}

BoundValue upper_bound_multi(const std::vector<IndicatorCertificate>& certs, const MixedChebMoments& mixed) {
  const std::size_t ell = certs.size();
  if (ell != mixed.ell()) throw Error(ErrorKind::kValidation, "certificate count differs from moment tensor order");
  for (std::size_t j = 0; j < ell; ++j) {
    if (certs[j].coeffs.degree() > mixed.degrees()[j]) {
      throw Error(ErrorKind::kValidation, "mixed moments do not cover certificate " + std::to_string(j));
    }
  }
  // Contract the last (fastest) index first; each pass shrinks the tensor
  // by one mode.
  std::vector<double> t = mixed.values();
  std::size_t outer = t.size();
  for (std::size_t jj = ell; jj-- > 0;) {
    const std::size_t n = static_cast<std::size_t>(mixed.degrees()[jj]) + 1;
    outer /= n;
    std::vector<double> next(outer, 0.0);
    const auto& c = certs[jj].coeffs;
    const std::size_t used = static_cast<std::size_t>(c.degree()) + 1;
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < used; ++i) s += c[static_cast<int>(i)] * t[o * n + i];
      next[o] = s;
    }
    t = std::move(next);
  }
  return clamp_unit(t.empty() ? 0.0 : t[0]);
}

std::vector<ScaledConstraint> rescale_problem(const RiskProblem& problem, int max_boxes) {
  const std::size_t n = problem.margins.size();
  std::vector<double> center(n), half(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto [lo, hi] = support(problem.margins[v]);
    center[v] = 0.5 * (lo + hi);
    half[v] = 0.5 * (hi - lo);
  }
  std::vector<ScaledConstraint> out;
  for (const auto& c : problem.constraints) {
    // |P| is only needed on the support box, which is usually far smaller
    // than [-1,1]^n; bounding there avoids needless shrinking of P.
    const MultiPoly local = compose_affine(c.poly, center, half);
    const BoxBound bound = box_bound_subdivided(local, 1.0, max_boxes);
    out.push_back(rescale_constraint(c.poly, c.lower, c.upper, bound));
  }
  return out;
}

RiskBounds estimate(const RiskProblem& problem, const CertificateCache& cache, const EstimateConfig& cfg) {
  in_stage("problem", [&] { problem.validate(); });
  RiskBounds rb;
  rb.degree_requested = cfg.degree_override > 0 ? cfg.degree_override : problem.degree;
  const int d = effective_degree(rb.degree_requested);

  try {
    rb.scaled = in_stage("rescale", [&] { return rescale_problem(problem, cfg.max_boxes); });
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kEmptyUnsafeSet) throw;
    rb.empty_set = true;
    rb.degree_used = 0;
    return rb;
  }
  const std::size_t ell = rb.scaled.size();

  if (ell == 1) {
    const MultiPoly& p = rb.scaled[0].poly;
    auto t0 = Clock::now();
    const MomentVector mz =
        in_stage("moments", [&] { return z_moments_cheb(p, problem.margins, d, cfg.path); });
    rb.moments_s = seconds_since(t0);
    rb.validity_degree = moment_validity_degree(mz);
    rb.degree_used = std::min(d, even_floor(rb.validity_degree));
    if (rb.degree_used < 2) throw MomentInstability(rb.validity_degree);

    const IntervalSet k = IntervalSet::single(rb.scaled[0].lower, rb.scaled[0].upper);
    const IntervalSet kbar = k.complement();
    t0 = Clock::now();
    bool solved = false;
    const IndicatorCertificate ck = in_stage("certificate K", [&] {
      return cache.fetch_or_solve(k, rb.degree_used, cfg.solver, cfg.solve_missing, &solved);
    });
    rb.certificates_solved += solved ? 1 : 0;
    const IndicatorCertificate cb = in_stage("certificate complement", [&] {
      return cache.fetch_or_solve(kbar, rb.degree_used, cfg.solver, cfg.solve_missing, &solved);
    });
    rb.certificates_solved += solved ? 1 : 0;
    rb.offline_s = seconds_since(t0);
    rb.certificate_ids = {certificate_id(k, rb.degree_used, cfg.solver),
                          certificate_id(kbar, rb.degree_used, cfg.solver)};

    t0 = Clock::now();
    rb.upper = upper_bound_single(ck, mz);
    rb.lower = lower_bound_single(cb, mz);
    rb.contract_s = seconds_since(t0);
    rb.online_s = rb.contract_s;
    return rb;
  }

  // Several constraints: per-constraint certificates and the product bound.
  rb.upper_only = true;
  std::vector<MultiPoly> polys;
  for (const auto& s : rb.scaled) polys.push_back(s.poly);
  auto t0 = Clock::now();
  rb.validity_degree = d;
  for (const auto& p : polys) {
    const MomentVector mz = in_stage("moments", [&] { return z_moments_cheb(p, problem.margins, d, cfg.path); });
    rb.validity_degree = std::min(rb.validity_degree, moment_validity_degree(mz));
  }
  rb.degree_used = std::min(d, even_floor(rb.validity_degree));
  if (rb.degree_used < 2) throw MomentInstability(rb.validity_degree);
  const std::vector<int> degrees(ell, rb.degree_used);
  const MixedChebMoments mixed = in_stage("mixed moments", [&] {
    return mixed_cheb_moments(polys, problem.margins, degrees, cfg.path, cfg.mixed_size_cap);
  });
  rb.moments_s = seconds_since(t0);

  t0 = Clock::now();
  std::vector<IndicatorCertificate> certs;
  for (const auto& s : rb.scaled) {
    const IntervalSet k = IntervalSet::single(s.lower, s.upper);
    bool solved = false;
    certs.push_back(in_stage("certificate K", [&] {
      return cache.fetch_or_solve(k, rb.degree_used, cfg.solver, cfg.solve_missing, &solved);
    }));
    rb.certificates_solved += solved ? 1 : 0;
    rb.certificate_ids.push_back(certificate_id(k, rb.degree_used, cfg.solver));
  }
  rb.offline_s = seconds_since(t0);

  t0 = Clock::now();
  rb.upper = upper_bound_multi(certs, mixed);
  rb.lower = clamp_unit(0.0);
  rb.contract_s = seconds_since(t0);
  rb.online_s = rb.contract_s;
  return rb;
}

RiskBounds estimate_auto(const RiskProblem& problem, const CertificateCache& cache, const EstimateConfig& cfg,
                         const AutoDegreeConfig& auto_cfg) {
  const auto start = Clock::now();
  EstimateConfig c = cfg;
  RiskBounds best;
  bool have = false;
  for (int d = auto_cfg.start; d <= auto_cfg.max_degree; d += auto_cfg.step) {
    c.degree_override = d;
    RiskBounds rb;
    try {
      rb = estimate(problem, cache, c);
    } catch (const MomentInstability&) {
      if (!have) throw;
      break;
    }
    const bool capped = rb.degree_used < effective_degree(d);
    if (!have || rb.degree_used > best.degree_used) best = rb;
    have = true;
    if (rb.empty_set || capped || seconds_since(start) > auto_cfg.budget_s) break;
  }
  if (!have) throw Error(ErrorKind::kValidation, "auto degree range is empty");
  best.degree_requested = best.degree_used;
  return best;
}

}  // namespace chebrisk
