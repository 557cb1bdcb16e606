#include "chebrisk/sosapprox.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

SymSparse negated(const SymSparse& a) {
  SymSparse out = a;
  for (auto& e : out) e.value = -e.value;
  return out;
}

// Sums duplicate (row, col) entries.
SymSparse merge(const SymSparse& a) {
  std::map<std::pair<int, int>, double> acc;
  for (const auto& e : a) acc[{e.row, e.col}] += e.value;
  SymSparse out;
  for (const auto& [rc, v] : acc) {
    if (v != 0.0) out.push_back({rc.first, rc.second, v});
  }
  return out;
}

// Coefficients c_k reconstructed from a Gram pair: <A_k, Q> + <B_k, Q'>.
std::vector<double> reconstruct(const std::vector<SymSparse>& a, const Eigen::MatrixXd& q,
                                const std::vector<SymSparse>& b, const Eigen::MatrixXd& qb, int d) {
  std::vector<double> out(d + 1, 0.0);
  for (int k = 0; k <= d; ++k) {
    if (k < static_cast<int>(a.size())) out[k] += inner(a[k], q);
    if (k < static_cast<int>(b.size())) out[k] += inner(b[k], qb);
  }
  return out;
}

}  // namespace

IntervalSet::IntervalSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!(iv.lo <= iv.hi) || iv.lo < -1.0 || iv.hi > 1.0) {
      throw Error(ErrorKind::kValidation, "interval [" + std::to_string(iv.lo) + ", " +
                                              std::to_string(iv.hi) + "] is not inside [-1,1]");
    }
    if (i > 0 && !(intervals_[i - 1].hi < iv.lo)) {
      throw Error(ErrorKind::kValidation, "intervals must be sorted and disjoint");
    }
  }
}

IntervalSet IntervalSet::single(double lo, double hi) { return IntervalSet({{lo, hi}}); }

bool IntervalSet::contains(double z) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [z](const Interval& iv) { return iv.lo <= z && z <= iv.hi; });
}

double IntervalSet::measure() const {
  double m = 0.0;
  for (const auto& iv : intervals_) m += iv.hi - iv.lo;
  return m;
}

IntervalSet IntervalSet::complement() const {
  std::vector<Interval> out;
  double start = -1.0;
  for (const auto& iv : intervals_) {
    if (iv.lo == iv.hi) continue;  // empty interior
    if (iv.lo > start) out.push_back({start, iv.lo});
    start = iv.hi;
  }
  if (start < 1.0) out.push_back({start, 1.0});
  return IntervalSet(std::move(out));
}

std::string IntervalSet::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "{";
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (i) os << ", ";
    os << "[" << intervals_[i].lo << ", " << intervals_[i].hi << "]";
  }
  os << "}";
  return os.str();
}

int effective_degree(int requested) {
  const int d = std::max(requested, 2);
  return d % 2 == 0 ? d : d + 1;
}

ChebSeries interval_multiplier(double a, double b) {
  // -z^2 + (a+b) z - ab with z^2 = (T_0 + T_2) / 2
  return ChebSeries({-0.5 - a * b, a + b, -0.5});
}

std::vector<SymSparse> gram_to_cheb_map(int n, const ChebSeries& multiplier) {
  const int gdeg = multiplier.degree();
  const int out_deg = 2 * (n - 1) + gdeg;
  std::vector<std::map<std::pair<int, int>, double>> acc(out_deg + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<double> tt(i + j + 1, 0.0);
      tt[i + j] += 0.5;
      tt[j - i] += 0.5;
      const ChebSeries prod = cheb_mul(ChebSeries(std::move(tt)), multiplier);
      for (int k = 0; k <= prod.degree(); ++k) {
        if (prod[k] != 0.0) acc[k][{i, j}] += prod[k];
      }
    }
  }
  std::vector<SymSparse> out(out_deg + 1);
  for (int k = 0; k <= out_deg; ++k) {
    for (const auto& [ij, v] : acc[k]) out[k].push_back({ij.first, ij.second, v});
  }
  return out;
}

SosProgram build_sdp(const IntervalSet& target, int degree) {
  if (target.empty()) throw Error(ErrorKind::kValidation, "build_sdp needs a non-empty target");
  SosProgram prog;
  prog.target = target;
  prog.degree = effective_degree(degree);
  prog.degree_rounded = prog.degree != degree;
  const int d = prog.degree;
  const int n_full = d / 2 + 1;
  const int n_mult = d / 2;

  const auto a_square = gram_to_cheb_map(n_full, ChebSeries({1.0}));
  const auto a_box = gram_to_cheb_map(n_mult, interval_multiplier(-1.0, 1.0));

  auto& sdp = prog.sdp;
  sdp.block_dims = {n_full, n_mult};
  for (std::size_t i = 0; i < target.intervals().size(); ++i) {
    sdp.block_dims.push_back(n_full);
    sdp.block_dims.push_back(n_mult);
  }
  // c_k = <A_k, Q0> + <B_k, Q1>, so the objective sum_k w_k c_k lives on
  // blocks 0 and 1 and each interval contributes c_k - (its pair) = delta_k0.
  const auto w = cheb_integral_weights(d);
  auto accumulate = [](SymSparse& out, const SymSparse& a, double scale) {
    for (const auto& e : a) out.push_back({e.row, e.col, scale * e.value});
  };
  SymSparse obj0, obj1;
  for (int k = 0; k <= d; ++k) {
    if (w[k] == 0.0) continue;
    accumulate(obj0, a_square[k], w[k]);
    if (k < static_cast<int>(a_box.size())) accumulate(obj1, a_box[k], w[k]);
  }
  sdp.objective_blocks = {{0, merge(obj0)}, {1, merge(obj1)}};

  int block = 2;
  for (const auto& iv : target.intervals()) {
    const auto a_mult = gram_to_cheb_map(n_mult, interval_multiplier(iv.lo, iv.hi));
    for (int k = 0; k <= d; ++k) {
      SdpEquality eq;
      if (!a_square[k].empty()) {
        eq.blocks.push_back({0, a_square[k]});
        eq.blocks.push_back({block, negated(a_square[k])});
      }
      if (k < static_cast<int>(a_box.size()) && !a_box[k].empty()) eq.blocks.push_back({1, a_box[k]});
      if (k < static_cast<int>(a_mult.size()) && !a_mult[k].empty()) {
        eq.blocks.push_back({block + 1, negated(a_mult[k])});
      }
      eq.rhs = k == 0 ? 1.0 : 0.0;
      sdp.equalities.push_back(std::move(eq));
    }
    block += 2;
  }
  return prog;
}

IndicatorCertificate approximate_indicator(const IntervalSet& target, int degree,
                                           const SdpSettings& settings) {
  IndicatorCertificate cert;
  cert.target = target;
  cert.degree = effective_degree(degree);
  cert.degree_rounded = cert.degree != degree;
  if (target.empty()) {
    cert.coeffs = ChebSeries(std::vector<double>(cert.degree + 1, 0.0));
    cert.solver_status = SdpStatus::kOptimal;
    return cert;
  }
  const auto start = std::chrono::steady_clock::now();
  const SosProgram prog = build_sdp(target, degree);
  const SdpSolution sol = solve(prog.sdp, settings);
  cert.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const int d = cert.degree;
  cert.coeffs = ChebSeries(reconstruct(gram_to_cheb_map(d / 2 + 1, ChebSeries({1.0})), sol.blocks[0],
                                       gram_to_cheb_map(d / 2, interval_multiplier(-1.0, 1.0)),
                                       sol.blocks[1], d));
  cert.gram_blocks = sol.blocks;
  cert.objective_value = sol.primal_objective;
  cert.solver_status = sol.status;
  cert.iterations = sol.iterations;
  cert.residuals.primal = sol.primal_infeasibility;
  cert.residuals.dual = sol.dual_infeasibility;
  cert.residuals.gap = sol.gap;
  const auto audit = validate_certificate(cert, 10000);
  cert.residuals.min_eig = audit.min_gram_eig;
  cert.residuals.grid_violation = audit.grid_violation;
  return cert;
}

CertificateAudit validate_certificate(const IndicatorCertificate& cert, int grid_n,
                                      const AuditTolerances& tol) {
  if (grid_n < 2) throw Error(ErrorKind::kValidation, "audit grid needs at least two points");
  CertificateAudit audit;
  auto grid_min = [&](double lo, double hi, double shift) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_n; ++i) {
      const double z = lo + (hi - lo) * static_cast<double>(i) / (grid_n - 1);
      m = std::min(m, cheb_eval(cert.coeffs, z) - shift);
    }
    return m;
  };
  audit.min_box = grid_min(-1.0, 1.0, 0.0);
  audit.min_target = std::numeric_limits<double>::infinity();
  for (const auto& iv : cert.target.intervals()) audit.min_target = std::min(audit.min_target, grid_min(iv.lo, iv.hi, 1.0));
  if (cert.target.empty()) audit.min_target = 0.0;
  audit.grid_violation = std::max({0.0, -audit.min_box, -audit.min_target});

  audit.min_gram_eig = cert.gram_blocks.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& q : cert.gram_blocks) {
    if (q.rows() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
    audit.min_gram_eig = std::min(audit.min_gram_eig, es.eigenvalues().minCoeff());
  }

  const int d = cert.degree;
  const std::size_t n_int = cert.target.intervals().size();
  if (!cert.gram_blocks.empty()) {
    if (cert.gram_blocks.size() != 2 + 2 * n_int) {
      audit.failure = "gram block count does not match the target";
      return audit;
    }
    const auto a_square = gram_to_cheb_map(d / 2 + 1, ChebSeries({1.0}));
    const auto a_box = gram_to_cheb_map(d / 2, interval_multiplier(-1.0, 1.0));
    auto compare = [&](const std::vector<double>& rec, double shift) {
      for (int k = 0; k <= d; ++k) {
        const double expected = cert.coeffs[k] - (k == 0 ? shift : 0.0);
        audit.recon_residual = std::max(audit.recon_residual, std::abs(rec[k] - expected));
      }
    };
    compare(reconstruct(a_square, cert.gram_blocks[0], a_box, cert.gram_blocks[1], d), 0.0);
    for (std::size_t i = 0; i < n_int; ++i) {
      const auto& iv = cert.target.intervals()[i];
      const auto a_mult = gram_to_cheb_map(d / 2, interval_multiplier(iv.lo, iv.hi));
      compare(reconstruct(a_square, cert.gram_blocks[2 + 2 * i], a_mult, cert.gram_blocks[3 + 2 * i], d), 1.0);
    }
  } else if (cert.target.empty()) {
    for (double c : cert.coeffs.coeffs()) audit.recon_residual = std::max(audit.recon_residual, std::abs(c));
  }

  std::ostringstream why;
  if (audit.grid_violation > tol.feas) why << "grid violation " << audit.grid_violation << "; ";
  if (audit.min_gram_eig < -tol.psd) why << "gram eigenvalue " << audit.min_gram_eig << "; ";
  if (audit.recon_residual > tol.recon) why << "reconstruction residual " << audit.recon_residual << "; ";
  audit.failure = why.str();
  audit.passed = audit.failure.empty();
  return audit;
}

}  // namespace chebrisk
