#include "chebrisk/sdpsolver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <ostream>
#include <string>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EqRef {
  int eq;
  const SymSparse* matrix;
};

// <A, G> for symmetric sparse A and a general dense G.
double inner_general(const SymSparse& a, const MatrixXd& g) {
  double s = 0.0;
  for (const auto& e : a) {
    s += e.value * g(e.row, e.col);
    if (e.row != e.col) s += e.value * g(e.col, e.row);
  }
  return s;
}

void add_scaled(const SymSparse& a, double scale, MatrixXd& out) {
  for (const auto& e : a) {
    out(e.row, e.col) += scale * e.value;
    if (e.row != e.col) out(e.col, e.row) += scale * e.value;
  }
}

// A * G for symmetric sparse A.
MatrixXd sparse_times(const SymSparse& a, const MatrixXd& g) {
  MatrixXd out = MatrixXd::Zero(g.rows(), g.cols());
  for (const auto& e : a) {
    out.row(e.row) += e.value * g.row(e.col);
    if (e.row != e.col) out.row(e.col) += e.value * g.row(e.row);
  }
  return out;
}

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& p, const SdpSettings& s) : p_(p), s_(s) {
    nb_ = static_cast<int>(p.block_dims.size());
    m_ = static_cast<int>(p.equalities.size());
    nf_ = p.free_dim;
    by_block_.resize(nb_);
    b_ = VectorXd::Zero(m_);
    bf_ = MatrixXd::Zero(m_, nf_);
    for (int i = 0; i < m_; ++i) {
      const auto& eq = p.equalities[i];
      b_[i] = eq.rhs;
      for (const auto& t : eq.blocks) by_block_[t.block].push_back({i, &t.matrix});
      for (const auto& f : eq.free) bf_(i, f.index) += f.value;
    }
    c_.resize(nb_);
    for (int k = 0; k < nb_; ++k) c_[k] = MatrixXd::Zero(p.block_dims[k], p.block_dims[k]);
    for (const auto& t : p.objective_blocks) add_scaled(t.matrix, 1.0, c_[t.block]);
    cf_ = VectorXd::Zero(nf_);
    for (const auto& f : p.objective_free) cf_[f.index] += f.value;
    for (int k = 0; k < nb_; ++k) n_total_ += p.block_dims[k];
  }

  SdpSolution run() {
    SdpSolution sol;
    init(sol);
    const double norm_b = b_.norm();
    double norm_c = cf_.squaredNorm();
    for (const auto& c : c_) norm_c += c.squaredNorm();
    norm_c = std::sqrt(norm_c);

    int stalls = 0;
    for (int iter = 0;; ++iter) {
      sol.iterations = iter;
      residuals(sol);
      const double pobj = primal_objective(sol);
      const double dobj = b_.dot(sol.dual);
      double compl_ = 0.0;
      for (int k = 0; k < nb_; ++k) compl_ += sol.blocks[k].cwiseProduct(sol.slacks[k]).sum();
      const double mu = n_total_ > 0 ? compl_ / n_total_ : 0.0;

      sol.primal_objective = pobj;
      sol.dual_objective = dobj;
      sol.primal_infeasibility = rp_.norm() / (1.0 + norm_b);
      double dres = rf_.squaredNorm();
      for (const auto& r : rd_) dres += r.squaredNorm();
      sol.dual_infeasibility = std::sqrt(dres) / (1.0 + norm_c);
      const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
      sol.gap = std::max(std::abs(pobj - dobj), std::abs(compl_)) / denom;

      if (s_.verbose) {
        std::fprintf(stderr, "%3d pobj %+.10e dobj %+.10e pinf %.2e dinf %.2e gap %.2e\n", iter, pobj,
                     dobj, sol.primal_infeasibility, sol.dual_infeasibility, sol.gap);
      }
      if (!std::isfinite(pobj) || !std::isfinite(dobj)) {
        sol.status = SdpStatus::kNumerical;
        return sol;
      }
      if (sol.primal_infeasibility < s_.tol_feas && sol.dual_infeasibility < s_.tol_feas &&
          sol.gap < s_.tol_gap) {
        sol.status = SdpStatus::kOptimal;
        return sol;
      }
      if (iter >= s_.max_iter) {
        sol.status = SdpStatus::kMaxIter;
        return sol;
      }
      double xnorm = sol.free.norm();
      for (const auto& x : sol.blocks) xnorm = std::max(xnorm, x.norm());
      if (xnorm > 1e12 || sol.dual.norm() > 1e12) {
        sol.status = SdpStatus::kInfeasible;
        return sol;
      }

      if (!step(sol, mu)) {
        sol.status = SdpStatus::kNumerical;
        return sol;
      }
      if (last_alpha_ < 1e-8) {
        if (++stalls >= 3) {
          sol.status = SdpStatus::kNumerical;
          return sol;
        }
      } else {
        stalls = 0;
      }
    }
  }

 private:
  void init(SdpSolution& sol) {
    double max_ratio = 0.0;
    double max_anorm = 0.0;
    for (int i = 0; i < m_; ++i) {
      double an = 0.0;
      for (const auto& t : p_.equalities[i].blocks) {
        for (const auto& e : t.matrix) an += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
      }
      an = std::sqrt(an);
      max_anorm = std::max(max_anorm, an);
      max_ratio = std::max(max_ratio, (1.0 + std::abs(b_[i])) / (1.0 + an));
    }
    sol.blocks.resize(nb_);
    sol.slacks.resize(nb_);
    for (int k = 0; k < nb_; ++k) {
      const int n = p_.block_dims[k];
      const double xi = std::max({10.0, std::sqrt(static_cast<double>(n)), n * max_ratio});
      const double eta = std::max({10.0, std::sqrt(static_cast<double>(n)), max_anorm, c_[k].norm()});
      sol.blocks[k] = xi * MatrixXd::Identity(n, n);
      sol.slacks[k] = eta * MatrixXd::Identity(n, n);
    }
    sol.free = VectorXd::Zero(nf_);
    sol.dual = VectorXd::Zero(m_);
  }

  double primal_objective(const SdpSolution& sol) const {
    double v = cf_.dot(sol.free);
    for (int k = 0; k < nb_; ++k) v += c_[k].cwiseProduct(sol.blocks[k]).sum();
    return v;
  }

  VectorXd apply_a(const std::vector<MatrixXd>& x, const VectorXd& xf) const {
    VectorXd out = bf_ * xf;
    for (int k = 0; k < nb_; ++k) {
      for (const auto& r : by_block_[k]) out[r.eq] += inner_general(*r.matrix, x[k]);
    }
    return out;
  }

  MatrixXd apply_at(int k, const VectorXd& y) const {
    MatrixXd out = MatrixXd::Zero(p_.block_dims[k], p_.block_dims[k]);
    for (const auto& r : by_block_[k]) add_scaled(*r.matrix, y[r.eq], out);
    return out;
  }

  void residuals(const SdpSolution& sol) {
    rp_ = b_ - apply_a(sol.blocks, sol.free);
    rd_.resize(nb_);
    for (int k = 0; k < nb_; ++k) rd_[k] = c_[k] - apply_at(k, sol.dual) - sol.slacks[k];
    rf_ = cf_ - bf_.transpose() * sol.dual;
  }

  // Nesterov-Todd scaling per block: with X = L L^T, S = R R^T and
  // R^T L = U diag(lambda) V^T, G = L V diag(lambda)^{-1/2} satisfies
  // G^{-1} X G^{-T} = G^T S G = diag(lambda) and W = G G^T.
  bool factor(const SdpSolution& sol) {
    g_.resize(nb_);
    w_.resize(nb_);
    lambda_.resize(nb_);
    std::vector<Eigen::Index> row_offset;
    Eigen::Index total_rows = 0;
    for (int k = 0; k < nb_; ++k) {
      const int n = p_.block_dims[k];
      Eigen::LLT<MatrixXd> lx(sol.blocks[k]);
      Eigen::LLT<MatrixXd> ls(sol.slacks[k]);
      if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
      const MatrixXd l = lx.matrixL();
      const MatrixXd r = ls.matrixL();
      Eigen::JacobiSVD<MatrixXd> svd(r.transpose() * l, Eigen::ComputeFullV);
      lambda_[k] = svd.singularValues();
      if (lambda_[k].minCoeff() <= 0.0) return false;
      g_[k] = l * svd.matrixV() * lambda_[k].cwiseSqrt().cwiseInverse().asDiagonal();
      w_[k] = g_[k] * g_[k].transpose();
      symmetrize(w_[k]);
      // Rows of V for block k: the upper triangle of G^T A_i G for each
      // equality i touching the block, off-diagonals scaled by sqrt(2), so
      // that the Schur matrix is V^T V.
      row_offset.push_back(total_rows);
      total_rows += n * (n + 1) / 2;
    }
    MatrixXd v = MatrixXd::Zero(total_rows, m_);
    for (int k = 0; k < nb_; ++k) {
      const int n = p_.block_dims[k];
      for (const auto& ref : by_block_[k]) {
        const MatrixXd t = g_[k].transpose() * sparse_times(*ref.matrix, g_[k]);
        Eigen::Index row = row_offset[k];
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i <= j; ++i) v(row++, ref.eq) += i == j ? t(i, j) : std::sqrt(2.0) * t(i, j);
        }
      }
    }
    // Factoring V instead of forming V^T V keeps the conditioning of the
    // Schur solve at sqrt(cond(M)); a degenerate optimum can still make V
    // rank deficient, which a small ridge row block repairs.
    if (!factor_schur(v)) return false;
    if (nf_ > 0) {
      minv_b_ = schur_solve(bf_);
      reduced_.compute(bf_.transpose() * minv_b_);
      if (reduced_.info() != Eigen::Success) return false;
    }
    return true;
  }

  bool factor_schur(const MatrixXd& v) {
    double shift = 0.0;
    const double scale = std::max(v.colwise().norm().maxCoeff(), 1e-300);
    for (;;) {
      Eigen::HouseholderQR<MatrixXd> qr;
      if (shift > 0.0) {
        MatrixXd aug(v.rows() + m_, m_);
        aug << v, MatrixXd::Identity(m_, m_) * (std::sqrt(shift) * scale);
        qr.compute(aug);
      } else {
        qr.compute(v);
      }
      schur_r_ = qr.matrixQR().topRows(m_).triangularView<Eigen::Upper>();
      const VectorXd diag = schur_r_.diagonal().cwiseAbs();
      if (diag.minCoeff() > 1e-15 * diag.maxCoeff()) return true;
      shift = shift == 0.0 ? 1e-20 : shift * 100.0;
      if (shift > 1e-10) return false;
    }
  }

  // M^{-1} b with M = R^T R.
  template <class Rhs>
  MatrixXd schur_solve(const Rhs& b) const {
    MatrixXd x = schur_r_.transpose().triangularView<Eigen::Lower>().solve(b);
    return schur_r_.triangularView<Eigen::Upper>().solve(x);
  }

  struct Direction {
    std::vector<MatrixXd> dx, ds;  // original space
    std::vector<MatrixXd> dxt, dst;  // scaled space
    VectorXd dxf, dy;
  };

  // rc is the right-hand side of the scaled complementarity equation
  // Lambda (dXt + dSt) + (dXt + dSt) Lambda = rc.
  Direction direction(const std::vector<MatrixXd>& rc) const {
    Direction d = solve_newton(rc, rp_, rd_, rf_);
    // Refinement passes on the primal equations, which otherwise drift
    // once the Schur complement becomes ill-conditioned near the optimum.
    VectorXd e = rp_ - apply_a(d.dx, d.dxf);
    for (int pass = 0; pass < 3 && e.norm() > 1e-15 * (1.0 + rp_.norm()); ++pass) {
      std::vector<MatrixXd> zero(nb_);
      for (int k = 0; k < nb_; ++k) zero[k] = MatrixXd::Zero(p_.block_dims[k], p_.block_dims[k]);
      const Direction c = solve_newton(zero, e, zero, VectorXd::Zero(nf_));
      for (int k = 0; k < nb_; ++k) {
        d.dx[k] += c.dx[k];
        d.ds[k] += c.ds[k];
        d.dxt[k] += c.dxt[k];
        d.dst[k] += c.dst[k];
      }
      d.dxf += c.dxf;
      d.dy += c.dy;
      const VectorXd e_next = rp_ - apply_a(d.dx, d.dxf);
      if (e_next.norm() >= 0.5 * e.norm()) break;
      e = e_next;
    }
    return d;
  }

  Direction solve_newton(const std::vector<MatrixXd>& rc, const VectorXd& rp,
                         const std::vector<MatrixXd>& rd, const VectorXd& rf) const {
    Direction d;
    // dXt + dSt = H, so dX = G H G^T - W dS W with dS = rd - A^T dy.
    std::vector<MatrixXd> base(nb_);
    VectorXd r1 = rp;
    for (int k = 0; k < nb_; ++k) {
      const auto& lam = lambda_[k];
      const int n = p_.block_dims[k];
      MatrixXd h(n, n);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) h(i, j) = rc[k](i, j) / (lam[i] + lam[j]);
      }
      base[k] = g_[k] * h * g_[k].transpose() - w_[k] * rd[k] * w_[k];
      symmetrize(base[k]);
      for (const auto& r : by_block_[k]) r1[r.eq] -= inner_general(*r.matrix, base[k]);
    }
    const VectorXd minv_r1 = schur_solve(r1);
    if (nf_ > 0) {
      d.dxf = reduced_.solve(bf_.transpose() * minv_r1 - rf);
      d.dy = minv_r1 - minv_b_ * d.dxf;
    } else {
      d.dxf = VectorXd::Zero(0);
      d.dy = minv_r1;
    }
    d.dx.resize(nb_);
    d.ds.resize(nb_);
    d.dxt.resize(nb_);
    d.dst.resize(nb_);
    for (int k = 0; k < nb_; ++k) {
      d.ds[k] = rd[k] - apply_at(k, d.dy);
      d.dx[k] = base[k] + w_[k] * (rd[k] - d.ds[k]) * w_[k];
      symmetrize(d.dx[k]);
      d.dst[k] = g_[k].transpose() * d.ds[k] * g_[k];
      symmetrize(d.dst[k]);
      // dXt = H - dSt, which avoids forming G^{-1}.
      const int n = p_.block_dims[k];
      MatrixXd h(n, n);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) h(i, j) = rc[k](i, j) / (lambda_[k][i] + lambda_[k][j]);
      }
      d.dxt[k] = h - d.dst[k];
      symmetrize(d.dxt[k]);
    }
    return d;
  }

  // Largest step keeping diag(lambda) + alpha * dt PSD, or +inf.
  static double scaled_max_step(const VectorXd& lam, const MatrixXd& dt) {
    if (lam.size() == 0) return std::numeric_limits<double>::infinity();
    const VectorXd s = lam.cwiseSqrt().cwiseInverse();
    MatrixXd m = s.asDiagonal() * dt * s.asDiagonal();
    symmetrize(m);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
  }

  void step_lengths(const Direction& d, double& ap, double& ad) const {
    double mp = std::numeric_limits<double>::infinity();
    double md = mp;
    for (int k = 0; k < nb_; ++k) {
      mp = std::min(mp, scaled_max_step(lambda_[k], d.dxt[k]));
      md = std::min(md, scaled_max_step(lambda_[k], d.dst[k]));
    }
    ap = std::min(1.0, s_.step_frac * mp);
    ad = std::min(1.0, s_.step_frac * md);
  }

  bool step(SdpSolution& sol, double mu) {
    if (!factor(sol)) return false;
    std::vector<MatrixXd> rc(nb_);
    double sigma = 0.1;
    double ap = 0.0;
    double ad = 0.0;
    auto lam2 = [&](int k) { return MatrixXd(lambda_[k].cwiseAbs2().asDiagonal()); };

    if (s_.predictor_corrector) {
      for (int k = 0; k < nb_; ++k) rc[k] = -2.0 * lam2(k);
      const Direction aff = direction(rc);
      step_lengths(aff, ap, ad);
      double mu_aff = 0.0;
      for (int k = 0; k < nb_; ++k) {
        const MatrixXd lam = lambda_[k].asDiagonal();
        mu_aff += (lam + ap * aff.dxt[k]).cwiseProduct(lam + ad * aff.dst[k]).sum();
      }
      mu_aff /= std::max(n_total_, 1);
      sigma = mu > 0.0 ? std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0) : 0.0;
      for (int k = 0; k < nb_; ++k) {
        const MatrixXd prod = aff.dxt[k] * aff.dst[k];
        const int n = p_.block_dims[k];
        rc[k] = 2.0 * sigma * mu * MatrixXd::Identity(n, n) - 2.0 * lam2(k) - prod - prod.transpose();
      }
    } else {
      for (int k = 0; k < nb_; ++k) {
        const int n = p_.block_dims[k];
        rc[k] = 2.0 * sigma * mu * MatrixXd::Identity(n, n) - 2.0 * lam2(k);
      }
    }
    const Direction d = direction(rc);
    step_lengths(d, ap, ad);
    for (int k = 0; k < nb_; ++k) {
      sol.blocks[k] += ap * d.dx[k];
      sol.slacks[k] += ad * d.ds[k];
      symmetrize(sol.blocks[k]);
      symmetrize(sol.slacks[k]);
    }
    sol.free += ap * d.dxf;
    sol.dual += ad * d.dy;
    last_alpha_ = std::min(ap, ad);
    return true;
  }

  const SdpProblem& p_;
  const SdpSettings& s_;
  int nb_ = 0;
  int m_ = 0;
  int nf_ = 0;
  int n_total_ = 0;
  std::vector<std::vector<EqRef>> by_block_;
  VectorXd b_;
  MatrixXd bf_;
  std::vector<MatrixXd> c_;
  VectorXd cf_;

  VectorXd rp_;
  std::vector<MatrixXd> rd_;
  VectorXd rf_;
  std::vector<MatrixXd> g_;
  std::vector<MatrixXd> w_;
  std::vector<VectorXd> lambda_;
  MatrixXd schur_r_;
  MatrixXd minv_b_;
  Eigen::LDLT<MatrixXd> reduced_;
  double last_alpha_ = 1.0;
};

void check_sym(const SymSparse& a, int dim) {
  for (const auto& e : a) {
    if (e.row < 0 || e.col < e.row || e.col >= dim || !std::isfinite(e.value)) {
      throw Error(ErrorKind::kValidation, "invalid symmetric entry (" + std::to_string(e.row) + ", " +
                                              std::to_string(e.col) + ") for block of size " +
                                              std::to_string(dim));
    }
  }
}

}  // namespace

void SdpProblem::validate(int max_block_dim, int max_equalities) const {
  const int nb = static_cast<int>(block_dims.size());
  long scalars = free_dim;
  for (int d : block_dims) {
    if (d < 1 || d > max_block_dim) {
      throw Error(ErrorKind::kValidation, "block dimension " + std::to_string(d) + " outside [1, " +
                                              std::to_string(max_block_dim) + "]");
    }
    scalars += static_cast<long>(d) * (d + 1) / 2;
  }
  if (free_dim < 0) throw Error(ErrorKind::kValidation, "negative free dimension");
  if (static_cast<int>(equalities.size()) > max_equalities) {
    throw Error(ErrorKind::kValidation, "too many equalities");
  }
  if (static_cast<long>(equalities.size()) > scalars) {
    throw Error(ErrorKind::kValidation, "more equalities than scalar variables");
  }
  auto check_terms = [&](const std::vector<BlockTerm>& blocks, const std::vector<FreeTerm>& free) {
    for (const auto& t : blocks) {
      if (t.block < 0 || t.block >= nb) throw Error(ErrorKind::kValidation, "block index out of range");
      check_sym(t.matrix, block_dims[t.block]);
    }
    for (const auto& f : free) {
      if (f.index < 0 || f.index >= free_dim || !std::isfinite(f.value)) {
        throw Error(ErrorKind::kValidation, "invalid free-variable term");
      }
    }
  };
  check_terms(objective_blocks, objective_free);
  for (const auto& eq : equalities) {
    check_terms(eq.blocks, eq.free);
    if (!std::isfinite(eq.rhs)) throw Error(ErrorKind::kValidation, "non-finite right-hand side");
  }
}

std::uint64_t SdpSettings::hash() const {
  // FNV-1a over the fields that influence the result.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(&tol_gap, sizeof tol_gap);
  mix(&tol_feas, sizeof tol_feas);
  mix(&max_iter, sizeof max_iter);
  mix(&step_frac, sizeof step_frac);
  const unsigned char pc = predictor_corrector ? 1 : 0;
  mix(&pc, 1);
  return h;
}

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "optimal";
    case SdpStatus::kMaxIter: return "max_iter";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kNumerical: return "numerical";
  }
  return "unknown";
}

double inner(const SymSparse& a, const Eigen::MatrixXd& x) { return inner_general(a, x); }

SdpSolution solve(const SdpProblem& problem, const SdpSettings& settings) {
  problem.validate();
  InteriorPoint ipm(problem, settings);
  return ipm.run();
}

double max_equality_residual(const SdpProblem& problem, const SdpSolution& solution) {
  double worst = 0.0;
  for (const auto& eq : problem.equalities) {
    double lhs = 0.0;
    for (const auto& t : eq.blocks) lhs += inner_general(t.matrix, solution.blocks[t.block]);
    for (const auto& f : eq.free) lhs += f.value * solution.free[f.index];
    worst = std::max(worst, std::abs(lhs - eq.rhs));
  }
  return worst;
}

void write_triplets(const SdpProblem& problem, std::ostream& os) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "blocks";
  for (int d : problem.block_dims) os << ' ' << d;
  os << "\nfree " << problem.free_dim << "\n";
  auto emit = [&](int con, const std::vector<BlockTerm>& blocks, const std::vector<FreeTerm>& free) {
    for (const auto& f : free) {
      os << con << " 0 " << f.index + 1 << ' ' << f.index + 1 << ' ' << num(f.value) << "\n";
    }
    for (const auto& t : blocks) {
      for (const auto& e : t.matrix) {
        os << con << ' ' << t.block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << num(e.value) << "\n";
      }
    }
  };
  emit(0, problem.objective_blocks, problem.objective_free);
  for (std::size_t i = 0; i < problem.equalities.size(); ++i) {
    emit(static_cast<int>(i) + 1, problem.equalities[i].blocks, problem.equalities[i].free);
  }
  for (std::size_t i = 0; i < problem.equalities.size(); ++i) {
    os << "rhs " << i + 1 << ' ' << num(problem.equalities[i].rhs) << "\n";
  }
}

}  // namespace chebrisk
