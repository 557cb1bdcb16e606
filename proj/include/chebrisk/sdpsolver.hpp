#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace chebrisk {

/// One stored entry of a symmetric matrix; row <= col. An off-diagonal
/// entry stands for both (row, col) and (col, row).
struct SymEntry {
  int row;
  int col;
  double value;
};

using SymSparse = std::vector<SymEntry>;

struct BlockTerm {
  int block;
  SymSparse matrix;
};

struct FreeTerm {
  int index;
  double value;
};

/// sum_b <A_b, X_b> + sum_f a_f x_f = rhs
struct SdpEquality {
  std::vector<BlockTerm> blocks;
  std::vector<FreeTerm> free;
  double rhs = 0.0;
};

/// min sum_b <C_b, X_b> + c_f . x_f subject to linear equalities,
/// X_b symmetric PSD and x_f free.
struct SdpProblem {
  std::vector<int> block_dims;
  int free_dim = 0;
  std::vector<BlockTerm> objective_blocks;
  std::vector<FreeTerm> objective_free;
  std::vector<SdpEquality> equalities;

  /// Throws kValidation on inconsistent dimensions or non-finite data.
  void validate(int max_block_dim = 200, int max_equalities = 5000) const;
};

struct SdpSettings {
  double tol_gap = 1e-8;
  double tol_feas = 1e-9;
  int max_iter = 100;
  double step_frac = 0.98;
  bool predictor_corrector = true;
  bool verbose = false;

  /// Stable fingerprint of the settings, used in certificate cache keys.
  std::uint64_t hash() const;
};

enum class SdpStatus { kOptimal, kMaxIter, kInfeasible, kNumerical };
std::string_view to_string(SdpStatus s);

struct SdpSolution {
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd free;
  Eigen::VectorXd dual;
  std::vector<Eigen::MatrixXd> slacks;
  SdpStatus status = SdpStatus::kNumerical;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

SdpSolution solve(const SdpProblem& problem, const SdpSettings& settings = {});

/// <A, X> for a sparse symmetric A.
double inner(const SymSparse& a, const Eigen::MatrixXd& x);

/// Max |lhs - rhs| over the equalities, evaluated directly from the data.
double max_equality_residual(const SdpProblem& problem, const SdpSolution& solution);

/// Plain-text triplet dump: `blocks`/`free` headers, then one line per
/// nonzero `<con> <block> <row> <col> <value>` (con 0 is the objective,
/// block 0 is the free vector with row == col == index, 1-based), then
/// `rhs <con> <value>` lines.
void write_triplets(const SdpProblem& problem, std::ostream& os);

}  // namespace chebrisk
