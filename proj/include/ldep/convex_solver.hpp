#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <optional>
#include <string>

namespace ldep {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// minimize 1/2 z^T diag(P) z + q^T z  subject to  l <= A z <= u
///
/// Bounds may be +-infinity. P must be entrywise nonnegative.
struct ConvexSubproblem {
  Eigen::VectorXd P;
  Eigen::VectorXd q;
  SparseMatrix A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  Eigen::Index num_vars() const { return q.size(); }
  Eigen::Index num_constraints() const { return A.rows(); }

  void validate() const;
};

double objective_value(const ConvexSubproblem& p, const Eigen::VectorXd& z);

struct SolverConfig {
  double rho = 0.1;
  double sigma = 1e-6;
  double relaxation = 1.6;
  double eps_abs = 1e-6;
  // Added to eps_abs after multiplying by the magnitude of the terms of each
  // residual. Zero keeps the tolerances absolute.
  double eps_rel = 0.0;
  double eps_infeasible = 1e-12;
  int max_iter = 50000;
  int check_every = 25;
  int scaling_passes = 10;
  bool adaptive_rho = true;
  bool polish = true;

  void validate() const;
};

enum class SolveStatus { Solved, MaxIter, Infeasible };

const char* to_string(SolveStatus s);

struct Solution {
  Eigen::VectorXd z;  // primal
  Eigen::VectorXd y;  // constraint multipliers, positive at the upper bound
  SolveStatus status = SolveStatus::MaxIter;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool polished = false;
  // Normalized dual ray proving primal infeasibility; empty unless Infeasible.
  Eigen::VectorXd certificate;
};

struct WarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd y;
};

/// ADMM operator splitting on the equilibrated problem with over-relaxation,
/// adaptive step size and an active-set polishing pass. Residuals in the
/// returned Solution are always measured on the original (unscaled) data.
Solution solve(const ConvexSubproblem& p, const SolverConfig& cfg = {},
               const std::optional<WarmStart>& warm = std::nullopt);

struct KktResiduals {
  double primal = 0.0;  // ||clip(Az, l, u) - Az||_inf
  double dual = 0.0;    // ||P z + q + A^T y||_inf
};

KktResiduals kkt_residuals(const ConvexSubproblem& p, const Solution& s);
KktResiduals kkt_residuals(const ConvexSubproblem& p, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& y);

/// Plain-text dump for cross-checking against other solvers. See README for
/// the layout.
void write_debug_dump(const ConvexSubproblem& p, std::ostream& out);
void write_debug_dump(const ConvexSubproblem& p, const std::string& path);

}  // namespace ldep
