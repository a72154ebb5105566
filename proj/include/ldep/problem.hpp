#pragma once

#include "ldep/convex_solver.hpp"
#include "ldep/morpho.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ldep {

/// Penalty convex-concave schedule. Slack penalties start at tau0 and grow by
/// mu per iteration up to tau_max; tau_max == tau0 freezes the penalty.
struct CcpSchedule {
  double tau0 = 0.005;
  double mu = 1.2;
  double tau_max = 1e8;
  int max_iters = 100;
  double tol_obj = 1e-5;
  double tol_slack = 1e-4;

  void validate() const;
};

struct TrainConfig {
  double C = 1.0;
  double alpha = 1.0;
  double lambda_w = 5e-4;
  double lambda_m = 5e-4;
  int n1 = 4;
  int n2 = 3;
  CcpSchedule ccp;
  // Subproblems are solved to 1e-4. Tighter tolerances cost an order of
  // magnitude more ADMM iterations on these degenerate LPs without changing
  // the trained classifier.
  SolverConfig solver = default_subproblem_solver();
  std::uint64_t seed = 0;
  // Replaces the built-in solver for subproblems when set.
  std::function<Solution(const ConvexSubproblem&, const SolverConfig&, const WarmStart&)>
      subproblem_solver;

  static SolverConfig default_subproblem_solver() {
    SolverConfig s;
    s.eps_abs = 1e-4;
    s.eps_rel = 1e-4;
    return s;
  }

  void validate() const;
};

/// Feature rows with labels in {-1, +1}.
struct Dataset {
  Matrix X;
  std::vector<int> y;

  Dataset() = default;
  Dataset(Matrix X_, std::vector<int> y_);

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
  Eigen::Index count(int label) const;

  void validate() const;
  bool operator==(const Dataset& other) const = default;
};

double hinge_sum(const VectorRef& xi);

/// lambda * ((1 - alpha) * ||A||_F^2 + alpha * sum |A_ij|)
double elastic_net(const Matrix& A, double lambda, double alpha);

/// Residual of the margin constraint of one sample; <= 0 iff satisfied.
///   label -1:  f(x) + 1 - g(x) - xi
///   label +1:  g(x) + 1 - f(x) - xi
/// with f, g the dilation and erosion side maxima.
double dc_residual(const LDepModel& m, const VectorRef& x, int label, double xi);

/// (C / m) sum max(xi_k, 0) + r_W + r_M
double objective(const LDepModel& m, const VectorRef& xi, const TrainConfig& cfg,
                 Eigen::Index sample_count);

double regularization(const LDepModel& m, const TrainConfig& cfg);

/// Training objective of a model with each slack at its smallest feasible
/// value, xi_k = dc_residual(m, x_k, y_k, 0).
double training_objective(const LDepModel& m, const Dataset& data, const TrainConfig& cfg);

}  // namespace ldep
