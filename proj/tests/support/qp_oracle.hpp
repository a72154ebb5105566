#pragma once

#include "ldep/convex_solver.hpp"

#include <optional>
#include <random>

namespace ldep::testing {

struct OracleSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  int candidates = 0;  // nonsingular, feasible active sets seen
};

// Exhaustive active-set enumeration for tiny problems. Every constraint is
// either inactive, at its lower bound or at its upper bound; each choice gives
// an equality-constrained QP whose KKT system is solved with a dense LU.
// Singular systems are skipped. The best primal-feasible stationary point is
// optimal whenever the problem is bounded and the optimum is attained at a
// nonsingular face (strictly convex P, or a bounded polytope with vertices).
std::optional<OracleSolution> enumerate_active_sets(const ConvexSubproblem& p,
                                                    double feas_tol = 1e-9);

// Random instance with N <= 3 variables and K <= 4 rows that is feasible by
// construction and bounded: either P > 0 everywhere, or every variable has a
// two-sided box row.
ConvexSubproblem random_small_qp(std::mt19937_64& rng);

}  // namespace ldep::testing
