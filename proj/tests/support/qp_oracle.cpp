#include "qp_oracle.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <vector>

namespace ldep::testing {

namespace {

double plain_objective(const Eigen::VectorXd& P, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& z) {
  double v = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) v += 0.5 * P(j) * z(j) * z(j) + q(j) * z(j);
  return v;
}

}  // namespace

std::optional<OracleSolution> enumerate_active_sets(const ConvexSubproblem& p, double feas_tol) {
  const Eigen::Index N = p.q.size(), K = p.A.rows();
  const Eigen::MatrixXd A = Eigen::MatrixXd(p.A);

  // Options per row: 0 inactive, -1 at lower, +1 at upper, 2 equality.
  std::vector<std::vector<int>> options(static_cast<std::size_t>(K));
  for (Eigen::Index i = 0; i < K; ++i) {
    auto& o = options[static_cast<std::size_t>(i)];
    if (p.l(i) == p.u(i)) {
      o = {2};
      continue;
    }
    o.push_back(0);
    if (std::isfinite(p.l(i))) o.push_back(-1);
    if (std::isfinite(p.u(i))) o.push_back(1);
  }

  std::optional<OracleSolution> best;
  int seen = 0;
  std::vector<std::size_t> pick(static_cast<std::size_t>(K), 0);
  for (;;) {
    std::vector<Eigen::Index> rows;
    std::vector<double> rhs_rows;
    for (Eigen::Index i = 0; i < K; ++i) {
      const int o = options[static_cast<std::size_t>(i)][pick[static_cast<std::size_t>(i)]];
      if (o == 0) continue;
      rows.push_back(i);
      rhs_rows.push_back(o == 1 || o == 2 ? p.u(i) : p.l(i));
    }
    const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(N + k, N + k);
    Eigen::VectorXd rhs(N + k);
    KKT.topLeftCorner(N, N) = p.P.asDiagonal();
    rhs.head(N) = -p.q;
    for (Eigen::Index r = 0; r < k; ++r) {
      KKT.block(N + r, 0, 1, N) = A.row(rows[static_cast<std::size_t>(r)]);
      KKT.block(0, N + r, N, 1) = A.row(rows[static_cast<std::size_t>(r)]).transpose();
      rhs(N + r) = rhs_rows[static_cast<std::size_t>(r)];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(KKT);
    if (lu.isInvertible()) {
      const Eigen::VectorXd z = lu.solve(rhs).head(N);
      const Eigen::VectorXd Az = A * z;
      bool feasible = true;
      for (Eigen::Index i = 0; i < K && feasible; ++i) {
        if (std::isfinite(p.l(i)) && Az(i) < p.l(i) - feas_tol * (1.0 + std::abs(p.l(i))))
          feasible = false;
        if (std::isfinite(p.u(i)) && Az(i) > p.u(i) + feas_tol * (1.0 + std::abs(p.u(i))))
          feasible = false;
      }
      if (feasible) {
        ++seen;
        const double obj = plain_objective(p.P, p.q, z);
        if (!best || obj < best->objective) best = OracleSolution{z, obj, 0};
      }
    }

    Eigen::Index i = 0;
    for (; i < K; ++i) {
      auto& c = pick[static_cast<std::size_t>(i)];
      if (++c < options[static_cast<std::size_t>(i)].size()) break;
      c = 0;
    }
    if (i == K) break;
  }
  if (best) best->candidates = seen;
  return best;
}

ConvexSubproblem random_small_qp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_n(1, 3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  constexpr double inf = std::numeric_limits<double>::infinity();

  const Eigen::Index N = pick_n(rng);
  const bool strictly_convex = u01(rng) < 0.5;
  Eigen::Index K;
  if (strictly_convex) {
    K = std::uniform_int_distribution<Eigen::Index>(0, 4)(rng);
  } else {
    K = std::uniform_int_distribution<Eigen::Index>(N, 4)(rng);
  }

  ConvexSubproblem p;
  p.P.resize(N);
  p.q.resize(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    if (strictly_convex)
      p.P(j) = uni(0.5, 3.0);
    else
      p.P(j) = u01(rng) < 0.6 ? 0.0 : uni(0.1, 2.0);
    p.q(j) = uni(-3.0, 3.0);
  }

  Eigen::VectorXd z0(N);
  for (Eigen::Index j = 0; j < N; ++j) z0(j) = uni(-1.0, 1.0);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, N);
  p.l.resize(K);
  p.u.resize(K);
  const Eigen::Index boxes = strictly_convex ? 0 : N;
  Eigen::Index equalities = 0;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (i < boxes) {
      A(i, i) = 1.0;
      p.l(i) = z0(i) - uni(0.2, 2.0);
      p.u(i) = z0(i) + uni(0.2, 2.0);
      continue;
    }
    do {
      for (Eigen::Index j = 0; j < N; ++j) A(i, j) = u01(rng) < 0.25 ? 0.0 : uni(-2.0, 2.0);
    } while (A.row(i).cwiseAbs().maxCoeff() < 0.1);
    const double center = A.row(i).dot(z0);
    const double kind = u01(rng);
    // At most N - 1 equalities keep a nonsingular optimal face available.
    if (kind < 0.1 && equalities + 1 < N) {
      ++equalities;
      p.l(i) = p.u(i) = center;
    } else {
      p.l(i) = u01(rng) < 0.3 ? -inf : center - uni(0.0, 1.5);
      p.u(i) = u01(rng) < 0.3 ? inf : center + uni(0.0, 1.5);
    }
  }
  p.A = A.sparseView();
  return p;
}

}  // namespace ldep::testing
