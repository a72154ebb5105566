#include "ldep/convex_solver.hpp"

#include "ldep/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace ldep {
namespace {

using Vec = Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityScale = 1e3;
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kAdaptThreshold = 5.0;
constexpr double kPolishDelta = 1e-7;
constexpr int kPolishRefineIters = 10;
constexpr int kPolishRounds = 3;
constexpr double kTiny = 1e-30;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Vec clip(const Vec& v, const Vec& lo, const Vec& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

double limit_scaling(double v) {
  if (v < kMinScaling) return 1.0;
  return std::min(v, kMaxScaling);
}

// Max-abs of each column of A (variables) and each row of A (constraints).
void abs_max_norms(const SparseMatrix& A, Vec& col, Vec& row) {
  col.setZero(A.cols());
  row.setZero(A.rows());
  for (int j = 0; j < A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
      const double v = std::abs(it.value());
      col(j) = std::max(col(j), v);
      row(it.row()) = std::max(row(it.row()), v);
    }
  }
}

/// Equilibrated copy of the problem. Original quantities are recovered as
///   z = D zbar,  (Az) = E^-1 (Abar zbar),  y = E ybar / c.
struct ScaledProblem {
  Vec P, q, l, u;
  SparseMatrix A;
  Vec D, E;
  double c = 1.0;
};

ScaledProblem equilibrate(const ConvexSubproblem& p, int passes) {
  ScaledProblem s;
  s.P = p.P;
  s.q = p.q;
  s.A = p.A;
  s.D = Vec::Ones(p.num_vars());
  s.E = Vec::Ones(p.num_constraints());
  Vec col, row;
  for (int pass = 0; pass < passes; ++pass) {
    abs_max_norms(s.A, col, row);
    Vec d(col.size()), e(row.size());
    for (Eigen::Index j = 0; j < d.size(); ++j)
      d(j) = 1.0 / std::sqrt(limit_scaling(std::max(col(j), std::abs(s.P(j)))));
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = 1.0 / std::sqrt(limit_scaling(row(i)));

    s.P = d.cwiseProduct(s.P).cwiseProduct(d);
    s.q = d.cwiseProduct(s.q);
    s.A = e.asDiagonal() * s.A * d.asDiagonal();
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);

    const double p_mean = s.P.size() ? s.P.cwiseAbs().mean() : 0.0;
    const double gamma = 1.0 / limit_scaling(std::max(p_mean, inf_norm(s.q)));
    s.P *= gamma;
    s.q *= gamma;
    s.c *= gamma;
  }
  s.l = s.E.cwiseProduct(p.l);
  s.u = s.E.cwiseProduct(p.u);
  return s;
}

struct Tolerances {
  double primal;
  double dual;
};

struct Residuals {
  double primal = kInf;
  double dual = kInf;
  Tolerances tol{0.0, 0.0};
};

class AdmmSolver {
 public:
  AdmmSolver(const ConvexSubproblem& p, const SolverConfig& cfg)
      : orig_(p), cfg_(cfg), s_(equilibrate(p, cfg.scaling_passes)) {
    const Eigen::Index n = p.num_vars(), k = p.num_constraints();
    x_ = Vec::Zero(n);
    z_ = Vec::Zero(k);
    y_ = Vec::Zero(k);
    At_ = s_.A.transpose();
    a_rows_ = s_.A;
    rho_scalar_ = std::clamp(cfg.rho, kRhoMin, kRhoMax);
    update_rho_vector();
    factor();
  }

  void warm_start(const WarmStart& w) {
    if (w.z.size() == x_.size()) x_ = w.z.cwiseQuotient(s_.D);
    if (w.y.size() == y_.size()) y_ = s_.c * w.y.cwiseQuotient(s_.E);
    z_ = clip(s_.A * x_, s_.l, s_.u);
  }

  Solution run() {
    Solution out;
    Residuals res;
    Vec y_prev = y_;
    std::vector<signed char> prev_set, last_polish_set;
    const int max_iter = cfg_.max_iter;

    for (int it = 1; it <= max_iter; ++it) {
      const bool check = it % cfg_.check_every == 0 || it == max_iter;
      if (check) y_prev = y_;
      step();
      if (!check) continue;

      res = residuals();
      if (!x_.allFinite() || !y_.allFinite()) break;
      if (res.primal <= res.tol.primal && res.dual <= res.tol.dual) {
        out = unscaled(SolveStatus::Solved, it);
        if (cfg_.polish) try_polish(out, /*require_tolerance=*/false);
        return out;
      }
      if (primal_infeasible(y_ - y_prev, out.certificate)) {
        Solution inf = unscaled(SolveStatus::Infeasible, it);
        inf.certificate = out.certificate;
        return inf;
      }
      if (cfg_.polish) {
        // Polish once the guessed active set has held for two checks.
        std::vector<signed char> set = active_set();
        const bool settled = set == prev_set && set != last_polish_set;
        prev_set = std::move(set);
        if (settled) {
          last_polish_set = prev_set;
          Solution candidate = unscaled(SolveStatus::MaxIter, it);
          if (try_polish(candidate, /*require_tolerance=*/true)) {
            candidate.status = SolveStatus::Solved;
            return candidate;
          }
        }
      }
      if (cfg_.adaptive_rho) adapt_rho();
    }
    out = unscaled(SolveStatus::MaxIter, max_iter);
    return out;
  }

 private:
  void update_rho_vector() {
    rho_.resize(s_.l.size());
    for (Eigen::Index i = 0; i < rho_.size(); ++i) {
      const bool lo_inf = std::isinf(s_.l(i)), hi_inf = std::isinf(s_.u(i));
      if (lo_inf && hi_inf)
        rho_(i) = kRhoMin;
      else if (s_.l(i) == s_.u(i))
        rho_(i) = kRhoEqualityScale * rho_scalar_;
      else
        rho_(i) = rho_scalar_;
    }
  }

  void factor() {
    SparseMatrix K = At_ * rho_.asDiagonal() * s_.A;
    Vec diag = s_.P.array() + cfg_.sigma;
    SparseMatrix Dg(diag.size(), diag.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(diag.size());
    for (Eigen::Index j = 0; j < diag.size(); ++j) trip.emplace_back(j, j, diag(j));
    Dg.setFromTriplets(trip.begin(), trip.end());
    K += Dg;
    llt_.compute(K);
    if (llt_.info() != Eigen::Success)
      throw Error(ErrorKind::Solver, "ADMM linear system factorization failed");
  }

  void step() {
    const double alpha = cfg_.relaxation;
    const Vec rhs = cfg_.sigma * x_ - s_.q + At_ * (rho_.cwiseProduct(z_) - y_);
    const Vec x_tilde = llt_.solve(rhs);
    const Vec z_tilde = s_.A * x_tilde;
    x_ = alpha * x_tilde + (1.0 - alpha) * x_;
    const Vec z_relaxed = alpha * z_tilde + (1.0 - alpha) * z_;
    const Vec z_next = clip(z_relaxed + y_.cwiseQuotient(rho_), s_.l, s_.u);
    y_ += rho_.cwiseProduct(z_relaxed - z_next);
    z_ = z_next;
  }

  Residuals residuals() const {
    Residuals r;
    const Vec x = s_.D.cwiseProduct(x_);
    const Vec z = z_.cwiseQuotient(s_.E);
    const Vec y = s_.E.cwiseProduct(y_) / s_.c;
    const Vec Ax = orig_.A * x;
    const Vec Px = orig_.P.cwiseProduct(x);
    const Vec Aty = orig_.A.transpose() * y;
    r.primal = inf_norm(Ax - z);
    r.dual = inf_norm(Px + orig_.q + Aty);
    r.tol.primal = cfg_.eps_abs + cfg_.eps_rel * std::max(inf_norm(Ax), inf_norm(z));
    r.tol.dual =
        cfg_.eps_abs + cfg_.eps_rel * std::max({inf_norm(Px), inf_norm(Aty), inf_norm(orig_.q)});
    return r;
  }

  void adapt_rho() {
    const Vec Ax = s_.A * x_;
    const Vec Px = s_.P.cwiseProduct(x_);
    const Vec Aty = At_ * y_;
    const double prim = inf_norm(Ax - z_) / std::max({inf_norm(Ax), inf_norm(z_), kTiny});
    const double dual =
        inf_norm(Px + s_.q + Aty) / std::max({inf_norm(Px), inf_norm(Aty), inf_norm(s_.q), kTiny});
    if (prim <= kTiny || dual <= kTiny) return;
    const double proposed = std::clamp(rho_scalar_ * std::sqrt(prim / dual), kRhoMin, kRhoMax);
    if (proposed > rho_scalar_ * kAdaptThreshold || proposed < rho_scalar_ / kAdaptThreshold) {
      rho_scalar_ = proposed;
      update_rho_vector();
      factor();
    }
  }

  // Dual ray test on the last iterate difference, projected onto the polar
  // of the recession cone of [l, u].
  bool primal_infeasible(Vec dy, Vec& certificate) const {
    for (Eigen::Index i = 0; i < dy.size(); ++i) {
      const bool lo_inf = std::isinf(s_.l(i)), hi_inf = std::isinf(s_.u(i));
      if (lo_inf && hi_inf)
        dy(i) = 0.0;
      else if (hi_inf)
        dy(i) = std::min(dy(i), 0.0);
      else if (lo_inf)
        dy(i) = std::max(dy(i), 0.0);
    }
    dy = s_.E.cwiseProduct(dy);
    const double norm = inf_norm(dy);
    if (norm <= kTiny) return false;
    dy /= norm;
    const double eps = cfg_.eps_infeasible;
    if (inf_norm(orig_.A.transpose() * dy) > eps) return false;
    double support = 0.0;
    for (Eigen::Index i = 0; i < dy.size(); ++i) {
      if (dy(i) > 0.0) support += orig_.u(i) * dy(i);
      if (dy(i) < 0.0) support += orig_.l(i) * dy(i);
    }
    if (!(support < -eps)) return false;
    certificate = dy;
    return true;
  }

  // -1 lower active, +1 upper active, 2 equality, 0 inactive.
  std::vector<signed char> active_set() const {
    std::vector<signed char> set(static_cast<std::size_t>(z_.size()), 0);
    for (Eigen::Index i = 0; i < z_.size(); ++i) {
      if (s_.l(i) == s_.u(i))
        set[i] = 2;
      else if (z_(i) - s_.l(i) < -y_(i))
        set[i] = -1;
      else if (s_.u(i) - z_(i) < y_(i))
        set[i] = 1;
    }
    return set;
  }

  Solution unscaled(SolveStatus status, int iterations) const {
    Solution s;
    s.z = s_.D.cwiseProduct(x_);
    s.y = s_.E.cwiseProduct(y_) / s_.c;
    s.status = status;
    s.iterations = iterations;
    const KktResiduals r = kkt_residuals(orig_, s.z, s.y);
    s.primal_residual = r.primal;
    s.dual_residual = r.dual;
    return s;
  }

  // Equality-constrained QP on `set`, solved through the regularized
  // quasi-definite KKT system with iterative refinement. Returns scaled
  // (xbar, ybar) or false if the factorization breaks down.
  bool solve_reduced(const std::vector<signed char>& set, Vec& xbar, Vec& ybar) const {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(set.size()); ++i)
      if (set[i] != 0) rows.push_back(i);
    const Eigen::Index n = x_.size();
    const Eigen::Index na = static_cast<Eigen::Index>(rows.size());
    std::vector<Eigen::Triplet<double>> trip, trip_exact;
    for (Eigen::Index j = 0; j < n; ++j) {
      trip.emplace_back(j, j, s_.P(j) + kPolishDelta);
      if (s_.P(j) != 0.0) trip_exact.emplace_back(j, j, s_.P(j));
    }
    Vec rhs(n + na);
    rhs.head(n) = -s_.q;
    for (Eigen::Index r = 0; r < na; ++r) {
      const Eigen::Index i = rows[r];
      for (RowMajorSparse::InnerIterator it(a_rows_, i); it; ++it) {
        trip.emplace_back(n + r, it.col(), it.value());
        trip_exact.emplace_back(n + r, it.col(), it.value());
      }
      trip.emplace_back(n + r, n + r, -kPolishDelta);
      rhs(n + r) = set[i] == 1 ? s_.u(i) : s_.l(i);
    }
    // Symmetric quasi-definite; only the lower triangle is referenced.
    SparseMatrix K(n + na, n + na), K0(n + na, n + na);
    K.setFromTriplets(trip.begin(), trip.end());
    K0.setFromTriplets(trip_exact.begin(), trip_exact.end());
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt(K);
    if (ldlt.info() != Eigen::Success) return false;
    Vec sol = ldlt.solve(rhs);
    for (int k = 0; k < kPolishRefineIters; ++k) {
      const Vec r = rhs - K0.selfadjointView<Eigen::Lower>() * sol;
      if (inf_norm(r) <= 1e-14 * std::max(1.0, inf_norm(rhs))) break;
      sol += ldlt.solve(r);
    }
    if (!sol.allFinite()) return false;
    xbar = sol.head(n);
    ybar = Vec::Zero(z_.size());
    for (Eigen::Index r = 0; r < na; ++r) ybar(rows[r]) = sol(n + r);
    return true;
  }

  // Active-set polishing. Starting from the set guessed from the ADMM
  // iterate, repeatedly solves the equality-constrained QP, adds violated
  // constraints and drops active ones whose multiplier has the wrong sign.
  // Replaces `sol` when the result is a KKT point at least as accurate as
  // `sol` (or within tolerance when `require_tolerance`).
  bool try_polish(Solution& sol, bool require_tolerance) const {
    std::vector<signed char> set = active_set();
    const Residuals tol = residuals();
    Vec xbar, ybar;
    bool consistent = false;
    for (int round = 0; round < kPolishRounds; ++round) {
      if (!solve_reduced(set, xbar, ybar)) return false;
      const Vec Ax = s_.A * xbar;
      const Vec y = s_.E.cwiseProduct(ybar) / s_.c;
      bool changed = false;
      for (Eigen::Index i = 0; i < Ax.size(); ++i) {
        const double scale = s_.E(i);
        if (set[i] == 0) {
          if ((s_.l(i) - Ax(i)) / scale > tol.tol.primal) set[i] = -1, changed = true;
          else if ((Ax(i) - s_.u(i)) / scale > tol.tol.primal) set[i] = 1, changed = true;
        } else if ((set[i] == -1 && y(i) > 0.0) || (set[i] == 1 && y(i) < 0.0)) {
          set[i] = 0;
          changed = true;
        }
      }
      if (!changed) {
        consistent = true;
        break;
      }
    }
    if (!consistent) return false;

    Solution cand;
    cand.z = s_.D.cwiseProduct(xbar);
    cand.y = s_.E.cwiseProduct(ybar) / s_.c;
    const KktResiduals kr = kkt_residuals(orig_, cand.z, cand.y);
    if (require_tolerance) {
      if (kr.primal > tol.tol.primal || kr.dual > tol.tol.dual) return false;
    } else if (kr.primal > std::max(sol.primal_residual, tol.tol.primal) ||
               kr.dual > std::max(sol.dual_residual, tol.tol.dual)) {
      return false;
    }
    cand.status = SolveStatus::Solved;
    cand.iterations = sol.iterations;
    cand.primal_residual = kr.primal;
    cand.dual_residual = kr.dual;
    cand.polished = true;
    sol = std::move(cand);
    return true;
  }

 private:
  using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  const ConvexSubproblem& orig_;
  SolverConfig cfg_;
  ScaledProblem s_;
  SparseMatrix At_;
  RowMajorSparse a_rows_;
  Vec x_, z_, y_;
  Vec rho_;
  double rho_scalar_ = 0.1;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

}  // namespace

void ConvexSubproblem::validate() const {
  const Eigen::Index n = q.size(), k = A.rows();
  if (P.size() != n || A.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "subproblem has " + std::to_string(n) +
                                                  " costs but P has " + std::to_string(P.size()) +
                                                  " entries and A has " +
                                                  std::to_string(A.cols()) + " columns");
  if (l.size() != k || u.size() != k)
    throw Error(ErrorKind::DimensionMismatch, "constraint bounds do not match the rows of A");
  if (!P.allFinite() || !q.allFinite() || (P.array() < 0.0).any())
    throw Error(ErrorKind::InvalidArgument, "P must be finite and nonnegative, q finite");
  std::vector<char> nonzero(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
      if (!std::isfinite(it.value()))
        throw Error(ErrorKind::InvalidArgument, "A has a non-finite entry");
      if (it.value() != 0.0) nonzero[it.row()] = 1;
    }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!nonzero[i])
      throw Error(ErrorKind::InvalidArgument, "constraint row " + std::to_string(i) + " is empty");
    if (std::isnan(l(i)) || std::isnan(u(i)) || l(i) > u(i) || l(i) == kInf || u(i) == -kInf)
      throw Error(ErrorKind::InvalidArgument,
                  "constraint row " + std::to_string(i) + " has invalid bounds");
  }
}

void SolverConfig::validate() const {
  if (!(rho > 0.0) || !(sigma > 0.0) || !(relaxation > 0.0 && relaxation < 2.0) ||
      !(eps_abs >= 0.0) || !(eps_rel >= 0.0) || eps_abs + eps_rel <= 0.0 ||
      !(eps_infeasible > 0.0) || max_iter < 1 || check_every < 1 || scaling_passes < 0)
    throw Error(ErrorKind::InvalidArgument, "invalid solver configuration");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

double objective_value(const ConvexSubproblem& p, const Eigen::VectorXd& z) {
  return 0.5 * z.dot(p.P.cwiseProduct(z)) + p.q.dot(z);
}

KktResiduals kkt_residuals(const ConvexSubproblem& p, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& y) {
  if (z.size() != p.num_vars() || y.size() != p.num_constraints())
    throw Error(ErrorKind::DimensionMismatch, "solution does not match the subproblem");
  const Vec Az = p.A * z;
  KktResiduals r;
  r.primal = inf_norm(clip(Az, p.l, p.u) - Az);
  r.dual = inf_norm(p.P.cwiseProduct(z) + p.q + p.A.transpose() * y);
  return r;
}

KktResiduals kkt_residuals(const ConvexSubproblem& p, const Solution& s) {
  return kkt_residuals(p, s.z, s.y);
}

Solution solve(const ConvexSubproblem& p, const SolverConfig& cfg,
               const std::optional<WarmStart>& warm) {
  p.validate();
  cfg.validate();
  AdmmSolver admm(p, cfg);
  if (warm) admm.warm_start(*warm);
  return admm.run();
}

void write_debug_dump(const ConvexSubproblem& p, std::ostream& out) {
  auto vec = [&out](const char* tag, const Vec& v) {
    out << tag;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.17g", v(i));
      out << buf;
    }
    out << '\n';
  };
  out << "# ldep convex subproblem: min 1/2 z'diag(P)z + q'z s.t. l <= Az <= u\n";
  out << "dims " << p.num_vars() << ' ' << p.num_constraints() << ' ' << p.A.nonZeros() << '\n';
  vec("P", p.P);
  vec("q", p.q);
  vec("l", p.l);
  vec("u", p.u);
  for (int j = 0; j < p.A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(p.A, j); it; ++it) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "A %d %d %.17g\n", static_cast<int>(it.row()), j,
                    it.value());
      out << buf;
    }
}

void write_debug_dump(const ConvexSubproblem& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  write_debug_dump(p, f);
}

}  // namespace ldep
