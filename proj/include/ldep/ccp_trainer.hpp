#pragma once

#include "ldep/convex_solver.hpp"
#include "ldep/morpho.hpp"
#include "ldep/problem.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ldep {

/// W and M entries i.i.d. N(0, 1/n), a = b = 0. Deterministic per seed.
LDepModel initialize(const TrainConfig& cfg, Eigen::Index n, std::uint64_t seed);

/// Active row of the side that is subtracted in a sample's margin constraint
/// (erosion side for label -1, dilation side for label +1). Its affine
/// function minorizes that side's maximum for every parameter value.
ActiveRow linearize_concave(const LDepModel& m, const VectorRef& x, Side side);

/// Offsets of the blocks of the subproblem decision vector
///   z = (vec W, a, vec M, b, xi, h, p_W, p_M, s)
/// with W, M and p_W, p_M stored row-major.
struct VariableLayout {
  Eigen::Index n = 0, n1 = 0, n2 = 0, m = 0;

  Eigen::Index W(Eigen::Index i, Eigen::Index c) const { return i * n + c; }
  Eigen::Index a(Eigen::Index i) const { return n1 * n + i; }
  Eigen::Index M(Eigen::Index j, Eigen::Index c) const { return n1 * n + n1 + j * n + c; }
  Eigen::Index b(Eigen::Index j) const { return n1 * n + n1 + n2 * n + j; }
  Eigen::Index xi(Eigen::Index k) const { return model_size() + k; }
  Eigen::Index h(Eigen::Index k) const { return model_size() + m + k; }
  Eigen::Index pW(Eigen::Index i, Eigen::Index c) const { return model_size() + 2 * m + i * n + c; }
  Eigen::Index pM(Eigen::Index j, Eigen::Index c) const {
    return model_size() + 2 * m + n1 * n + j * n + c;
  }
  Eigen::Index s(Eigen::Index k) const { return model_size() + 2 * m + (n1 + n2) * n + k; }

  Eigen::Index model_size() const { return (n1 + n2) * (n + 1); }
  Eigen::Index size() const { return model_size() + 3 * m + (n1 + n2) * n; }
};

VariableLayout make_layout(const Dataset& data, const TrainConfig& cfg);

/// Convex subproblem obtained by replacing the subtracted maximum of every
/// margin constraint with its active row at `current`. Constraint rows are, in
/// order: margin rows (n1 per negative sample, n2 per positive sample), two
/// hinge-epigraph rows per sample, two L1-epigraph rows per entry of W then M,
/// and one slack-sign row per sample.
ConvexSubproblem build_subproblem(const Dataset& data, const LDepModel& current, double tau,
                                  const TrainConfig& cfg);

/// Linearized margin violation of each sample for `candidate`, with the
/// subtracted maximum replaced by the active row of `linearization_point`.
Vector linearized_residuals(const Dataset& data, const LDepModel& candidate,
                            const LDepModel& linearization_point);

/// Cheapest split of required slack r_k between xi (hinge-priced) and s
/// (penalty-priced). Returns z with the model block taken from `candidate`.
Vector tightest_point(const Dataset& data, const LDepModel& candidate,
                      const LDepModel& linearization_point, double tau, const TrainConfig& cfg);

LDepModel extract_model(const Vector& z, const VariableLayout& layout);

enum class TrainStatus { Converged, MaxItersReached, SolverFailure };

const char* to_string(TrainStatus s);

struct IterationRecord {
  double objective = 0.0;            // training objective of the new iterate
  double penalized_objective = 0.0;  // subproblem value including tau * sum s
  double slack_sum = 0.0;
  double tau = 0.0;
  SolveStatus solver_status = SolveStatus::MaxIter;
  int solver_iterations = 0;
  bool step_accepted = true;  // false when the solver point was worse than the start point
};

struct TrainReport {
  std::vector<IterationRecord> iterations;
  TrainStatus status = TrainStatus::MaxItersReached;
  double final_objective = 0.0;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;  // seed of the run that produced the model
  int retries = 0;
};

struct TrainResult {
  LDepModel model;
  TrainReport report;
};

/// Penalty convex-concave procedure. Throws Error(InvalidArgument) when the
/// dataset lacks one of the classes. A solver failure triggers one fresh
/// restart with seed + 1; a second failure is reported as SolverFailure.
/// Called after every completed iteration with its record and the iterate
/// (the unchanged model when the step was rejected).
using IterationObserver = std::function<void(const IterationRecord&, const LDepModel&)>;

TrainResult train(const Dataset& data, const TrainConfig& cfg,
                  const IterationObserver& observe = {});

/// Runs `restarts` independent trainings with seeds cfg.seed, cfg.seed + 1, ...
/// and keeps the lowest final objective (earliest run on ties).
TrainResult train_best_of(const Dataset& data, const TrainConfig& cfg, int restarts,
                          bool parallel = false);

}  // namespace ldep
