#include "ldep/ccp_trainer.hpp"

#include "ldep/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <string>

namespace ldep {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Triplet = Eigen::Triplet<double>;

void check_compatible(const Dataset& data, const LDepModel& m, const TrainConfig& cfg) {
  if (m.input_dim() != data.dim())
    throw Error(ErrorKind::DimensionMismatch, "model input dimension " +
                                                  std::to_string(m.input_dim()) +
                                                  " does not match dataset dimension " +
                                                  std::to_string(data.dim()));
  if (m.dilation_rows() != cfg.n1 || m.erosion_rows() != cfg.n2)
    throw Error(ErrorKind::DimensionMismatch, "model row counts do not match n1, n2");
}

// Value of one side's maximum under `params`, restricted to `row`.
double row_value(const LDepModel& params, const VectorRef& x, Side side, Eigen::Index row) {
  if (side == Side::Dilation) return params.W.row(row).dot(x) + params.a(row);
  return params.M.row(row).dot(x) + params.b(row);
}

double penalized_value(const Vector& z, const VariableLayout& L, const LDepModel& m, double tau,
                       const TrainConfig& cfg) {
  double hinge = 0.0, slack = 0.0;
  for (Eigen::Index k = 0; k < L.m; ++k) {
    hinge += z(L.h(k));
    slack += z(L.s(k));
  }
  return cfg.C / static_cast<double>(L.m) * hinge + regularization(m, cfg) + tau * slack;
}

double slack_sum(const Vector& z, const VariableLayout& L) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < L.m; ++k) s += z(L.s(k));
  return s;
}

struct RunOutcome {
  TrainResult result;
  bool failed = false;
};

RunOutcome run_once(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed,
                    const IterationObserver& observe) {
  RunOutcome out;
  TrainReport& report = out.result.report;
  report.seed = seed;

  LDepModel model = initialize(cfg, data.dim(), seed);
  const VariableLayout layout = make_layout(data, cfg);
  double tau = cfg.ccp.tau0;
  double prev_obj = training_objective(model, data, cfg);
  Vector duals;

  report.status = TrainStatus::MaxItersReached;
  for (int k = 0; k < cfg.ccp.max_iters; ++k) {
    const ConvexSubproblem qp = build_subproblem(data, model, tau, cfg);
    const Vector start = tightest_point(data, model, model, tau, cfg);
    const double start_value = penalized_value(start, layout, model, tau, cfg);

    Solution sol;
    try {
      const WarmStart warm{start, duals};
      sol = cfg.subproblem_solver ? cfg.subproblem_solver(qp, cfg.solver, warm)
                                  : solve(qp, cfg.solver, warm);
    } catch (const Error&) {
      out.failed = true;
    }
    if (!out.failed && (sol.status == SolveStatus::Infeasible || !sol.z.allFinite()))
      out.failed = true;
    if (out.failed) {
      report.status = TrainStatus::SolverFailure;
      IterationRecord rec;
      rec.tau = tau;
      rec.solver_status = sol.status;
      rec.solver_iterations = sol.iterations;
      rec.step_accepted = false;
      rec.objective = prev_obj;
      rec.penalized_objective = start_value;
      rec.slack_sum = slack_sum(start, layout);
      report.iterations.push_back(rec);
      break;
    }

    LDepModel candidate = extract_model(sol.z, layout);
    Vector point = tightest_point(data, candidate, model, tau, cfg);
    double value = penalized_value(point, layout, candidate, tau, cfg);

    IterationRecord rec;
    rec.tau = tau;
    rec.solver_status = sol.status;
    rec.solver_iterations = sol.iterations;
    // The start point is feasible for this subproblem, so an inexact solve
    // must never leave the iterate worse off.
    if (!(value <= start_value)) {
      rec.step_accepted = false;
      candidate = model;
      point = start;
      value = start_value;
    }
    rec.penalized_objective = value;
    rec.slack_sum = slack_sum(point, layout);
    rec.objective = training_objective(candidate, data, cfg);
    report.iterations.push_back(rec);
    if (observe) observe(rec, candidate);
    duals = sol.y;

    const double change = std::abs(rec.objective - prev_obj);
    const bool obj_done = change <= cfg.ccp.tol_obj * std::max(std::abs(prev_obj), 1e-12);
    model = std::move(candidate);
    prev_obj = rec.objective;
    if (obj_done && rec.slack_sum <= cfg.ccp.tol_slack) {
      report.status = TrainStatus::Converged;
      break;
    }
    tau = std::min(cfg.ccp.mu * tau, cfg.ccp.tau_max);
  }
  report.final_objective = training_objective(model, data, cfg);
  out.result.model = std::move(model);
  return out;
}

}  // namespace

LDepModel initialize(const TrainConfig& cfg, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "input dimension must be at least 1");
  if (cfg.n1 < 1 || cfg.n2 < 1) throw Error(ErrorKind::InvalidArgument, "n1 and n2 must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix W(cfg.n1, n), M(cfg.n2, n);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = normal(rng);
  return LDepModel(std::move(W), Vector::Zero(cfg.n1), std::move(M), Vector::Zero(cfg.n2));
}

ActiveRow linearize_concave(const LDepModel& m, const VectorRef& x, Side side) {
  return active_row(m, x, side);
}

VariableLayout make_layout(const Dataset& data, const TrainConfig& cfg) {
  VariableLayout L;
  L.n = data.dim();
  L.n1 = cfg.n1;
  L.n2 = cfg.n2;
  L.m = data.size();
  return L;
}

ConvexSubproblem build_subproblem(const Dataset& data, const LDepModel& current, double tau,
                                  const TrainConfig& cfg) {
  data.validate();
  cfg.validate();
  current.validate();
  check_compatible(data, current, cfg);
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw Error(ErrorKind::InvalidArgument, "slack penalty tau must be positive");

  const VariableLayout L = make_layout(data, cfg);
  const Eigen::Index N = L.size();
  const Eigen::Index n = L.n;

  ConvexSubproblem p;
  p.P = Vector::Zero(N);
  p.q = Vector::Zero(N);
  const double quad_w = 2.0 * cfg.lambda_w * (1.0 - cfg.alpha);
  const double quad_m = 2.0 * cfg.lambda_m * (1.0 - cfg.alpha);
  for (Eigen::Index i = 0; i < L.n1; ++i)
    for (Eigen::Index c = 0; c < n; ++c) {
      p.P(L.W(i, c)) = quad_w;
      p.q(L.pW(i, c)) = cfg.lambda_w * cfg.alpha;
    }
  for (Eigen::Index j = 0; j < L.n2; ++j)
    for (Eigen::Index c = 0; c < n; ++c) {
      p.P(L.M(j, c)) = quad_m;
      p.q(L.pM(j, c)) = cfg.lambda_m * cfg.alpha;
    }
  for (Eigen::Index k = 0; k < L.m; ++k) {
    p.q(L.h(k)) = cfg.C / static_cast<double>(L.m);
    p.q(L.s(k)) = tau;
  }

  std::vector<Triplet> trip;
  std::vector<double> lo, hi;
  Eigen::Index row = 0;
  auto add = [&trip, &row](Eigen::Index col, double v) {
    if (v != 0.0) trip.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
  };
  auto close_row = [&](double l, double u) {
    lo.push_back(l);
    hi.push_back(u);
    ++row;
  };

  // Margin rows: every affine piece of the kept maximum against the active
  // piece of the subtracted one.
  for (Eigen::Index k = 0; k < L.m; ++k) {
    const auto x = data.X.row(k);
    if (data.y[k] == -1) {
      const Eigen::Index js = linearize_concave(current, x.transpose(), Side::Erosion).row;
      for (Eigen::Index i = 0; i < L.n1; ++i) {
        for (Eigen::Index c = 0; c < n; ++c) {
          add(L.W(i, c), x(c));
          add(L.M(js, c), -x(c));
        }
        add(L.a(i), 1.0);
        add(L.b(js), -1.0);
        add(L.xi(k), -1.0);
        add(L.s(k), -1.0);
        close_row(-kInf, -1.0);
      }
    } else {
      const Eigen::Index is = linearize_concave(current, x.transpose(), Side::Dilation).row;
      for (Eigen::Index j = 0; j < L.n2; ++j) {
        for (Eigen::Index c = 0; c < n; ++c) {
          add(L.M(j, c), x(c));
          add(L.W(is, c), -x(c));
        }
        add(L.b(j), 1.0);
        add(L.a(is), -1.0);
        add(L.xi(k), -1.0);
        add(L.s(k), -1.0);
        close_row(-kInf, -1.0);
      }
    }
  }
  // Hinge epigraph: h >= xi, h >= 0.
  for (Eigen::Index k = 0; k < L.m; ++k) {
    add(L.h(k), 1.0);
    add(L.xi(k), -1.0);
    close_row(0.0, kInf);
    add(L.h(k), 1.0);
    close_row(0.0, kInf);
  }
  // L1 epigraph: -p <= entry <= p.
  auto l1_rows = [&](Eigen::Index entry, Eigen::Index bound) {
    add(bound, 1.0);
    add(entry, -1.0);
    close_row(0.0, kInf);
    add(bound, 1.0);
    add(entry, 1.0);
    close_row(0.0, kInf);
  };
  for (Eigen::Index i = 0; i < L.n1; ++i)
    for (Eigen::Index c = 0; c < n; ++c) l1_rows(L.W(i, c), L.pW(i, c));
  for (Eigen::Index j = 0; j < L.n2; ++j)
    for (Eigen::Index c = 0; c < n; ++c) l1_rows(L.M(j, c), L.pM(j, c));
  for (Eigen::Index k = 0; k < L.m; ++k) {
    add(L.s(k), 1.0);
    close_row(0.0, kInf);
  }

  p.A.resize(row, N);
  p.A.setFromTriplets(trip.begin(), trip.end());
  p.l = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  p.u = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  return p;
}

Vector linearized_residuals(const Dataset& data, const LDepModel& candidate,
                            const LDepModel& linearization_point) {
  Vector r(data.size());
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    const Vector x = data.X.row(k).transpose();
    if (data.y[k] == -1) {
      const auto js = linearize_concave(linearization_point, x, Side::Erosion).row;
      r(k) = dilation_side(candidate, x) + 1.0 - row_value(candidate, x, Side::Erosion, js);
    } else {
      const auto is = linearize_concave(linearization_point, x, Side::Dilation).row;
      r(k) = erosion_side(candidate, x) + 1.0 - row_value(candidate, x, Side::Dilation, is);
    }
  }
  return r;
}

Vector tightest_point(const Dataset& data, const LDepModel& candidate,
                      const LDepModel& linearization_point, double tau, const TrainConfig& cfg) {
  const VariableLayout L = make_layout(data, cfg);
  Vector z = Vector::Zero(L.size());
  for (Eigen::Index i = 0; i < L.n1; ++i) {
    for (Eigen::Index c = 0; c < L.n; ++c) {
      z(L.W(i, c)) = candidate.W(i, c);
      z(L.pW(i, c)) = std::abs(candidate.W(i, c));
    }
    z(L.a(i)) = candidate.a(i);
  }
  for (Eigen::Index j = 0; j < L.n2; ++j) {
    for (Eigen::Index c = 0; c < L.n; ++c) {
      z(L.M(j, c)) = candidate.M(j, c);
      z(L.pM(j, c)) = std::abs(candidate.M(j, c));
    }
    z(L.b(j)) = candidate.b(j);
  }
  const Vector r = linearized_residuals(data, candidate, linearization_point);
  const bool slack_cheaper = tau < cfg.C / static_cast<double>(L.m);
  for (Eigen::Index k = 0; k < L.m; ++k) {
    const double need = std::max(r(k), 0.0);
    const double s = slack_cheaper ? need : 0.0;
    z(L.xi(k)) = need - s;
    z(L.h(k)) = need - s;
    z(L.s(k)) = s;
  }
  return z;
}

LDepModel extract_model(const Vector& z, const VariableLayout& L) {
  if (z.size() != L.size())
    throw Error(ErrorKind::DimensionMismatch, "solution vector does not match the layout");
  Matrix W(L.n1, L.n), M(L.n2, L.n);
  Vector a(L.n1), b(L.n2);
  for (Eigen::Index i = 0; i < L.n1; ++i) {
    for (Eigen::Index c = 0; c < L.n; ++c) W(i, c) = z(L.W(i, c));
    a(i) = z(L.a(i));
  }
  for (Eigen::Index j = 0; j < L.n2; ++j) {
    for (Eigen::Index c = 0; c < L.n; ++c) M(j, c) = z(L.M(j, c));
    b(j) = z(L.b(j));
  }
  return LDepModel(std::move(W), std::move(a), std::move(M), std::move(b));
}

const char* to_string(TrainStatus s) {
  switch (s) {
    case TrainStatus::Converged: return "converged";
    case TrainStatus::MaxItersReached: return "max_iters";
    case TrainStatus::SolverFailure: return "solver_failure";
  }
  return "unknown";
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, const IterationObserver& observe) {
  data.validate();
  cfg.validate();
  if (data.count(1) == 0 || data.count(-1) == 0)
    throw Error(ErrorKind::InvalidArgument, "training data must contain both classes");

  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome run = run_once(data, cfg, cfg.seed, observe);
  if (run.failed) {
    RunOutcome retry = run_once(data, cfg, cfg.seed + 1, observe);
    retry.result.report.retries = 1;
    run = std::move(retry);
  }
  run.result.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return std::move(run.result);
}

TrainResult train_best_of(const Dataset& data, const TrainConfig& cfg, int restarts,
                          bool parallel) {
  if (restarts < 1) throw Error(ErrorKind::InvalidArgument, "restarts must be at least 1");
  auto run_seed = [&data, &cfg](int r) {
    TrainConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    return train(data, c);
  };
  std::vector<TrainResult> results;
  results.reserve(static_cast<std::size_t>(restarts));
  if (parallel && restarts > 1) {
    std::vector<std::future<TrainResult>> jobs;
    for (int r = 0; r < restarts; ++r) jobs.push_back(std::async(std::launch::async, run_seed, r));
    for (auto& j : jobs) results.push_back(j.get());
  } else {
    for (int r = 0; r < restarts; ++r) results.push_back(run_seed(r));
  }

  std::size_t best = 0;
  auto failed = [](const TrainResult& t) { return t.report.status == TrainStatus::SolverFailure; };
  for (std::size_t r = 1; r < results.size(); ++r) {
    const bool better = failed(results[best]) && !failed(results[r]);
    const bool same_class = failed(results[best]) == failed(results[r]);
    if (better || (same_class &&
                   results[r].report.final_objective < results[best].report.final_objective))
      best = r;
  }
  return std::move(results[best]);
}

}  // namespace ldep
