#include "ldep/problem.hpp"

#include "ldep/error.hpp"

#include <cmath>
#include <string>

namespace ldep {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, msg);
}

}  // namespace

void CcpSchedule::validate() const {
  require(tau0 > 0.0 && std::isfinite(tau0), "tau0 must be positive");
  require(mu > 1.0 && std::isfinite(mu), "mu must be greater than 1");
  require(tau_max >= tau0 && std::isfinite(tau_max), "tau_max must be at least tau0");
  require(max_iters >= 1, "max_iters must be at least 1");
  require(tol_obj > 0.0 && tol_slack > 0.0, "CCP tolerances must be positive");
}

void TrainConfig::validate() const {
  require(C > 0.0 && std::isfinite(C), "C must be positive");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(lambda_w >= 0.0 && std::isfinite(lambda_w), "lambda_w must be nonnegative");
  require(lambda_m >= 0.0 && std::isfinite(lambda_m), "lambda_m must be nonnegative");
  require(n1 >= 1 && n2 >= 1, "n1 and n2 must be at least 1");
  ccp.validate();
  solver.validate();
}

Dataset::Dataset(Matrix X_, std::vector<int> y_) : X(std::move(X_)), y(std::move(y_)) {
  validate();
}

Eigen::Index Dataset::count(int label) const {
  Eigen::Index c = 0;
  for (int v : y) c += v == label;
  return c;
}

void Dataset::validate() const {
  if (X.rows() < 1) throw Error(ErrorKind::InvalidArgument, "dataset is empty");
  if (static_cast<Eigen::Index>(y.size()) != X.rows())
    throw Error(ErrorKind::Shape, "dataset has " + std::to_string(X.rows()) + " rows but " +
                                      std::to_string(y.size()) + " labels");
  for (std::size_t k = 0; k < y.size(); ++k)
    if (y[k] != 1 && y[k] != -1)
      throw Error(ErrorKind::InvalidArgument,
                  "label of sample " + std::to_string(k) + " is not -1 or +1");
  if (!X.allFinite()) throw Error(ErrorKind::InvalidArgument, "dataset has non-finite features");
}

double hinge_sum(const VectorRef& xi) { return xi.cwiseMax(0.0).sum(); }

double elastic_net(const Matrix& A, double lambda, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(lambda >= 0.0, "lambda must be nonnegative");
  return lambda * ((1.0 - alpha) * A.squaredNorm() + alpha * A.cwiseAbs().sum());
}

double dc_residual(const LDepModel& m, const VectorRef& x, int label, double xi) {
  const double f = dilation_side(m, x);
  const double g = erosion_side(m, x);
  if (label == -1) return f + 1.0 - g - xi;
  if (label == 1) return g + 1.0 - f - xi;
  throw Error(ErrorKind::InvalidArgument, "label must be -1 or +1");
}

double regularization(const LDepModel& m, const TrainConfig& cfg) {
  return elastic_net(m.W, cfg.lambda_w, cfg.alpha) + elastic_net(m.M, cfg.lambda_m, cfg.alpha);
}

double objective(const LDepModel& m, const VectorRef& xi, const TrainConfig& cfg,
                 Eigen::Index sample_count) {
  if (xi.size() != sample_count)
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(sample_count) +
                                                  " slacks, got " + std::to_string(xi.size()));
  require(sample_count >= 1, "objective needs at least one sample");
  return cfg.C / static_cast<double>(sample_count) * hinge_sum(xi) + regularization(m, cfg);
}

double training_objective(const LDepModel& m, const Dataset& data, const TrainConfig& cfg) {
  Vector xi(data.size());
  for (Eigen::Index k = 0; k < data.size(); ++k)
    xi(k) = dc_residual(m, data.X.row(k).transpose(), data.y[k], 0.0);
  return objective(m, xi, cfg, data.size());
}

}  // namespace ldep
