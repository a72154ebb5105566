#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace ldep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Vector>;

/// Max-plus dilation: max_j (x_j + a_j).
double dilation(const VectorRef& x, const VectorRef& a);

/// Min-plus erosion: min_j (x_j + b_j).
double erosion(const VectorRef& x, const VectorRef& b);

/// Classic dilation-erosion perceptron with an explicit mixing weight.
/// Evaluation only; training always produces an LDepModel.
struct DepModel {
  Vector a;
  Vector b;
  double beta = 0.5;

  void validate() const;
};

/// beta * dilation(x, a) + (1 - beta) * erosion(x, b), before the sign.
double dep_decision(const DepModel& m, const VectorRef& x);

/// Linear dilation-erosion perceptron.
///
/// The decision function is the difference of two convex piecewise-linear
/// maxima,
///
///   tau(x) = max_i (w_i^T x + a_i) - max_j (m_j^T x + b_j),
///
/// where w_i, m_j are the rows of W (n1 x n) and M (n2 x n). The first
/// maximum is called the dilation side, the second the erosion side.
struct LDepModel {
  Matrix W;
  Vector a;
  Matrix M;
  Vector b;

  LDepModel() = default;
  LDepModel(Matrix W_, Vector a_, Matrix M_, Vector b_);

  Eigen::Index input_dim() const { return W.cols(); }
  Eigen::Index dilation_rows() const { return W.rows(); }
  Eigen::Index erosion_rows() const { return M.rows(); }

  /// Throws Error(Shape) on inconsistent block sizes and Error(InvalidArgument)
  /// on non-finite entries.
  void validate() const;

  bool operator==(const LDepModel& other) const;
};

enum class Side { Dilation, Erosion };

/// Value and smallest maximizing row of one side's maximum at x.
struct ActiveRow {
  Eigen::Index row = 0;
  double value = 0.0;
};

ActiveRow active_row(const LDepModel& m, const VectorRef& x, Side side);

/// max_i (w_i^T x + a_i)
double dilation_side(const LDepModel& m, const VectorRef& x);
/// max_j (m_j^T x + b_j)
double erosion_side(const LDepModel& m, const VectorRef& x);

double decision_function(const LDepModel& m, const VectorRef& x);

/// +1 when tau(x) >= 0, otherwise -1.
int sign_label(double tau);
int predict(const LDepModel& m, const VectorRef& x);

}  // namespace ldep
