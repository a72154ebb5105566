#include "ldep/morpho.hpp"

#include "ldep/error.hpp"

#include <string>

namespace ldep {
namespace {

void check_pair(const VectorRef& x, const VectorRef& s, const char* op) {
  if (x.size() != s.size()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(op) + ": input has length " +
                                                  std::to_string(x.size()) +
                                                  " but structuring element has length " +
                                                  std::to_string(s.size()));
  }
  if (x.size() == 0) throw Error(ErrorKind::InvalidArgument, std::string(op) + ": empty input");
}

void check_input(const LDepModel& m, const VectorRef& x) {
  if (x.size() != m.input_dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "model expects inputs of length " + std::to_string(m.input_dim()) + ", got " +
                    std::to_string(x.size()));
  }
}

}  // namespace

double dilation(const VectorRef& x, const VectorRef& a) {
  check_pair(x, a, "dilation");
  return (x + a).maxCoeff();
}

double erosion(const VectorRef& x, const VectorRef& b) {
  check_pair(x, b, "erosion");
  return (x + b).minCoeff();
}

void DepModel::validate() const {
  if (a.size() != b.size())
    throw Error(ErrorKind::Shape, "DEP structuring elements differ in length");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "DEP beta must lie in [0, 1]");
}

double dep_decision(const DepModel& m, const VectorRef& x) {
  m.validate();
  return m.beta * dilation(x, m.a) + (1.0 - m.beta) * erosion(x, m.b);
}

LDepModel::LDepModel(Matrix W_, Vector a_, Matrix M_, Vector b_)
    : W(std::move(W_)), a(std::move(a_)), M(std::move(M_)), b(std::move(b_)) {
  validate();
}

void LDepModel::validate() const {
  if (W.rows() < 1 || M.rows() < 1)
    throw Error(ErrorKind::Shape, "W and M need at least one row");
  if (W.cols() < 1 || W.cols() != M.cols())
    throw Error(ErrorKind::Shape, "W has " + std::to_string(W.cols()) + " columns, M has " +
                                      std::to_string(M.cols()));
  if (a.size() != W.rows())
    throw Error(ErrorKind::Shape, "len(a) = " + std::to_string(a.size()) + " but W has " +
                                      std::to_string(W.rows()) + " rows");
  if (b.size() != M.rows())
    throw Error(ErrorKind::Shape, "len(b) = " + std::to_string(b.size()) + " but M has " +
                                      std::to_string(M.rows()) + " rows");
  if (!W.allFinite() || !a.allFinite() || !M.allFinite() || !b.allFinite())
    throw Error(ErrorKind::InvalidArgument, "model has non-finite parameters");
}

bool LDepModel::operator==(const LDepModel& o) const {
  return W.rows() == o.W.rows() && W.cols() == o.W.cols() && M.rows() == o.M.rows() &&
         M.cols() == o.M.cols() && W == o.W && a == o.a && M == o.M && b == o.b;
}

ActiveRow active_row(const LDepModel& m, const VectorRef& x, Side side) {
  check_input(m, x);
  const Matrix& rows = side == Side::Dilation ? m.W : m.M;
  const Vector& bias = side == Side::Dilation ? m.a : m.b;
  ActiveRow best{0, rows.row(0).dot(x) + bias(0)};
  for (Eigen::Index i = 1; i < rows.rows(); ++i) {
    const double v = rows.row(i).dot(x) + bias(i);
    if (v > best.value) best = {i, v};  // strict: ties keep the smallest index
  }
  return best;
}

double dilation_side(const LDepModel& m, const VectorRef& x) {
  return active_row(m, x, Side::Dilation).value;
}

double erosion_side(const LDepModel& m, const VectorRef& x) {
  return active_row(m, x, Side::Erosion).value;
}

double decision_function(const LDepModel& m, const VectorRef& x) {
  return dilation_side(m, x) - erosion_side(m, x);
}

int sign_label(double tau) { return tau >= 0.0 ? 1 : -1; }

int predict(const LDepModel& m, const VectorRef& x) { return sign_label(decision_function(m, x)); }

}  // namespace ldep
