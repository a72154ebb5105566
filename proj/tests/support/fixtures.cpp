#include "fixtures.hpp"

#include <limits>
#include <sstream>

namespace ldep::testing {

LDepModel reference_model() {
  Matrix W(4, 2), M(3, 2);
  W << 0.000, -4.456,
      -6.828, 5.977,
       7.438, 3.109,
      -0.000, -0.000;
  M << 0.000, -4.456,
      -19.349, -0.000,
      -0.000, -0.000;
  Vector a(4), b(3);
  a << 4.532, 0.148, -0.829, 1.854;
  b << -5.532, 2.955, -1.285;
  return LDepModel(W, a, M, b);
}

Dataset toy_dataset() {
  Matrix X(2, 1);
  X << -1.0, 1.0;
  return Dataset(X, {-1, 1});
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

LDepModel random_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index n1, Eigen::Index n2,
                       double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix W(n1, n), M(n2, n);
  Vector a(n1), b(n2);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < n1; ++i) a(i) = u(rng);
  for (Eigen::Index j = 0; j < n2; ++j) b(j) = u(rng);
  return LDepModel(W, a, M, b);
}

Dataset random_dataset(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n) {
  std::normal_distribution<double> noise(0.0, 0.4);
  Matrix X(m, n);
  std::vector<int> y(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) {
    const int label = k % 2 == 0 ? 1 : -1;
    y[static_cast<std::size_t>(k)] = label;
    for (Eigen::Index c = 0; c < n; ++c) X(k, c) = 0.5 * label + noise(rng);
  }
  return Dataset(X, y);
}

double reference_tau(const LDepModel& m, const Vector& x) {
  double f = -std::numeric_limits<double>::infinity();
  double g = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m.W.rows(); ++i) {
    double v = m.a(i);
    for (Eigen::Index c = 0; c < x.size(); ++c) v += m.W(i, c) * x(c);
    if (v > f) f = v;
  }
  for (Eigen::Index j = 0; j < m.M.rows(); ++j) {
    double v = m.b(j);
    for (Eigen::Index c = 0; c < x.size(); ++c) v += m.M(j, c) * x(c);
    if (v > g) g = v;
  }
  return f - g;
}

PropertyResult for_all(int cases, std::uint64_t seed,
                       const std::function<std::optional<std::string>(std::mt19937_64&)>& body) {
  PropertyResult r;
  std::seed_seq seq{seed};
  std::mt19937_64 master(seq);
  for (int c = 0; c < cases; ++c) {
    const std::uint64_t case_seed = master();
    std::mt19937_64 rng(case_seed);
    ++r.cases;
    if (auto failure = body(rng)) {
      if (r.failures++ == 0)
        r.first_failure = "case " + std::to_string(c) + " (seed " + std::to_string(case_seed) +
                          "): " + *failure;
    }
  }
  return r;
}

}  // namespace ldep::testing
