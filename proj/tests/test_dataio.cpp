#include "fixtures.hpp"

#include "ldep/dataio.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace ldep;
using ldep::testing::error_kind;
using ldep::testing::for_all;
using ldep::testing::reference_model;
using ldep::testing::random_dataset;
using ldep::testing::random_model;
using ldep::testing::TempDir;

namespace {

Dataset parse(const std::string& text, std::optional<Eigen::Index> dim = std::nullopt) {
  std::istringstream in(text);
  return parse_csv(in, dim);
}

std::string parse_error(const std::string& text, std::optional<Eigen::Index> dim = std::nullopt) {
  try {
    parse(text, dim);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

ModelFile parse_model_text(const std::string& text) {
  std::istringstream in(text);
  return parse_model(in);
}

bool bit_equal(const LDepModel& a, const LDepModel& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.size() == y.size() && x.rows() == y.rows() &&
           std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0;
  };
  return same(a.W, b.W) && same(a.a, b.a) && same(a.M, b.M) && same(a.b, b.b);
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("csv parsing") {
  const Dataset d = parse("0.1,0.2,1\n0.3,0.4,-1\n");
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
  CHECK(d.y == std::vector<int>{1, -1});
  CHECK(d.X(1, 0) == 0.3);

  const Dataset h = parse("x1,x2,y\n0.1,0.2,1\n");
  CHECK(h.size() == 1);

  const Dataset z = parse("1,0\n2,1\n");
  CHECK(z.y == std::vector<int>{-1, 1});
  CHECK(z.dim() == 1);
}

TEST_CASE("csv errors name the row") {
  const std::string ragged = parse_error("0.1,0.2\n", 2);
  CHECK(ragged.find("ragged") != std::string::npos);
  CHECK(ragged.find('1') != std::string::npos);
  CHECK(error_kind([] { parse("0.1,0.2\n", 2); }) == ErrorKind::Parse);

  const std::string bad = parse_error("0.1,0.2,1\n0.3,abc,1\n");
  CHECK(bad.find("row 2") != std::string::npos);
  CHECK(error_kind([] { parse("0.1,0.2,3\n"); }) == ErrorKind::Parse);
  CHECK(error_kind([] { parse(""); }) == ErrorKind::Parse);
  CHECK(error_kind([] { parse("x,y\n"); }) == ErrorKind::Parse);
  CHECK(error_kind([] { parse("0.1,1\n0.2,0.3,1\n"); }) == ErrorKind::Parse);
  CHECK(error_kind([] { load_csv("/nonexistent/ldep/data.csv"); }) == ErrorKind::Io);
}

TEST_CASE("csv write then load is the identity") {
  TempDir dir;
  auto r = for_all(100, 16, [&](std::mt19937_64& rng) -> std::optional<std::string> {
    Dataset d = random_dataset(rng, 7, 3);
    d.X *= std::uniform_real_distribution<double>(1e-6, 1e6)(rng);
    const std::string path = dir.file("d.csv");
    write_csv(d, path);
    if (!(load_csv(path) == d)) return "dataset changed";
    return std::nullopt;
  });
  CHECK_MESSAGE(r.failures == 0, r.first_failure);
}

TEST_CASE("generator sizes and balance") {
  const auto [train, test] = generate_two_moons_gaussians(250, 1000, MixtureParams{}, 1);
  CHECK(train.size() == 250);
  CHECK(test.size() == 1000);
  CHECK(train.count(-1) == 125);
  CHECK(train.count(1) == 125);
  CHECK(test.count(-1) == 500);
  CHECK(test.count(1) == 500);

  const auto [odd, odd_test] = generate_two_moons_gaussians(5, 3, MixtureParams{}, 1);
  CHECK(odd.count(-1) == 2);
  CHECK(odd.count(1) == 3);
  CHECK(odd_test.count(-1) == 1);

  CHECK(error_kind([] { generate_two_moons_gaussians(1, 10, MixtureParams{}, 1); }) ==
        ErrorKind::InvalidArgument);
  MixtureParams neg;
  neg.variance = -1;
  CHECK(error_kind([&] { generate_two_moons_gaussians(10, 10, neg, 1); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("generator is deterministic per seed") {
  const auto a = generate_two_moons_gaussians(50, 20, MixtureParams{}, 9);
  const auto b = generate_two_moons_gaussians(50, 20, MixtureParams{}, 9);
  const auto c = generate_two_moons_gaussians(50, 20, MixtureParams{}, 10);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK_FALSE(a.first == c.first);
}

TEST_CASE("zero variance collapses onto the component means") {
  MixtureParams p;
  p.variance = 0.0;
  const auto [train, test] = generate_two_moons_gaussians(200, 10, p, 3);
  std::set<std::pair<double, double>> neg, pos;
  for (Eigen::Index k = 0; k < train.size(); ++k)
    (train.y[static_cast<std::size_t>(k)] == -1 ? neg : pos).insert({train.X(k, 0), train.X(k, 1)});
  CHECK(neg == std::set<std::pair<double, double>>{{-0.7, 0.3}, {0.3, 0.3}});
  CHECK(pos == std::set<std::pair<double, double>>{{-0.3, 0.7}, {0.4, 0.7}});
}

TEST_CASE("component spread matches the variance") {
  MixtureParams p;
  const auto [train, test] = generate_two_moons_gaussians(20000, 2, p, 4);
  // Both components of a class share their second coordinate, so the
  // second feature is a single Gaussian per class.
  double ss = 0.0;
  for (Eigen::Index k = 0; k < train.size(); ++k) {
    const double mu = train.y[static_cast<std::size_t>(k)] == -1 ? 0.3 : 0.7;
    ss += std::pow(train.X(k, 1) - mu, 2);
  }
  CHECK(ss / static_cast<double>(train.size()) == doctest::Approx(0.03).epsilon(0.05));
}

TEST_CASE("accuracy and confusion") {
  Matrix X(1, 1);
  X << 2.0;
  Matrix W(1, 1), M(1, 1);
  W << 1.0;
  M << 0.0;
  const LDepModel m(W, Vector::Zero(1), M, Vector::Zero(1));  // tau = x
  CHECK(accuracy(m, Dataset(X, {1})) == 1.0);
  CHECK(accuracy(m, Dataset(X, {-1})) == 0.0);

  Matrix X4(4, 1);
  X4 << -1, 1, -2, 3;
  const Confusion c = confusion(m, Dataset(X4, {-1, -1, 1, 1}));
  CHECK(c.true_pos == 1);
  CHECK(c.true_neg == 1);
  CHECK(c.false_pos == 1);
  CHECK(c.false_neg == 1);
  CHECK(c.accuracy() == 0.5);

  CHECK(error_kind([&] { accuracy(m, Dataset(Matrix::Zero(1, 2), {1})); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("accuracy ignores row order") {
  auto r = for_all(100, 17, [](std::mt19937_64& rng) -> std::optional<std::string> {
    const Dataset d = random_dataset(rng, 15, 2);
    const LDepModel m = random_model(rng, 2, 3, 2, 1.0);
    std::vector<Eigen::Index> order(15);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix X(15, 2);
    std::vector<int> y(15);
    for (Eigen::Index k = 0; k < 15; ++k) {
      X.row(k) = d.X.row(order[k]);
      y[k] = d.y[order[k]];
    }
    if (accuracy(m, d) != accuracy(m, Dataset(X, y))) return "accuracy changed";
    return std::nullopt;
  });
  CHECK_MESSAGE(r.failures == 0, r.first_failure);
}

// The reference parameters were expected to score about 90% here. Evaluated with
// the decision function as defined they do not; see the README.
TEST_CASE("reference parameters on a generated test set" * doctest::may_fail()) {
  const auto [train, test] = generate_two_moons_gaussians(250, 1000, MixtureParams{}, 1);
  const double acc = accuracy(reference_model(), test);
  MESSAGE("reference-parameter accuracy: " << acc);
  CHECK(acc >= 0.85);
  CHECK(acc <= 0.93);
}

TEST_CASE("grid export") {
  const LDepModel m = reference_model();
  std::ostringstream tiny;
  export_grid(m, GridSpec{0, 1, 0, 1, 2}, tiny);
  std::istringstream lines(tiny.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "x,y,tau,label");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 4);

  std::ostringstream full;
  export_grid(m, GridSpec{}, full);
  std::istringstream in(full.str());
  std::getline(in, line);
  int count = 0, bad = 0;
  std::map<std::string, std::set<int>> labels_by_column;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string x, y, tau, label;
    std::getline(ls, x, ',');
    std::getline(ls, y, ',');
    std::getline(ls, tau, ',');
    std::getline(ls, label, ',');
    const double t = std::stod(tau);
    Vector p(2);
    p << std::stod(x), std::stod(y);
    const int lab = std::stoi(label);
    if (lab != (t >= 0.0 ? 1 : -1) || lab != predict(m, p) || t != decision_function(m, p)) ++bad;
    labels_by_column[x].insert(lab);
    ++count;
  }
  CHECK(count == 101 * 101);
  CHECK(bad == 0);
  const bool crosses = std::any_of(labels_by_column.begin(), labels_by_column.end(),
                                   [](const auto& kv) { return kv.second.size() == 2; });
  CHECK(crosses);

  std::ostringstream sink;
  std::mt19937_64 rng(1);
  const LDepModel three = random_model(rng, 3, 1, 1);
  CHECK(error_kind([&] { export_grid(three, GridSpec{}, sink); }) ==
        ErrorKind::DimensionMismatch);
  CHECK(error_kind([&] { export_grid(m, GridSpec{0, 1, 0, 1, 1}, sink); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("standardization folds back into the model") {
  auto r = for_all(100, 18, [](std::mt19937_64& rng) -> std::optional<std::string> {
    Dataset d = random_dataset(rng, 12, 3);
    d.X.col(0) = d.X.col(0) * 40.0 + Vector::Constant(12, 7.0);
    const Standardizer s = Standardizer::fit(d);
    const Dataset z = s.apply(d);
    if (z.X.colwise().mean().cwiseAbs().maxCoeff() > 1e-12) return "not centered";
    const LDepModel m = random_model(rng, 3, 2, 2);
    const LDepModel raw = s.fold_into(m);
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      const double t1 = decision_function(m, z.X.row(k).transpose());
      const double t2 = decision_function(raw, d.X.row(k).transpose());
      if (std::abs(t1 - t2) > 1e-9 * std::max(1.0, std::abs(t1))) return "folded model differs";
    }
    return std::nullopt;
  });
  CHECK_MESSAGE(r.failures == 0, r.first_failure);
}

TEST_CASE("model file round trip is bit exact") {
  TempDir dir;
  const std::string path = dir.file("m.ldep");
  save_model(ModelFile{reference_model(), {{"note", "two words"}}}, path);
  const ModelFile back = load_model(path);
  CHECK(bit_equal(back.model, reference_model()));
  REQUIRE(back.metadata.size() == 1);
  CHECK(back.metadata[0].first == "note");
  CHECK(back.metadata[0].second == "two words");

  auto r = for_all(200, 19, [&](std::mt19937_64& rng) -> std::optional<std::string> {
    LDepModel m = random_model(rng, 3, 4, 3);
    m.W(0, 0) = std::ldexp(m.W(0, 0), -300);
    m.b(1) = std::nextafter(m.b(1), 1e9);
    std::ostringstream out;
    save_model(ModelFile{m, {}}, out);
    const ModelFile f = parse_model_text(out.str());
    if (!bit_equal(f.model, m)) return "parameters changed";
    return std::nullopt;
  });
  CHECK(r.cases >= 100);
  CHECK_MESSAGE(r.failures == 0, r.first_failure);
}

TEST_CASE("model file errors") {
  const std::string good =
      "format ldep-model/1\ndims 1 2 1\nW 1\nW 2\na 0 0\nM 3\nb 0\n";
  CHECK_NOTHROW(parse_model_text(good));
  CHECK_NOTHROW(parse_model_text("# comment\n" + good));

  CHECK(error_kind([] { parse_model_text("format ldep-model/9\ndims 1 1 1\nW 1\na 0\nM 1\nb 0\n"); }) ==
        ErrorKind::Version);
  CHECK(error_kind([] {
          parse_model_text("format ldep-model/1\ndims 2 4 3\nW 1 1\nW 1 1\nW 1 1\na 0 0 0 0\n"
                           "M 1 1\nM 1 1\nM 1 1\nb 0 0 0\n");
        }) == ErrorKind::Shape);
  CHECK(error_kind([] { parse_model_text("format ldep-model/1\ndims 1 1 1\nW 1 2\na 0\nM 1\nb 0\n"); }) ==
        ErrorKind::Shape);
  CHECK(error_kind([] { parse_model_text("format ldep-model/1\ndims 1 1 1\nW x\na 0\nM 1\nb 0\n"); }) ==
        ErrorKind::Parse);
  try {
    parse_model_text("format ldep-model/1\ndims 1 1 1\nW 1\na 0\nM oops\nb 0\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
  CHECK(error_kind([] { parse_model_text(""); }) == ErrorKind::Parse);
  CHECK(error_kind([] { load_model("/nonexistent/ldep/model.ldep"); }) == ErrorKind::Io);
}

TEST_CASE("formatted doubles round trip") {
  auto r = for_all(300, 20, [](std::mt19937_64& rng) -> std::optional<std::string> {
    std::uint64_t bits = rng();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) return std::nullopt;
    if (std::strtod(format_double(v).c_str(), nullptr) != v) return "lost precision: " + format_double(v);
    return std::nullopt;
  });
  CHECK_MESSAGE(r.failures == 0, r.first_failure);
}

}  // TEST_SUITE
