#include "ldep/dataio.hpp"

#include "ldep/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace ldep {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " (file not found or unreadable)");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Dataset parse_csv(std::istream& in, std::optional<Eigen::Index> expected_dim) {
  std::vector<double> values;
  std::vector<int> labels;
  Eigen::Index dim = expected_dim.value_or(-1);
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    const bool is_first = first_content;
    first_content = false;

    std::vector<double> row(fields.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < fields.size() && numeric; ++c) {
      if (!parse_number(fields[c], row[c])) {
        numeric = false;
        bad_col = c;
      }
    }
    if (!numeric && is_first) continue;  // header
    if (dim < 0) {
      if (fields.size() < 2)
        throw Error(ErrorKind::Parse,
                    "row " + std::to_string(line_no) + ": need at least one feature and a label");
      dim = static_cast<Eigen::Index>(fields.size()) - 1;
    }
    if (static_cast<Eigen::Index>(fields.size()) != dim + 1)
      throw Error(ErrorKind::Parse, "ragged row " + std::to_string(line_no) + ": expected " +
                                        std::to_string(dim + 1) + " fields, found " +
                                        std::to_string(fields.size()));
    if (!numeric)
      throw Error(ErrorKind::Parse, "row " + std::to_string(line_no) + ", column " +
                                        std::to_string(bad_col + 1) + ": cannot parse '" +
                                        std::string(fields[bad_col]) + "' as a number");
    for (Eigen::Index c = 0; c < dim; ++c) {
      if (!std::isfinite(row[c]))
        throw Error(ErrorKind::Parse, "row " + std::to_string(line_no) + ", column " +
                                          std::to_string(c + 1) + ": non-finite value");
      values.push_back(row[c]);
    }
    const double lab = row[dim];
    if (lab == 1.0)
      labels.push_back(1);
    else if (lab == -1.0 || lab == 0.0)
      labels.push_back(-1);
    else
      throw Error(ErrorKind::Parse, "row " + std::to_string(line_no) + ": label " +
                                        std::string(fields[dim]) + " is not one of -1, +1, 0, 1");
  }
  if (labels.empty()) throw Error(ErrorKind::Parse, "no data rows");
  Matrix X = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()), dim);
  return Dataset(std::move(X), std::move(labels));
}

Dataset load_csv(const std::string& path, std::optional<Eigen::Index> expected_dim) {
  auto f = open_in(path);
  try {
    return parse_csv(f, expected_dim);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_csv(const Dataset& d, std::ostream& out) {
  for (Eigen::Index c = 0; c < d.dim(); ++c) out << 'x' << c + 1 << ',';
  out << "label\n";
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    for (Eigen::Index c = 0; c < d.dim(); ++c) out << format_double(d.X(k, c)) << ',';
    out << d.y[k] << '\n';
  }
}

void write_csv(const Dataset& d, const std::string& path) {
  auto f = open_out(path);
  write_csv(d, f);
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path);
}

std::pair<Dataset, Dataset> generate_two_moons_gaussians(std::size_t count_train,
                                                         std::size_t count_test,
                                                         const MixtureParams& params,
                                                         std::uint64_t seed) {
  if (count_train < 2 || count_test < 2)
    throw Error(ErrorKind::InvalidArgument, "sample counts must be at least 2");
  if (!(params.variance >= 0.0) || !std::isfinite(params.variance))
    throw Error(ErrorKind::InvalidArgument, "variance must be nonnegative");
  std::mt19937_64 rng(seed);
  const double sd = std::sqrt(params.variance);
  std::normal_distribution<double> noise(0.0, sd > 0.0 ? sd : 1.0);
  std::bernoulli_distribution pick(0.5);

  auto make = [&](std::size_t count) {
    const std::size_t neg = count / 2;
    Matrix X(static_cast<Eigen::Index>(count), 2);
    std::vector<int> y(count);
    for (std::size_t k = 0; k < count; ++k) {
      const bool negative = k < neg;
      const auto& means = negative ? params.negative_means : params.positive_means;
      const auto& mu = means[pick(rng) ? 1 : 0];
      for (int c = 0; c < 2; ++c)
        X(static_cast<Eigen::Index>(k), c) = mu[c] + (sd > 0.0 ? noise(rng) : 0.0);
      y[k] = negative ? -1 : 1;
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix Xs(X.rows(), 2);
    std::vector<int> ys(count);
    for (std::size_t k = 0; k < count; ++k) {
      Xs.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(order[k]));
      ys[k] = y[order[k]];
    }
    return Dataset(std::move(Xs), std::move(ys));
  };
  Dataset train = make(count_train);
  Dataset test = make(count_test);
  return {std::move(train), std::move(test)};
}

double Confusion::accuracy() const {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(true_pos + true_neg) / static_cast<double>(n);
}

Confusion confusion(const LDepModel& m, const Dataset& d) {
  if (m.input_dim() != d.dim())
    throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(m.input_dim()) +
                                                  " features, dataset has " +
                                                  std::to_string(d.dim()));
  Confusion c;
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    const int p = predict(m, d.X.row(k).transpose());
    if (d.y[k] == 1)
      (p == 1 ? c.true_pos : c.false_neg)++;
    else
      (p == -1 ? c.true_neg : c.false_pos)++;
  }
  return c;
}

double accuracy(const LDepModel& m, const Dataset& d) { return confusion(m, d).accuracy(); }

void export_grid(const LDepModel& m, const GridSpec& g, std::ostream& out) {
  if (m.input_dim() != 2)
    throw Error(ErrorKind::DimensionMismatch,
                "decision grids need a 2-feature model, got " + std::to_string(m.input_dim()));
  if (g.steps < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 steps");
  if (!(g.xmax > g.xmin) || !(g.ymax > g.ymin))
    throw Error(ErrorKind::InvalidArgument, "grid ranges must be increasing");
  out << "x,y,tau,label\n";
  Vector p(2);
  for (int iy = 0; iy < g.steps; ++iy) {
    p(1) = g.ymin + (g.ymax - g.ymin) * iy / (g.steps - 1);
    for (int ix = 0; ix < g.steps; ++ix) {
      p(0) = g.xmin + (g.xmax - g.xmin) * ix / (g.steps - 1);
      const double tau = decision_function(m, p);
      out << format_double(p(0)) << ',' << format_double(p(1)) << ',' << format_double(tau) << ','
          << sign_label(tau) << '\n';
    }
  }
}

void export_grid(const LDepModel& m, const GridSpec& g, const std::string& path) {
  auto f = open_out(path);
  export_grid(m, g, f);
}

Standardizer Standardizer::fit(const Dataset& d) {
  Standardizer s;
  s.mean = d.X.colwise().mean().transpose();
  s.scale.resize(d.dim());
  for (Eigen::Index c = 0; c < d.dim(); ++c) {
    const double var = (d.X.col(c).array() - s.mean(c)).square().mean();
    s.scale(c) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Dataset Standardizer::apply(const Dataset& d) const {
  Matrix X = (d.X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  return Dataset(std::move(X), d.y);
}

// w^T ((x - mu) / s) + a  =  (w / s)^T x + (a - (w / s)^T mu)
LDepModel Standardizer::fold_into(const LDepModel& m) const {
  const Vector inv = scale.cwiseInverse();
  Matrix W = m.W * inv.asDiagonal();
  Matrix M = m.M * inv.asDiagonal();
  Vector a = m.a - W * mean;
  Vector b = m.b - M * mean;
  return LDepModel(std::move(W), std::move(a), std::move(M), std::move(b));
}

void save_model(const ModelFile& file, std::ostream& out) {
  const LDepModel& m = file.model;
  m.validate();
  auto row = [&out](const char* tag, const auto& v) {
    out << tag;
    for (Eigen::Index c = 0; c < v.size(); ++c) out << ' ' << format_double(v(c));
    out << '\n';
  };
  out << "format " << kModelFormat << '\n';
  out << "dims " << m.input_dim() << ' ' << m.dilation_rows() << ' ' << m.erosion_rows() << '\n';
  for (Eigen::Index i = 0; i < m.W.rows(); ++i) row("W", m.W.row(i));
  row("a", m.a);
  for (Eigen::Index j = 0; j < m.M.rows(); ++j) row("M", m.M.row(j));
  row("b", m.b);
  for (const auto& [k, v] : file.metadata) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "metadata key/value must be single-line tokens");
    out << "meta " << k << ' ' << v << '\n';
  }
}

void save_model(const ModelFile& f, const std::string& path) {
  std::ostringstream buf;
  save_model(f, buf);
  auto out = open_out(path);
  out << buf.str();
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

ModelFile parse_model(std::istream& in) {
  ModelFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_format = false, have_dims = false;
  Eigen::Index n = 0, n1 = 0, n2 = 0;
  std::vector<std::vector<double>> W_rows, M_rows;
  std::optional<std::vector<double>> a, b;

  auto fail = [&line_no](ErrorKind k, const std::string& msg) {
    throw Error(k, "model file line " + std::to_string(line_no) + ": " + msg);
  };
  auto numbers = [&](std::istringstream& ss) {
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) {
      double x;
      if (!parse_number(tok, x) || !std::isfinite(x))
        fail(ErrorKind::Parse, "cannot parse '" + tok + "' as a finite number");
      v.push_back(x);
    }
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ss{std::string(t)};
    std::string key;
    ss >> key;
    if (!have_format) {
      std::string version;
      ss >> version;
      if (key != "format") fail(ErrorKind::Parse, "expected 'format' header");
      if (version != kModelFormat)
        fail(ErrorKind::Version, "unsupported model format '" + version + "' (expected " +
                                     kModelFormat + ")");
      have_format = true;
    } else if (key == "dims") {
      long long a1 = 0, a2 = 0, a3 = 0;
      if (!(ss >> a1 >> a2 >> a3) || a1 < 1 || a2 < 1 || a3 < 1)
        fail(ErrorKind::Parse, "dims needs three positive integers n n1 n2");
      n = a1;
      n1 = a2;
      n2 = a3;
      have_dims = true;
    } else if (key == "W" || key == "M" || key == "a" || key == "b") {
      if (!have_dims) fail(ErrorKind::Parse, "parameters before dims");
      auto v = numbers(ss);
      const Eigen::Index want = (key == "W" || key == "M") ? n : (key == "a" ? n1 : n2);
      if (static_cast<Eigen::Index>(v.size()) != want)
        fail(ErrorKind::Shape, key + " row has " + std::to_string(v.size()) + " values, expected " +
                                   std::to_string(want));
      if (key == "W")
        W_rows.push_back(std::move(v));
      else if (key == "M")
        M_rows.push_back(std::move(v));
      else if (key == "a")
        a = std::move(v);
      else
        b = std::move(v);
    } else if (key == "meta") {
      std::string k;
      ss >> k;
      std::string rest;
      std::getline(ss, rest);
      file.metadata.emplace_back(k, std::string(trim(rest)));
    } else {
      fail(ErrorKind::Parse, "unknown record '" + key + "'");
    }
  }
  if (!have_format) throw Error(ErrorKind::Parse, "model file is empty");
  if (!have_dims) throw Error(ErrorKind::Parse, "model file has no dims record");
  if (static_cast<Eigen::Index>(W_rows.size()) != n1)
    throw Error(ErrorKind::Shape, "n1 = " + std::to_string(n1) + " but file has " +
                                      std::to_string(W_rows.size()) + " rows of W");
  if (static_cast<Eigen::Index>(M_rows.size()) != n2)
    throw Error(ErrorKind::Shape, "n2 = " + std::to_string(n2) + " but file has " +
                                      std::to_string(M_rows.size()) + " rows of M");
  if (!a || !b) throw Error(ErrorKind::Shape, "model file lacks a or b");

  Matrix W(n1, n), M(n2, n);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index c = 0; c < n; ++c) W(i, c) = W_rows[i][c];
  for (Eigen::Index j = 0; j < n2; ++j)
    for (Eigen::Index c = 0; c < n; ++c) M(j, c) = M_rows[j][c];
  file.model = LDepModel(std::move(W), Eigen::Map<const Vector>(a->data(), n1), std::move(M),
                         Eigen::Map<const Vector>(b->data(), n2));
  return file;
}

ModelFile load_model(const std::string& path) {
  auto f = open_in(path);
  try {
    return parse_model(f);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace ldep
