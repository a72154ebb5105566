#pragma once

#include "ldep/morpho.hpp"
#include "ldep/problem.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ldep {

/// Reads `n` feature columns followed by one label column. Labels -1/+1 or
/// 0/1 (0 maps to -1). A first row with any non-numeric field is a header.
/// Row numbers in error messages are 1-based file lines.
Dataset load_csv(const std::string& path, std::optional<Eigen::Index> expected_dim = std::nullopt);
Dataset parse_csv(std::istream& in, std::optional<Eigen::Index> expected_dim = std::nullopt);

void write_csv(const Dataset& d, const std::string& path);
void write_csv(const Dataset& d, std::ostream& out);

/// Two-class mixture of isotropic Gaussians in the style of Ripley's synthetic
/// benchmark. Each class is an equal-weight mixture of two components.
struct MixtureParams {
  std::array<std::array<double, 2>, 2> negative_means{{{-0.7, 0.3}, {0.3, 0.3}}};
  std::array<std::array<double, 2>, 2> positive_means{{{-0.3, 0.7}, {0.4, 0.7}}};
  double variance = 0.03;
};

/// Each set holds count/2 negatives (rounded down) and the rest positives, in
/// shuffled order. Train is drawn before test from one generator stream.
std::pair<Dataset, Dataset> generate_two_moons_gaussians(std::size_t count_train,
                                                         std::size_t count_test,
                                                         const MixtureParams& params,
                                                         std::uint64_t seed);

struct Confusion {
  std::size_t true_pos = 0, true_neg = 0, false_pos = 0, false_neg = 0;

  std::size_t total() const { return true_pos + true_neg + false_pos + false_neg; }
  double accuracy() const;
};

Confusion confusion(const LDepModel& m, const Dataset& d);
double accuracy(const LDepModel& m, const Dataset& d);

struct GridSpec {
  double xmin = -1.5, xmax = 1.0;
  double ymin = -0.3, ymax = 1.2;
  int steps = 101;
};

/// Rows "x,y,tau,label" over a steps x steps grid, x varying fastest.
void export_grid(const LDepModel& m, const GridSpec& grid, std::ostream& out);
void export_grid(const LDepModel& m, const GridSpec& grid, const std::string& path);

/// Per-feature affine standardization fitted on a training set.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Dataset& d);
  Dataset apply(const Dataset& d) const;
  /// Model on raw features equivalent to `m` applied to standardized ones.
  LDepModel fold_into(const LDepModel& m) const;
};

inline constexpr const char* kModelFormat = "ldep-model/1";

struct ModelFile {
  LDepModel model;
  std::vector<std::pair<std::string, std::string>> metadata;
};

void save_model(const ModelFile& f, const std::string& path);
void save_model(const ModelFile& f, std::ostream& out);
ModelFile load_model(const std::string& path);
ModelFile parse_model(std::istream& in);

std::string format_double(double v);

}  // namespace ldep
