#pragma once

#include "files.hpp"

#include "ldep/ccp_trainer.hpp"
#include "ldep/error.hpp"
#include "ldep/morpho.hpp"
#include "ldep/problem.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>

namespace ldep::testing {

// Reference W, a, M, b given to 3 decimals.
LDepModel reference_model();

// {(-1) -> -1, (+1) -> +1}
Dataset toy_dataset();

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = -3.0, double hi = 3.0);
LDepModel random_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index n1, Eigen::Index n2,
                       double scale = 2.0);

// Small labelled set with both classes present.
Dataset random_dataset(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n);

// Reference evaluation written with plain loops; shares no code with the library.
double reference_tau(const LDepModel& m, const Vector& x);

struct PropertyResult {
  int cases = 0;
  int failures = 0;
  std::string first_failure;
};

// Runs `body` on `cases` independent generators derived from `seed`. The body
// returns an error message for a failing case.
PropertyResult for_all(int cases, std::uint64_t seed,
                       const std::function<std::optional<std::string>(std::mt19937_64&)>& body);

// Kind of the ldep::Error thrown by `f`, or nullopt when nothing is thrown.
template <class F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace ldep::testing
