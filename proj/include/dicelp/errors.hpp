#pragma once

#include <stdexcept>
#include <string>

namespace dicelp {

// Ergodicity/coverage assumption failures and similar model-level problems.
struct AssumptionViolation : std::runtime_error {
  explicit AssumptionViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration outside the supported oracle/optimizer domain.
struct UnsupportedConfig : std::runtime_error {
  explicit UnsupportedConfig(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration that is valid but provably yields a biased saddle point
// where an unbiased oracle was requested.
struct BiasedConfig : std::runtime_error {
  explicit BiasedConfig(const std::string& msg) : std::runtime_error(msg) {}
};

// Optimization blow-up.
struct Diverged : std::runtime_error {
  explicit Diverged(const std::string& msg) : std::runtime_error(msg) {}
};

// Singular / ill-conditioned linear system.
struct RankDeficiency : std::runtime_error {
  RankDeficiency(const std::string& msg, int rank_) : std::runtime_error(msg), rank(rank_) {}
  int rank;
};

struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dicelp
