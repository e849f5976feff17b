#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pjml/types.hpp"

// Synthetic data with known ground truth.

namespace pjml {

// How item slope rows are generated.
enum class LoadingPattern {
  single_random_dimension,  // one nonzero slope on a uniformly chosen dimension
  dense,                    // every slope drawn from the slope law
  random_cross,             // 1 to 3 active dimensions chosen per item
  user_matrix,              // slopes (and intercepts) taken from user_loadings
};

struct SimConfig {
  enum class Law { uniform, gaussian, lognormal };

  int m = 0;   // persons
  int n = 0;   // items
  int d = 1;   // latent dimensions

  Vec mu;      // ability mean, length d
  Mat sigma;   // ability covariance, d x d symmetric positive definite

  Law intercept_law = Law::uniform;
  double intercept_a = -2.5, intercept_b = 2.5;  // uniform: bounds; gaussian: mean, sd

  Law slope_law = Law::lognormal;
  double slope_a = 0.0, slope_b = 0.5;  // lognormal: log-mean, log-sd; gaussian: mean, sd

  LoadingPattern pattern = LoadingPattern::single_random_dimension;
  std::optional<Mat> user_loadings;  // n x (1 + d): intercept column then slopes

  double p_miss = 0.0;  // cells deleted completely at random
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  ModelSpec spec;          // item-intercept model of dimension d
  ParameterSet params;     // true abilities and item parameters
  Mat probabilities;       // m x n success probabilities
  ResponseMatrix responses;
};

// Draws abilities from MVN(mu, sigma), item rows per the configured laws and
// loading pattern, Bernoulli responses from the implied probabilities, and
// finally deletes cells completely at random with probability p_miss. Fully
// determined by cfg.seed.
GroundTruth simulate(const SimConfig& cfg);

// Deletes each observed cell independently with probability p_miss.
ResponseMatrix apply_mcar(const ResponseMatrix& U, double p_miss, std::uint64_t seed);

// Named configurations used throughout the tests and the CLI.
//
//   multiunidim   1000 x 60, d = 3, independent standard abilities, uniform
//                 intercepts on [-2.5, 2.5], one lognormal slope per item.
//   sparse5d      1000 x 50 (or 80 x 20 when small), d = 5, every parameter
//                 standard normal, dense loadings.
//   correlated3d  2000 x 30, d = 3, correlated abilities with unequal means,
//                 cross-loading items on 1 to 3 dimensions.
SimConfig preset_multiunidim(std::uint64_t seed);
SimConfig preset_sparse5d(std::uint64_t seed, bool small = false, double p_miss = 0.0);
SimConfig preset_correlated3d(std::uint64_t seed);

// Resolves a preset by name; throws Error(usage) for unknown names.
SimConfig preset_by_name(const std::string& name, std::uint64_t seed);

}  // namespace pjml
