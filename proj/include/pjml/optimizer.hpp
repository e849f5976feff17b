#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pjml/types.hpp"

// Fitting by mini-batched adaptive-moment gradient ascent, and per-person
// re-estimation with item parameters held fixed.

namespace pjml {

struct FitConfig {
  double lambda = 0.0;
  double learning_rate = 0.1;
  int batch_count = 10;
  int max_epochs = 500;
  int patience = 5;                     // epochs without validation improvement
  std::uint64_t seed = 0;
  double init_scale = 0.1;              // standard deviation of the random start
  bool full_batch_deterministic = false;  // one batch, canonical order, no shuffling
  bool penalize_intercepts = true;
};

struct EpochRecord {
  double objective;                       // penalized objective on the training data
  std::optional<double> validation_auc;   // present when a validation set was supplied
};

struct FitResult {
  ParameterSet params;
  int epochs_run = 0;
  std::optional<double> best_validation_score;
  std::vector<EpochRecord> trajectory;
};

// Maximizes the penalized objective.
//
// Parameters start i.i.d. Normal(0, init_scale^2) from the seed. Each epoch
// shuffles the observed cells, splits them into batch_count near-equal
// batches, and applies one adaptive-moment step per batch (moment decays
// 0.9 / 0.999, stabilizer 1e-8). With a validation set, the validation AUC is
// scored every epoch and fitting stops after `patience` epochs without
// improvement, returning the best-scoring epoch's parameters. Without one,
// fitting stops at max_epochs or as soon as an epoch improves the full
// objective by less than 1e-6.
//
// U_valid must share both dimensions with U_train, be disjoint from it in
// observed cells, and contain both outcome classes (throws
// DegenerateValidationError otherwise).
FitResult fit(const ResponseMatrix& U_train, const ModelSpec& spec, const FitConfig& cfg,
              const ResponseMatrix* U_valid = nullptr);

struct PersonScores {
  Mat theta;                    // persons x spec.person_cols()
  std::vector<std::uint8_t> scored;  // 0 for persons with no observed cells
};

// Re-estimates person rows against fixed item parameters by maximizing the
// same penalized objective person by person (the per-person problems are
// independent and concave). Each problem is solved by damped Newton steps to
// gradient norm < 1e-6 or 200 iterations. Persons with no observed cells get
// a zero row and a cleared flag.
PersonScores score_persons(const ResponseMatrix& U_partial, const ModelSpec& spec,
                           const Mat& item_params, const FitConfig& cfg);

}  // namespace pjml
