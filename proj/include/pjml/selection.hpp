#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pjml/metrics.hpp"
#include "pjml/optimizer.hpp"
#include "pjml/types.hpp"

// Model selection by out-of-sample prediction.
//
// Two drivers are provided. The striated driver splits persons into train,
// validation, and test groups and scores candidates by item-fold
// cross-validation. The elementwise driver holds out random cells of the
// training rows instead, refitting once per random mask, and reserves the
// test rows for the final comparison.

namespace pjml {

struct SearchSpace {
  std::vector<ModelSpec> models;
  std::vector<std::vector<double>> lambda_grid;  // one grid per model
  int folds = 5;
  int restarts = 10;
  double sample_prob = 0.7;
  std::array<double, 3> split = {0.50, 0.25, 0.25};  // train, validation, test rows
  std::uint64_t seed = 0;

  // Throws on empty model list, mismatched grids, or invalid proportions.
  void validate() const;
};

struct Scores {
  double acc = 0, auc = 0, gk = 0, rmse = 0, logloss = 0;
};

// Scores for one (model, lambda) evaluation: the mean over evaluation units
// (folds or mask restarts) plus the per-unit values behind it.
struct EvalReport {
  Scores mean;
  std::vector<Scores> per_unit;
  int undefined_auc_units = 0;  // units whose AUC was undefined and left out of the mean
  double seconds = 0;
};

struct RowSplit {
  ResponseMatrix train, validation, test;
  std::vector<std::int32_t> train_rows, validation_rows, test_rows;  // original person indices
};

// Permutes persons by seed and partitions them by the given proportions.
// Throws SplitDegenerateError if any part would be empty.
RowSplit split_rows(const ResponseMatrix& U, const std::array<double, 3>& proportions,
                    std::uint64_t seed);

// Striated performance test: partitions items into `folds` folds by seed, and
// for each fold fits on all of U_known plus the non-fold columns of U_eval,
// re-estimates the U_eval persons on the non-fold columns, and scores the
// predictions on the fold's observed cells in U_eval. Reports the mean over
// folds. Folds whose evaluation cells are single-class have no AUC and are
// excluded from the AUC mean.
EvalReport striated_performance_test(const ResponseMatrix& U_known, const ResponseMatrix& U_eval,
                                     const ModelSpec& spec, double lambda, int folds,
                                     const FitConfig& cfg);

// Per observed cell, an independent Bernoulli(p) draw routes it to the sample
// (first) or the complement (second). Rows and columns that lose every cell
// are redrawn, so each person and item with any observation keeps at least
// one sampled cell; throws MaskInfeasibleError if 100 redraw rounds cannot
// satisfy that.
std::pair<ResponseMatrix, ResponseMatrix> sample_mask(const ResponseMatrix& U, double p,
                                                      std::uint64_t seed);

struct ModelRow {
  ModelSpec spec;
  double lambda_star = 0;
  double tuning_auc = 0;        // selection-stage AUC at lambda_star
  EvalReport final_report;      // test-stage evaluation at lambda_star
  double seconds = 0;           // wall time spent on this model
};

struct SelectionResult {
  int best_index = -1;
  std::vector<ModelRow> table;  // one row per model, in input order
  const ModelRow& best() const { return table.at(static_cast<std::size_t>(best_index)); }
};

// Striated selection: for each model, every lambda is scored by the striated
// performance test on (train, validation); the best-AUC lambda is then
// rescored on (train + validation, test). The model with the highest test AUC
// wins. Ties break toward smaller r, then larger lambda. Job seeds derive
// from model shape and lambda value, not list position, so the winner is
// invariant under reordering of the candidate list.
SelectionResult best_model_striated(const ResponseMatrix& U, const SearchSpace& space,
                                    const FitConfig& cfg);

// Elementwise selection: rows are pre-split into train (train + validation
// proportions merged) and test. For each (model, lambda), `restarts` random
// masks are drawn over the train rows; each fit uses the sampled cells with
// the complement as the early-stopping validation set and is scored on that
// complement. The best restart-averaged AUC picks lambda; the final score is
// the striated performance test on (train, test) at that lambda.
SelectionResult best_model_elementwise(const ResponseMatrix& U, const SearchSpace& space,
                                       const FitConfig& cfg);

namespace selection_detail {

// Building blocks exposed for verification.

// Round-robin fold assignment after a seeded shuffle: every item lands in
// exactly one fold and sizes differ by at most one.
std::vector<int> assign_folds(int items, int folds, std::uint64_t seed);

// Stacks known rows above eval rows, keeping all known cells and only the
// eval cells outside `fold_items`.
ResponseMatrix stack_for_fold(const ResponseMatrix& U_known, const ResponseMatrix& U_eval,
                              const std::vector<int>& fold_assignment, int fold);

// The eval rows restricted to non-fold columns (for person re-estimation).
ResponseMatrix eval_partial(const ResponseMatrix& U_eval, const std::vector<int>& fold_assignment,
                            int fold);

// The eval rows restricted to fold columns (the cells that get predicted).
ResponseMatrix eval_heldout(const ResponseMatrix& U_eval, const std::vector<int>& fold_assignment,
                            int fold);

// Seed for the fit of one fold inside a striated performance test.
std::uint64_t fold_fit_seed(std::uint64_t base, int fold);

// Seed path for one (model, lambda) selection job, derived from the model
// shape and the lambda bits.
std::uint64_t job_seed(std::uint64_t base, const ModelSpec& spec, double lambda);

// Seed the striated performance test uses for its fold assignment.
std::uint64_t fold_assignment_seed(std::uint64_t cfg_seed);

// Seeds for one elementwise restart: the mask draw and the masked fit.
std::uint64_t mask_seed(std::uint64_t job_base, int restart);
std::uint64_t mask_fit_seed(std::uint64_t job_base, int restart);

// Base seed of the final test-stage evaluations of both drivers.
std::uint64_t final_stage_seed(std::uint64_t space_seed);

}  // namespace selection_detail

}  // namespace pjml
