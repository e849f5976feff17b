#pragma once

#include <cstdint>
#include <vector>

// Evaluation metrics over predicted probabilities and binary outcomes.

namespace pjml {

struct Prediction {
  double p;         // predicted probability of outcome 1
  std::uint8_t y;   // observed outcome, 0 or 1
};

using PredictionBatch = std::vector<Prediction>;

// Fraction of predictions on the correct side of the threshold. A probability
// exactly at the threshold predicts 1.
double accuracy(const PredictionBatch& batch, double threshold = 0.5);

// Area under the ROC curve by the rank statistic, with average ranks for tied
// probabilities. Equals the probability that a random positive outranks a
// random negative, ties counting one half. Throws UndefinedAucError when only
// one class is present.
double auc(const PredictionBatch& batch);

// Proportional reduction in classification error relative to always
// predicting the modal outcome. Returns 0 when the modal rule is already
// perfect.
double gk_lambda(const PredictionBatch& batch, double threshold = 0.5);

double rmse(const PredictionBatch& batch);

// Mean negative log-likelihood; probabilities are clamped as in the model
// layer before taking logs.
double log_loss(const PredictionBatch& batch);

}  // namespace pjml
