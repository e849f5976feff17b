#pragma once

#include <optional>
#include <vector>

#include "pjml/metrics.hpp"
#include "pjml/types.hpp"

// The model family and its penalized log-likelihood.
//
// A response probability is sigma(z) with
//
//   z = item_intercept + person_intercept + sum_k theta_ik * x_jk
//
// where either intercept appears only when the ModelSpec enables it. The
// fitting objective is the log-likelihood over observed cells minus
// lambda * (sum of squared person rows + sum of squared item rows).

namespace pjml {

// Probabilities are clamped into [kProbEpsilon, 1 - kProbEpsilon] so that log
// terms stay finite even for saturated logits.
inline constexpr double kProbEpsilon = 1e-12;

// Numerically stable logistic function with the clamp above applied.
double prob(double z);

// Linear predictor for one (person row, item row) pair. Throws DimensionError
// if either row's length does not match the spec.
double logit(const ModelSpec& spec, const Vec& theta_row, const Vec& x_row);

// Sum of u*log(p) + (1-u)*log(1-p) over observed cells. Missing cells
// contribute nothing; an empty matrix gives 0.
double log_likelihood(const ResponseMatrix& U, const ModelSpec& spec, const ParameterSet& params);

// log_likelihood minus the squared-norm penalty. Slope columns are always
// penalized; intercept columns only when penalize_intercepts is set.
double penalized_objective(const ResponseMatrix& U, const ModelSpec& spec,
                           const ParameterSet& params, double lambda,
                           bool penalize_intercepts = true);

// Exact gradient of the penalized objective. When `subset` is given it holds
// positions into U.cells() and only those cells contribute their data terms;
// `penalty_fraction` scales the penalty term so that gradients over a
// partition of the cells into k batches (each with fraction 1/k) sum to the
// full gradient.
ParameterSet gradient(const ResponseMatrix& U, const ModelSpec& spec, const ParameterSet& params,
                      double lambda, bool penalize_intercepts = true,
                      const std::vector<std::int32_t>* subset = nullptr,
                      double penalty_fraction = 1.0);

// Classical difficulty of an item row: -intercept / first slope. Requires an
// intercept plus at least one slope; throws UndefinedDifficultyError when the
// first slope is zero.
double difficulty(const ModelSpec& spec, const Vec& x_row);

// Predicted probability for every observed cell of U, paired with the
// observed outcome, in U's canonical cell order.
PredictionBatch predict_cells(const ResponseMatrix& U, const ModelSpec& spec,
                              const ParameterSet& params);

}  // namespace pjml
