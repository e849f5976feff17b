#include "pjml/model.hpp"

#include <cmath>
#include <numeric>

#include "pjml/kernels.hpp"

namespace pjml {

double prob(double z) {
  double p;
  if (z >= 0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    double e = std::exp(z);
    p = e / (1.0 + e);
  }
  if (p < kProbEpsilon) return kProbEpsilon;
  if (p > 1.0 - kProbEpsilon) return 1.0 - kProbEpsilon;
  return p;
}

double logit(const ModelSpec& spec, const Vec& theta_row, const Vec& x_row) {
  spec.validate();
  if (theta_row.size() != spec.person_cols() || x_row.size() != spec.item_cols()) {
    throw DimensionError("parameter row lengths " + std::to_string(theta_row.size()) + " and " +
                         std::to_string(x_row.size()) + " do not match the model");
  }
  double z = 0.0;
  int toff = 0, xoff = 0;
  if (spec.person_intercept) z += theta_row[toff++];
  if (spec.item_intercept) z += x_row[xoff++];
  for (int k = 0; k < spec.r; ++k) {
    z += theta_row[toff + k] * x_row[xoff + k];
  }
  return z;
}

double log_likelihood(const ResponseMatrix& U, const ModelSpec& spec, const ParameterSet& params) {
  params.validate(spec, U.persons(), U.items());
  return kernels::log_likelihood_parallel(spec, params.theta, params.x, U.cells(), U.persons());
}

namespace {

// Sum of squares over the penalized columns of a parameter matrix: slopes
// always, the intercept column only when requested.
double penalty_norm(const Mat& values, bool has_intercept, bool penalize_intercepts) {
  if (values.cols() == 0) return 0.0;
  if (has_intercept && !penalize_intercepts) {
    if (values.cols() == 1) return 0.0;
    return values.rightCols(values.cols() - 1).squaredNorm();
  }
  return values.squaredNorm();
}

}  // namespace

double penalized_objective(const ResponseMatrix& U, const ModelSpec& spec,
                           const ParameterSet& params, double lambda, bool penalize_intercepts) {
  if (lambda < 0) {
    throw DimensionError("penalty weight must be nonnegative");
  }
  double ll = log_likelihood(U, spec, params);
  double penalty = penalty_norm(params.theta, spec.person_intercept, penalize_intercepts) +
                   penalty_norm(params.x, spec.item_intercept, penalize_intercepts);
  return ll - lambda * penalty;
}

ParameterSet gradient(const ResponseMatrix& U, const ModelSpec& spec, const ParameterSet& params,
                      double lambda, bool penalize_intercepts,
                      const std::vector<std::int32_t>* subset, double penalty_fraction) {
  params.validate(spec, U.persons(), U.items());

  std::vector<std::int32_t> all;
  if (subset == nullptr) {
    all.resize(U.observed());
    std::iota(all.begin(), all.end(), 0);
    subset = &all;
  }

  ParameterSet g;
  g.theta = Mat::Zero(params.theta.rows(), params.theta.cols());
  g.x = Mat::Zero(params.x.rows(), params.x.cols());

  std::vector<double> residuals;
  kernels::residuals_parallel(spec, params.theta, params.x, U.cells(), *subset, residuals);

  kernels::GroupIndex by_person, by_item;
  kernels::group_by_person(U.cells(), *subset, U.persons(), by_person);
  kernels::group_by_item(U.cells(), *subset, U.items(), by_item);
  kernels::grouped_gradient_parallel(spec, params.x, params.theta, U.cells(), by_person, by_item,
                                     residuals, *subset, g.theta, g.x);

  const double w = 2.0 * lambda * penalty_fraction;
  if (w != 0.0) {
    auto apply_penalty = [&](Mat& grad, const Mat& values, bool has_intercept) {
      if (values.cols() == 0) return;
      int first = (has_intercept && !penalize_intercepts) ? 1 : 0;
      if (first >= values.cols()) return;
      grad.rightCols(values.cols() - first) -= w * values.rightCols(values.cols() - first);
    };
    apply_penalty(g.theta, params.theta, spec.person_intercept);
    apply_penalty(g.x, params.x, spec.item_intercept);
  }
  return g;
}

PredictionBatch predict_cells(const ResponseMatrix& U, const ModelSpec& spec,
                              const ParameterSet& params) {
  params.validate(spec, U.persons(), U.items());
  PredictionBatch batch;
  batch.reserve(U.observed());
  for (const Cell& c : U.cells()) {
    double z = kernels::cell_logit(spec, params.theta, params.x, c.person, c.item);
    batch.push_back({prob(z), c.value});
  }
  return batch;
}

double difficulty(const ModelSpec& spec, const Vec& x_row) {
  if (!spec.item_intercept || spec.r < 1) {
    throw DimensionError("difficulty requires an item intercept and at least one slope");
  }
  if (x_row.size() != spec.item_cols()) {
    throw DimensionError("item row length does not match the model");
  }
  double slope = x_row[1];
  if (slope == 0.0) {
    throw UndefinedDifficultyError("difficulty undefined: first slope is zero");
  }
  return -x_row[0] / slope;
}

}  // namespace pjml
