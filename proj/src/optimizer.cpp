#include "pjml/optimizer.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "pjml/kernels.hpp"
#include "pjml/metrics.hpp"
#include "pjml/model.hpp"
#include "pjml/rng.hpp"

namespace pjml {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;
constexpr double kObjectiveTolerance = 1e-6;

void validate_fit_inputs(const ResponseMatrix& U_train, const ModelSpec& spec,
                         const FitConfig& cfg, const ResponseMatrix* U_valid) {
  spec.validate();
  if (U_train.observed() == 0) {
    throw EmptyDataError("training matrix has no observed cells");
  }
  if (cfg.lambda < 0) throw DimensionError("penalty weight must be nonnegative");
  if (cfg.learning_rate <= 0) throw DimensionError("learning rate must be positive");
  if (cfg.init_scale <= 0) throw DimensionError("init scale must be positive");
  if (cfg.batch_count < 1 ||
      static_cast<std::size_t>(cfg.batch_count) > U_train.observed()) {
    throw DimensionError("batch count must be between 1 and the observed cell count");
  }
  if (cfg.max_epochs < 1) throw DimensionError("max epochs must be positive");
  if (cfg.patience < 1 || cfg.patience > cfg.max_epochs) {
    throw DimensionError("patience must be between 1 and max epochs");
  }
  if (U_valid != nullptr) {
    if (U_valid->persons() != U_train.persons() || U_valid->items() != U_train.items()) {
      throw DimensionError("validation matrix dimensions differ from training");
    }
    std::unordered_set<std::int64_t> train_keys;
    train_keys.reserve(U_train.observed() * 2);
    for (const Cell& c : U_train.cells()) {
      train_keys.insert(static_cast<std::int64_t>(c.person) * U_train.items() + c.item);
    }
    bool has_positive = false, has_negative = false;
    for (const Cell& c : U_valid->cells()) {
      if (train_keys.count(static_cast<std::int64_t>(c.person) * U_train.items() + c.item)) {
        throw DimensionError("validation cells overlap training cells");
      }
      (c.value ? has_positive : has_negative) = true;
    }
    if (!has_positive || !has_negative) {
      throw DegenerateValidationError(
          "validation set lacks one outcome class; its AUC is undefined");
    }
  }
}

// One adaptive-moment ascent step on a parameter block.
void adam_step(Mat& param, Mat& moment1, Mat& moment2, const Mat& grad, double lr, int t) {
  moment1 = kBeta1 * moment1 + (1.0 - kBeta1) * grad;
  moment2.array() = kBeta2 * moment2.array() + (1.0 - kBeta2) * grad.array().square();
  const double correction1 = 1.0 - std::pow(kBeta1, t);
  const double correction2 = 1.0 - std::pow(kBeta2, t);
  param.array() += lr * (moment1.array() / correction1) /
                   ((moment2.array() / correction2).sqrt() + kAdamEpsilon);
}

double penalty_value(const ModelSpec& spec, const ParameterSet& params,
                     bool penalize_intercepts) {
  auto block = [&](const Mat& values, bool has_intercept) {
    if (values.cols() == 0) return 0.0;
    int first = (has_intercept && !penalize_intercepts) ? 1 : 0;
    if (first >= values.cols()) return 0.0;
    return values.rightCols(values.cols() - first).squaredNorm();
  };
  return block(params.theta, spec.person_intercept) + block(params.x, spec.item_intercept);
}

}  // namespace

FitResult fit(const ResponseMatrix& U_train, const ModelSpec& spec, const FitConfig& cfg,
              const ResponseMatrix* U_valid) {
  validate_fit_inputs(U_train, spec, cfg, U_valid);

  const int m = U_train.persons();
  const int n = U_train.items();
  const std::size_t observed = U_train.observed();

  Rng rng(cfg.seed);
  ParameterSet params;
  params.theta.resize(m, spec.person_cols());
  params.x.resize(n, spec.item_cols());
  for (Eigen::Index i = 0; i < params.theta.rows(); ++i) {
    for (Eigen::Index c = 0; c < params.theta.cols(); ++c) {
      params.theta(i, c) = rng.normal(0.0, cfg.init_scale);
    }
  }
  for (Eigen::Index j = 0; j < params.x.rows(); ++j) {
    for (Eigen::Index c = 0; c < params.x.cols(); ++c) {
      params.x(j, c) = rng.normal(0.0, cfg.init_scale);
    }
  }

  Mat m1_theta = Mat::Zero(m, spec.person_cols());
  Mat v1_theta = Mat::Zero(m, spec.person_cols());
  Mat m1_x = Mat::Zero(n, spec.item_cols());
  Mat v1_x = Mat::Zero(n, spec.item_cols());
  Mat g_theta(m, spec.person_cols());
  Mat g_x(n, spec.item_cols());

  const int batches = cfg.full_batch_deterministic ? 1 : cfg.batch_count;
  const double penalty_fraction = 1.0 / static_cast<double>(batches);
  const double penalty_weight = 2.0 * cfg.lambda * penalty_fraction;

  std::vector<std::int32_t> positions(observed);
  std::iota(positions.begin(), positions.end(), 0);
  std::vector<std::int32_t> batch;
  std::vector<double> residuals;
  kernels::GroupIndex by_person, by_item;

  FitResult result;
  ParameterSet best_params;
  double best_auc = -1.0;
  int epochs_since_best = 0;
  double previous_objective = 0.0;
  int adam_t = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (!cfg.full_batch_deterministic) {
      rng.shuffle(positions);
    }
    for (int b = 0; b < batches; ++b) {
      const std::size_t begin = observed * static_cast<std::size_t>(b) / batches;
      const std::size_t end = observed * (static_cast<std::size_t>(b) + 1) / batches;
      batch.assign(positions.begin() + static_cast<std::ptrdiff_t>(begin),
                   positions.begin() + static_cast<std::ptrdiff_t>(end));

      kernels::residuals_parallel(spec, params.theta, params.x, U_train.cells(), batch,
                                  residuals);
      kernels::group_by_person(U_train.cells(), batch, m, by_person);
      kernels::group_by_item(U_train.cells(), batch, n, by_item);
      g_theta.setZero();
      g_x.setZero();
      kernels::grouped_gradient_parallel(spec, params.x, params.theta, U_train.cells(),
                                         by_person, by_item, residuals, batch, g_theta, g_x);
      if (penalty_weight != 0.0) {
        int tfirst = (spec.person_intercept && !cfg.penalize_intercepts) ? 1 : 0;
        if (tfirst < g_theta.cols()) {
          g_theta.rightCols(g_theta.cols() - tfirst) -=
              penalty_weight * params.theta.rightCols(params.theta.cols() - tfirst);
        }
        int xfirst = (spec.item_intercept && !cfg.penalize_intercepts) ? 1 : 0;
        if (xfirst < g_x.cols()) {
          g_x.rightCols(g_x.cols() - xfirst) -=
              penalty_weight * params.x.rightCols(params.x.cols() - xfirst);
        }
      }

      ++adam_t;
      if (g_theta.size() > 0) {
        adam_step(params.theta, m1_theta, v1_theta, g_theta, cfg.learning_rate, adam_t);
      }
      if (g_x.size() > 0) {
        adam_step(params.x, m1_x, v1_x, g_x, cfg.learning_rate, adam_t);
      }
    }

    double objective =
        kernels::log_likelihood_parallel(spec, params.theta, params.x, U_train.cells(), m) -
        cfg.lambda * penalty_value(spec, params, cfg.penalize_intercepts);

    EpochRecord record{objective, std::nullopt};
    if (U_valid != nullptr) {
      double validation_auc = auc(predict_cells(*U_valid, spec, params));
      record.validation_auc = validation_auc;
      result.trajectory.push_back(record);
      result.epochs_run = epoch;
      if (validation_auc > best_auc) {
        best_auc = validation_auc;
        best_params = params;
        epochs_since_best = 0;
      } else {
        ++epochs_since_best;
      }
      if (epochs_since_best >= cfg.patience) break;
    } else {
      result.trajectory.push_back(record);
      result.epochs_run = epoch;
      if (epoch > 1 && objective - previous_objective < kObjectiveTolerance) break;
      previous_objective = objective;
    }
  }

  if (U_valid != nullptr) {
    result.params = std::move(best_params);
    result.best_validation_score = best_auc;
  } else {
    result.params = std::move(params);
  }
  return result;
}

PersonScores score_persons(const ResponseMatrix& U_partial, const ModelSpec& spec,
                           const Mat& item_params, const FitConfig& cfg) {
  spec.validate();
  if (item_params.rows() != U_partial.items() || item_params.cols() != spec.item_cols()) {
    throw DimensionError("item parameter matrix does not match the model and item count");
  }
  if (!item_params.allFinite()) {
    throw DimensionError("item parameters contain non-finite entries");
  }

  const int m = U_partial.persons();
  const int q = spec.person_cols();
  PersonScores out;
  out.theta = Mat::Zero(m, q);
  out.scored.assign(static_cast<std::size_t>(m), 0);

  std::vector<std::int32_t> all(U_partial.observed());
  std::iota(all.begin(), all.end(), 0);
  kernels::GroupIndex by_person;
  kernels::group_by_person(U_partial.cells(), all, m, by_person);

  if (q == 0) {
    for (int i = 0; i < m; ++i) {
      out.scored[static_cast<std::size_t>(i)] =
          by_person.offsets[static_cast<std::size_t>(i)] !=
          by_person.offsets[static_cast<std::size_t>(i) + 1];
    }
    return out;
  }

  // Penalty multiplier per coordinate: slopes always, the intercept
  // coordinate only when configured.
  Vec penalty_diag = Vec::Constant(q, cfg.lambda);
  if (spec.person_intercept && !cfg.penalize_intercepts) penalty_diag[0] = 0.0;

  const int xoff = spec.item_intercept ? 1 : 0;
  const std::vector<Cell>& cells = U_partial.cells();

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < m; ++i) {
    const std::int32_t begin = by_person.offsets[static_cast<std::size_t>(i)];
    const std::int32_t end = by_person.offsets[static_cast<std::size_t>(i) + 1];
    if (begin == end) continue;  // zero row, flag stays cleared
    out.scored[static_cast<std::size_t>(i)] = 1;

    const int count = end - begin;
    // Companion rows: the person-intercept coordinate multiplies 1, slope
    // coordinates multiply the item's slopes. The item intercept is a fixed
    // offset per cell.
    Mat design(count, q);
    Vec offsets(count);
    Vec outcomes(count);
    for (int e = 0; e < count; ++e) {
      const Cell& c = cells[static_cast<std::size_t>(by_person.order[
          static_cast<std::size_t>(begin + e)])];
      int col = 0;
      if (spec.person_intercept) design(e, col++) = 1.0;
      for (int k = 0; k < spec.r; ++k) {
        design(e, col + k) = item_params(c.item, xoff + k);
      }
      offsets[e] = spec.item_intercept ? item_params(c.item, 0) : 0.0;
      outcomes[e] = static_cast<double>(c.value);
    }

    Vec theta_i = Vec::Zero(q);
    auto objective_at = [&](const Vec& t) {
      double value = 0.0;
      for (int e = 0; e < count; ++e) {
        double p = prob(design.row(e).dot(t) + offsets[e]);
        value += outcomes[e] ? std::log(p) : std::log1p(-p);
      }
      value -= t.dot(penalty_diag.cwiseProduct(t));
      return value;
    };

    double current = objective_at(theta_i);
    for (int iter = 0; iter < 200; ++iter) {
      Vec grad = -2.0 * penalty_diag.cwiseProduct(theta_i);
      Eigen::MatrixXd hessian = (2.0 * penalty_diag).asDiagonal();
      for (int e = 0; e < count; ++e) {
        double p = prob(design.row(e).dot(theta_i) + offsets[e]);
        grad += (outcomes[e] - p) * design.row(e).transpose();
        hessian += p * (1.0 - p) * design.row(e).transpose() * design.row(e);
      }
      if (grad.norm() < 1e-6) break;
      hessian.diagonal().array() += 1e-10;
      Vec step = hessian.ldlt().solve(grad);
      if (!step.allFinite()) break;

      double alpha = 1.0;
      double proposed = objective_at(theta_i + alpha * step);
      while (proposed < current && alpha > 1e-6) {
        alpha *= 0.5;
        proposed = objective_at(theta_i + alpha * step);
      }
      if (proposed < current) break;
      theta_i += alpha * step;
      current = proposed;
    }
    out.theta.row(i) = theta_i.transpose();
  }
  return out;
}

}  // namespace pjml
