#include "pjml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pjml/model.hpp"

namespace pjml {

namespace {

void require_nonempty(const PredictionBatch& batch) {
  if (batch.empty()) {
    throw DimensionError("metric over an empty prediction batch");
  }
}

}  // namespace

double accuracy(const PredictionBatch& batch, double threshold) {
  require_nonempty(batch);
  std::size_t correct = 0;
  for (const Prediction& pr : batch) {
    int predicted = pr.p >= threshold ? 1 : 0;
    correct += (predicted == pr.y);
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

double auc(const PredictionBatch& batch) {
  require_nonempty(batch);
  std::size_t positives = 0;
  for (const Prediction& pr : batch) positives += pr.y;
  std::size_t negatives = batch.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedAucError("AUC undefined: evaluation batch has a single outcome class");
  }

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return batch[a].p < batch[b].p; });

  // Sum of average ranks of the positive class, with ties sharing the mean
  // rank of their run.
  double positive_rank_sum = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t run_end = k + 1;
    while (run_end < order.size() && batch[order[run_end]].p == batch[order[k]].p) ++run_end;
    double mean_rank = 0.5 * static_cast<double>(k + 1 + run_end);  // ranks are 1-based
    for (std::size_t t = k; t < run_end; ++t) {
      if (batch[order[t]].y) positive_rank_sum += mean_rank;
    }
    k = run_end;
  }

  double np = static_cast<double>(positives);
  double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double gk_lambda(const PredictionBatch& batch, double threshold) {
  require_nonempty(batch);
  double base_rate = 0.0;
  for (const Prediction& pr : batch) base_rate += pr.y;
  base_rate /= static_cast<double>(batch.size());
  double modal_error = std::min(base_rate, 1.0 - base_rate);
  if (modal_error == 0.0) return 0.0;
  double error = 1.0 - accuracy(batch, threshold);
  return 1.0 - error / modal_error;
}

double rmse(const PredictionBatch& batch) {
  require_nonempty(batch);
  double sum = 0.0;
  for (const Prediction& pr : batch) {
    double diff = pr.p - static_cast<double>(pr.y);
    sum += diff * diff;
  }
  return std::sqrt(sum / static_cast<double>(batch.size()));
}

double log_loss(const PredictionBatch& batch) {
  require_nonempty(batch);
  double sum = 0.0;
  for (const Prediction& pr : batch) {
    double p = std::clamp(pr.p, kProbEpsilon, 1.0 - kProbEpsilon);
    sum += pr.y ? std::log(p) : std::log1p(-p);
  }
  return -sum / static_cast<double>(batch.size());
}

}  // namespace pjml
