#include "pjml/selection.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>

#include "pjml/model.hpp"
#include "pjml/rng.hpp"

namespace pjml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Seed path tags keeping the independent random streams of the selection
// machinery apart.
constexpr std::uint64_t kTagSplit = 0x5354;
constexpr std::uint64_t kTagFolds = 0x464c;
constexpr std::uint64_t kTagFoldFit = 0x4646;
constexpr std::uint64_t kTagMask = 0x4d53;
constexpr std::uint64_t kTagMaskFit = 0x4d46;
constexpr std::uint64_t kTagFinal = 0x464e;

ResponseMatrix restrict_rows(const ResponseMatrix& U, const std::vector<std::int32_t>& rows) {
  std::vector<std::int32_t> remap(static_cast<std::size_t>(U.persons()), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    remap[static_cast<std::size_t>(rows[k])] = static_cast<std::int32_t>(k);
  }
  std::vector<Cell> cells;
  for (const Cell& c : U.cells()) {
    std::int32_t target = remap[static_cast<std::size_t>(c.person)];
    if (target >= 0) cells.push_back({target, c.item, c.value});
  }
  ResponseMatrix out =
      ResponseMatrix::from_cells(static_cast<int>(rows.size()), U.items(), std::move(cells));
  if (!U.person_labels().empty() || !U.item_labels().empty()) {
    std::vector<std::string> person_labels;
    person_labels.reserve(rows.size());
    for (std::int32_t r : rows) person_labels.push_back(U.person_label(r));
    out.set_labels(std::move(person_labels), U.item_labels());
  }
  return out;
}

// Stacks the rows of A above the rows of B (shared item space).
ResponseMatrix stack_rows(const ResponseMatrix& A, const ResponseMatrix& B) {
  if (A.items() != B.items()) {
    throw DimensionError("row stacking requires matching item counts");
  }
  std::vector<Cell> cells(A.cells());
  cells.reserve(A.observed() + B.observed());
  for (const Cell& c : B.cells()) {
    cells.push_back({c.person + A.persons(), c.item, c.value});
  }
  return ResponseMatrix::from_cells(A.persons() + B.persons(), A.items(), std::move(cells));
}

Scores scores_without_auc(const PredictionBatch& batch) {
  Scores s;
  s.acc = accuracy(batch);
  s.gk = gk_lambda(batch);
  s.rmse = rmse(batch);
  s.logloss = log_loss(batch);
  return s;
}

// Accumulates per-unit scores into a mean, leaving units with undefined AUC
// out of the AUC average only.
EvalReport summarize(std::vector<Scores> per_unit, const std::vector<bool>& auc_defined) {
  EvalReport report;
  report.per_unit = std::move(per_unit);
  const std::size_t units = report.per_unit.size();
  if (units == 0) return report;
  std::size_t auc_units = 0;
  for (std::size_t u = 0; u < units; ++u) {
    const Scores& s = report.per_unit[u];
    report.mean.acc += s.acc;
    report.mean.gk += s.gk;
    report.mean.rmse += s.rmse;
    report.mean.logloss += s.logloss;
    if (auc_defined[u]) {
      report.mean.auc += s.auc;
      ++auc_units;
    } else {
      ++report.undefined_auc_units;
    }
  }
  const double count = static_cast<double>(units);
  report.mean.acc /= count;
  report.mean.gk /= count;
  report.mean.rmse /= count;
  report.mean.logloss /= count;
  report.mean.auc = auc_units > 0 ? report.mean.auc / static_cast<double>(auc_units) : 0.0;
  return report;
}

// Chooses the grid index with the highest AUC; exact ties go to the larger
// lambda.
std::size_t pick_lambda(const std::vector<double>& grid, const std::vector<double>& aucs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (aucs[k] > aucs[best] || (aucs[k] == aucs[best] && grid[k] > grid[best])) {
      best = k;
    }
  }
  return best;
}

// Chooses the best model row by final AUC; ties go to smaller r, then to
// larger selected lambda, then to the earlier row.
int pick_model(const std::vector<ModelRow>& table) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(table.size()); ++j) {
    const ModelRow& cand = table[static_cast<std::size_t>(j)];
    const ModelRow& cur = table[static_cast<std::size_t>(best)];
    double a = cand.final_report.mean.auc;
    double b = cur.final_report.mean.auc;
    if (a > b) {
      best = j;
    } else if (a == b) {
      if (cand.spec.r < cur.spec.r ||
          (cand.spec.r == cur.spec.r && cand.lambda_star > cur.lambda_star)) {
        best = j;
      }
    }
  }
  return best;
}

}  // namespace

void SearchSpace::validate() const {
  if (models.empty()) throw DimensionError("empty model list");
  if (lambda_grid.size() != models.size()) {
    throw DimensionError("lambda grid count does not match model count");
  }
  for (const auto& grid : lambda_grid) {
    if (grid.empty()) throw DimensionError("empty lambda grid");
    for (double l : grid) {
      if (l < 0) throw DimensionError("negative lambda in grid");
    }
  }
  for (const ModelSpec& spec : models) spec.validate();
  if (folds < 2) throw DimensionError("fold count must be at least 2");
  if (restarts < 1) throw DimensionError("restart count must be positive");
  if (!(sample_prob > 0.0 && sample_prob < 1.0)) {
    throw DimensionError("sample probability must lie strictly between 0 and 1");
  }
  double total = split[0] + split[1] + split[2];
  if (std::abs(total - 1.0) > 1e-9 || split[0] <= 0 || split[1] <= 0 || split[2] <= 0) {
    throw DimensionError("split proportions must be positive and sum to 1");
  }
}

RowSplit split_rows(const ResponseMatrix& U, const std::array<double, 3>& proportions,
                    std::uint64_t seed) {
  double total = proportions[0] + proportions[1] + proportions[2];
  if (std::abs(total - 1.0) > 1e-9 || proportions[0] <= 0 || proportions[1] <= 0 ||
      proportions[2] <= 0) {
    throw DimensionError("split proportions must be positive and sum to 1");
  }
  const int m = U.persons();
  std::vector<std::int32_t> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, {kTagSplit}));
  rng.shuffle(perm);

  const int c1 = static_cast<int>(std::llround(proportions[0] * m));
  const int c2 = static_cast<int>(std::llround((proportions[0] + proportions[1]) * m));
  if (c1 < 1 || c2 - c1 < 1 || m - c2 < 1) {
    throw SplitDegenerateError("a split part would be empty with " + std::to_string(m) +
                               " persons");
  }

  RowSplit out;
  out.train_rows.assign(perm.begin(), perm.begin() + c1);
  out.validation_rows.assign(perm.begin() + c1, perm.begin() + c2);
  out.test_rows.assign(perm.begin() + c2, perm.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.validation_rows.begin(), out.validation_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train = restrict_rows(U, out.train_rows);
  out.validation = restrict_rows(U, out.validation_rows);
  out.test = restrict_rows(U, out.test_rows);
  return out;
}

namespace selection_detail {

std::vector<int> assign_folds(int items, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > items) {
    throw DimensionError("fold count must be between 2 and the item count");
  }
  std::vector<std::int32_t> order(static_cast<std::size_t>(items));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> assignment(static_cast<std::size_t>(items));
  for (int k = 0; k < items; ++k) {
    assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k % folds;
  }
  return assignment;
}

ResponseMatrix stack_for_fold(const ResponseMatrix& U_known, const ResponseMatrix& U_eval,
                              const std::vector<int>& fold_assignment, int fold) {
  if (U_known.items() != U_eval.items()) {
    throw DimensionError("known and evaluation matrices must share the item set");
  }
  std::vector<Cell> cells(U_known.cells());
  cells.reserve(U_known.observed() + U_eval.observed());
  for (const Cell& c : U_eval.cells()) {
    if (fold_assignment[static_cast<std::size_t>(c.item)] != fold) {
      cells.push_back({c.person + U_known.persons(), c.item, c.value});
    }
  }
  return ResponseMatrix::from_cells(U_known.persons() + U_eval.persons(), U_known.items(),
                                    std::move(cells));
}

ResponseMatrix eval_partial(const ResponseMatrix& U_eval, const std::vector<int>& fold_assignment,
                            int fold) {
  std::vector<Cell> cells;
  for (const Cell& c : U_eval.cells()) {
    if (fold_assignment[static_cast<std::size_t>(c.item)] != fold) cells.push_back(c);
  }
  return ResponseMatrix::from_cells(U_eval.persons(), U_eval.items(), std::move(cells));
}

ResponseMatrix eval_heldout(const ResponseMatrix& U_eval, const std::vector<int>& fold_assignment,
                            int fold) {
  std::vector<Cell> cells;
  for (const Cell& c : U_eval.cells()) {
    if (fold_assignment[static_cast<std::size_t>(c.item)] == fold) cells.push_back(c);
  }
  return ResponseMatrix::from_cells(U_eval.persons(), U_eval.items(), std::move(cells));
}

std::uint64_t fold_fit_seed(std::uint64_t base, int fold) {
  return derive_seed(base, {kTagFoldFit, static_cast<std::uint64_t>(fold)});
}

std::uint64_t job_seed(std::uint64_t base, const ModelSpec& spec, double lambda) {
  return derive_seed(base, {static_cast<std::uint64_t>(spec.r),
                            static_cast<std::uint64_t>(spec.person_intercept),
                            static_cast<std::uint64_t>(spec.item_intercept),
                            std::bit_cast<std::uint64_t>(lambda)});
}

std::uint64_t fold_assignment_seed(std::uint64_t cfg_seed) {
  return derive_seed(cfg_seed, {kTagFolds});
}

std::uint64_t mask_seed(std::uint64_t job_base, int restart) {
  return derive_seed(job_base, {kTagMask, static_cast<std::uint64_t>(restart)});
}

std::uint64_t mask_fit_seed(std::uint64_t job_base, int restart) {
  return derive_seed(job_base, {kTagMaskFit, static_cast<std::uint64_t>(restart)});
}

std::uint64_t final_stage_seed(std::uint64_t space_seed) {
  return derive_seed(space_seed, {kTagFinal});
}

}  // namespace selection_detail

EvalReport striated_performance_test(const ResponseMatrix& U_known, const ResponseMatrix& U_eval,
                                     const ModelSpec& spec, double lambda, int folds,
                                     const FitConfig& cfg) {
  auto start = Clock::now();
  const std::vector<int> assignment = selection_detail::assign_folds(
      U_known.items(), folds, selection_detail::fold_assignment_seed(cfg.seed));

  std::vector<Scores> per_fold;
  std::vector<bool> auc_defined;
  for (int fold = 0; fold < folds; ++fold) {
    ResponseMatrix heldout = selection_detail::eval_heldout(U_eval, assignment, fold);
    if (heldout.observed() == 0) continue;  // nothing to score in this fold

    ResponseMatrix fit_set = selection_detail::stack_for_fold(U_known, U_eval, assignment, fold);
    FitConfig fold_cfg = cfg;
    fold_cfg.lambda = lambda;
    fold_cfg.seed = selection_detail::fold_fit_seed(cfg.seed, fold);
    FitResult fitted = fit(fit_set, spec, fold_cfg);

    ResponseMatrix partial = selection_detail::eval_partial(U_eval, assignment, fold);
    PersonScores persons = score_persons(partial, spec, fitted.params.x, fold_cfg);

    ParameterSet eval_params{persons.theta, fitted.params.x};
    PredictionBatch batch = predict_cells(heldout, spec, eval_params);

    Scores s = scores_without_auc(batch);
    bool defined = true;
    try {
      s.auc = auc(batch);
    } catch (const UndefinedAucError&) {
      defined = false;
    }
    per_fold.push_back(s);
    auc_defined.push_back(defined);
  }

  EvalReport report = summarize(std::move(per_fold), auc_defined);
  report.seconds = seconds_since(start);
  return report;
}

std::pair<ResponseMatrix, ResponseMatrix> sample_mask(const ResponseMatrix& U, double p,
                                                      std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DimensionError("mask probability must lie strictly between 0 and 1");
  }
  const std::vector<Cell>& cells = U.cells();
  const std::size_t count = cells.size();
  Rng rng(derive_seed(seed, {kTagMask}));

  std::vector<std::uint8_t> sampled(count);
  for (std::size_t e = 0; e < count; ++e) sampled[e] = rng.bernoulli(p);

  // Redraw rows and columns that lost every cell until each person and item
  // with observations keeps at least one sampled cell.
  std::vector<int> person_kept(static_cast<std::size_t>(U.persons()));
  std::vector<int> item_kept(static_cast<std::size_t>(U.items()));
  std::vector<int> person_seen(static_cast<std::size_t>(U.persons()));
  std::vector<int> item_seen(static_cast<std::size_t>(U.items()));
  for (const Cell& c : cells) {
    ++person_seen[static_cast<std::size_t>(c.person)];
    ++item_seen[static_cast<std::size_t>(c.item)];
  }

  bool feasible = false;
  for (int attempt = 0; attempt < 100 && !feasible; ++attempt) {
    std::fill(person_kept.begin(), person_kept.end(), 0);
    std::fill(item_kept.begin(), item_kept.end(), 0);
    for (std::size_t e = 0; e < count; ++e) {
      if (sampled[e]) {
        ++person_kept[static_cast<std::size_t>(cells[e].person)];
        ++item_kept[static_cast<std::size_t>(cells[e].item)];
      }
    }
    feasible = true;
    for (int i = 0; i < U.persons(); ++i) {
      if (person_seen[static_cast<std::size_t>(i)] > 0 &&
          person_kept[static_cast<std::size_t>(i)] == 0) {
        feasible = false;
      }
    }
    for (int j = 0; j < U.items(); ++j) {
      if (item_seen[static_cast<std::size_t>(j)] > 0 &&
          item_kept[static_cast<std::size_t>(j)] == 0) {
        feasible = false;
      }
    }
    if (feasible) break;
    for (std::size_t e = 0; e < count; ++e) {
      const Cell& c = cells[e];
      bool bad_person = person_seen[static_cast<std::size_t>(c.person)] > 0 &&
                        person_kept[static_cast<std::size_t>(c.person)] == 0;
      bool bad_item = item_seen[static_cast<std::size_t>(c.item)] > 0 &&
                      item_kept[static_cast<std::size_t>(c.item)] == 0;
      if (bad_person || bad_item) sampled[e] = rng.bernoulli(p);
    }
  }
  if (!feasible) {
    throw MaskInfeasibleError("mask retention constraint unsatisfied after 100 redraw rounds");
  }

  std::vector<Cell> sample_cells, complement_cells;
  for (std::size_t e = 0; e < count; ++e) {
    (sampled[e] ? sample_cells : complement_cells).push_back(cells[e]);
  }
  ResponseMatrix sample =
      ResponseMatrix::from_cells(U.persons(), U.items(), std::move(sample_cells));
  ResponseMatrix complement =
      ResponseMatrix::from_cells(U.persons(), U.items(), std::move(complement_cells));
  sample.set_labels(U.person_labels(), U.item_labels());
  complement.set_labels(U.person_labels(), U.item_labels());
  return {std::move(sample), std::move(complement)};
}

SelectionResult best_model_striated(const ResponseMatrix& U, const SearchSpace& space,
                                    const FitConfig& cfg) {
  space.validate();
  RowSplit split = split_rows(U, space.split, space.seed);
  ResponseMatrix train_plus_validation = stack_rows(split.train, split.validation);

  const std::size_t models = space.models.size();
  SelectionResult result;
  result.table.resize(models);

  // Flatten the (model, lambda) grid into independent jobs.
  struct Job {
    std::size_t model;
    std::size_t lambda_index;
  };
  std::vector<Job> jobs;
  for (std::size_t j = 0; j < models; ++j) {
    for (std::size_t l = 0; l < space.lambda_grid[j].size(); ++l) jobs.push_back({j, l});
  }
  std::vector<double> job_auc(jobs.size(), 0.0);
  std::vector<double> job_seconds(jobs.size(), 0.0);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(jobs.size()); ++k) {
    const Job& job = jobs[static_cast<std::size_t>(k)];
    const ModelSpec& spec = space.models[job.model];
    const double lambda = space.lambda_grid[job.model][job.lambda_index];
    FitConfig job_cfg = cfg;
    job_cfg.seed = selection_detail::job_seed(space.seed, spec, lambda);
    EvalReport report =
        striated_performance_test(split.train, split.validation, spec, lambda, space.folds,
                                  job_cfg);
    job_auc[static_cast<std::size_t>(k)] = report.mean.auc;
    job_seconds[static_cast<std::size_t>(k)] = report.seconds;
  }

  std::vector<std::vector<double>> tuning_auc(models);
  std::vector<double> tuning_seconds(models, 0.0);
  for (std::size_t j = 0; j < models; ++j) {
    tuning_auc[j].resize(space.lambda_grid[j].size());
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    tuning_auc[jobs[k].model][jobs[k].lambda_index] = job_auc[k];
    tuning_seconds[jobs[k].model] += job_seconds[k];
  }

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(models); ++j) {
    auto start = Clock::now();
    const std::size_t sj = static_cast<std::size_t>(j);
    const ModelSpec& spec = space.models[sj];
    const std::size_t choice = pick_lambda(space.lambda_grid[sj], tuning_auc[sj]);
    const double lambda_star = space.lambda_grid[sj][choice];

    FitConfig final_cfg = cfg;
    final_cfg.seed =
        selection_detail::job_seed(selection_detail::final_stage_seed(space.seed), spec, lambda_star);
    EvalReport final_report = striated_performance_test(train_plus_validation, split.test, spec,
                                                        lambda_star, space.folds, final_cfg);

    ModelRow& row = result.table[sj];
    row.spec = spec;
    row.lambda_star = lambda_star;
    row.tuning_auc = tuning_auc[sj][choice];
    row.final_report = std::move(final_report);
    row.seconds = tuning_seconds[sj] + seconds_since(start);
  }

  result.best_index = pick_model(result.table);
  return result;
}

SelectionResult best_model_elementwise(const ResponseMatrix& U, const SearchSpace& space,
                                       const FitConfig& cfg) {
  space.validate();
  RowSplit split = split_rows(U, space.split, space.seed);
  ResponseMatrix train = stack_rows(split.train, split.validation);  // train + validation merged

  const std::size_t models = space.models.size();
  SelectionResult result;
  result.table.resize(models);

  struct Job {
    std::size_t model;
    std::size_t lambda_index;
  };
  std::vector<Job> jobs;
  for (std::size_t j = 0; j < models; ++j) {
    for (std::size_t l = 0; l < space.lambda_grid[j].size(); ++l) jobs.push_back({j, l});
  }
  std::vector<double> job_auc(jobs.size(), 0.0);
  std::vector<double> job_seconds(jobs.size(), 0.0);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(jobs.size()); ++k) {
    auto job_start = Clock::now();
    const Job& job = jobs[static_cast<std::size_t>(k)];
    const ModelSpec& spec = space.models[job.model];
    const double lambda = space.lambda_grid[job.model][job.lambda_index];
    const std::uint64_t base = selection_detail::job_seed(space.seed, spec, lambda);

    std::vector<Scores> per_restart;
    std::vector<bool> auc_defined;
    for (int r = 0; r < space.restarts; ++r) {
      auto [sample, complement] =
          sample_mask(train, space.sample_prob, selection_detail::mask_seed(base, r));
      FitConfig restart_cfg = cfg;
      restart_cfg.lambda = lambda;
      restart_cfg.seed = selection_detail::mask_fit_seed(base, r);
      FitResult fitted = fit(sample, spec, restart_cfg, &complement);

      PredictionBatch batch = predict_cells(complement, spec, fitted.params);
      Scores s = scores_without_auc(batch);
      bool defined = true;
      try {
        s.auc = auc(batch);
      } catch (const UndefinedAucError&) {
        defined = false;
      }
      per_restart.push_back(s);
      auc_defined.push_back(defined);
    }
    EvalReport tuning = summarize(std::move(per_restart), auc_defined);
    job_auc[static_cast<std::size_t>(k)] = tuning.mean.auc;
    job_seconds[static_cast<std::size_t>(k)] = seconds_since(job_start);
  }

  std::vector<std::vector<double>> tuning_auc(models);
  std::vector<double> tuning_seconds(models, 0.0);
  for (std::size_t j = 0; j < models; ++j) {
    tuning_auc[j].resize(space.lambda_grid[j].size());
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    tuning_auc[jobs[k].model][jobs[k].lambda_index] = job_auc[k];
    tuning_seconds[jobs[k].model] += job_seconds[k];
  }

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(models); ++j) {
    auto start = Clock::now();
    const std::size_t sj = static_cast<std::size_t>(j);
    const ModelSpec& spec = space.models[sj];
    const std::size_t choice = pick_lambda(space.lambda_grid[sj], tuning_auc[sj]);
    const double lambda_star = space.lambda_grid[sj][choice];

    FitConfig final_cfg = cfg;
    final_cfg.seed =
        selection_detail::job_seed(selection_detail::final_stage_seed(space.seed), spec, lambda_star);
    EvalReport final_report =
        striated_performance_test(train, split.test, spec, lambda_star, space.folds, final_cfg);

    ModelRow& row = result.table[sj];
    row.spec = spec;
    row.lambda_star = lambda_star;
    row.tuning_auc = tuning_auc[sj][choice];
    row.final_report = std::move(final_report);
    row.seconds = tuning_seconds[sj] + seconds_since(start);
  }

  result.best_index = pick_model(result.table);
  return result;
}

}  // namespace pjml
