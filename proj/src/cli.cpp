#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "pjml/bound.hpp"
#include "pjml/io.hpp"
#include "pjml/model.hpp"
#include "pjml/optimizer.hpp"
#include "pjml/postprocess.hpp"
#include "pjml/selection.hpp"
#include "pjml/simulate.hpp"
#include "pjml/types.hpp"

namespace pjml {

namespace {

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::data: return "data";
    case ErrorCategory::config: return "config";
    case ErrorCategory::numeric: return "numeric";
  }
  return "unknown";
}

void emit_error_record(const std::string& category, int code, const std::string& message) {
  nlohmann::ordered_json record;
  record["error"]["category"] = category;
  record["error"]["code"] = code;
  record["error"]["message"] = message;
  std::cerr << record.dump() << '\n';
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : text) {
    if (ch == ',') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  parts.push_back(current);
  return parts;
}

double parse_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw Error(ErrorCategory::usage, "expected a number for " + what + ", got '" + text + "'");
  }
  return v;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const std::string& part : split_list(text)) out.push_back(parse_number(part, what));
  return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const std::string& part : split_list(text)) {
    double v = parse_number(part, what);
    int k = static_cast<int>(v);
    if (static_cast<double>(k) != v) {
      throw Error(ErrorCategory::usage, what + " entries must be integers, got '" + part + "'");
    }
    out.push_back(k);
  }
  return out;
}

// Distribution specifications: normal:<mean>,<sd> | point:<value> | empirical:<path>.
// The file behind empirical holds one value per line.
ScalarDistribution parse_distribution(const std::string& text, const std::string& flag) {
  auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "normal") {
    std::vector<double> v = parse_doubles(rest, flag);
    if (v.size() != 2) throw Error(ErrorCategory::usage, flag + ": normal takes <mean>,<sd>");
    if (!(v[1] > 0)) throw Error(ErrorCategory::usage, flag + ": sd must be positive");
    return ScalarDistribution::normal(v[0], v[1] * v[1]);
  }
  if (kind == "point") {
    return ScalarDistribution::point_mass(parse_number(rest, flag));
  }
  if (kind == "empirical") {
    std::ifstream in(rest);
    if (!in) throw Error(ErrorCategory::io, flag + ": cannot open file: " + rest);
    std::vector<double> sample;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      sample.push_back(parse_number(line, rest + " line " + std::to_string(line_number)));
    }
    return ScalarDistribution::empirical(std::move(sample));
  }
  throw Error(ErrorCategory::usage,
              flag + ": expected normal:<mean>,<sd>, point:<value>, or empirical:<path>");
}

// Law specifications for the simulator: uniform:<lo>,<hi> | normal:<mean>,<sd>
// | lognormal:<log-mean>,<log-sd>.
void parse_law(const std::string& text, const std::string& flag, SimConfig::Law& law, double& a,
               double& b) {
  auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  std::vector<double> v = parse_doubles(rest, flag);
  if (v.size() != 2) throw Error(ErrorCategory::usage, flag + ": expected <law>:<a>,<b>");
  if (kind == "uniform") {
    law = SimConfig::Law::uniform;
  } else if (kind == "normal") {
    law = SimConfig::Law::gaussian;
  } else if (kind == "lognormal") {
    law = SimConfig::Law::lognormal;
  } else {
    throw Error(ErrorCategory::usage, flag + ": law must be uniform, normal, or lognormal");
  }
  a = v[0];
  b = v[1];
}

// A headerless rectangular numeric CSV (covariance and loading inputs).
Mat read_raw_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    for (const std::string& part : split_list(line)) {
      row.push_back(parse_number(part, path + " line " + std::to_string(line_number)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged row in " + path, line_number);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyDataError("empty file: " + path);
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot create directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string bool_name(bool v) { return v ? "true" : "false"; }

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string preset;
  int m = 0, n = 0, d = 0;
  std::string mu, sigma = "identity";
  std::string intercept_law = "uniform:-2.5,2.5";
  std::string slope_law = "lognormal:0,0.5";
  std::string pattern = "single";
  std::string loadings;
  double sparsity = -1;  // <0 keeps the preset / default value
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  SimConfig cfg;
  if (!a.preset.empty()) {
    cfg = preset_by_name(a.preset, a.seed);
  } else {
    if (a.m <= 0 || a.n <= 0 || a.d <= 0) {
      throw Error(ErrorCategory::usage, "without --preset, --m, --n, and --d are required");
    }
    cfg.m = a.m;
    cfg.n = a.n;
    cfg.d = a.d;
    if (a.mu.empty()) {
      cfg.mu = Vec::Zero(cfg.d);
    } else {
      std::vector<double> mu = parse_doubles(a.mu, "--mu");
      if (mu.size() != static_cast<std::size_t>(cfg.d)) {
        throw Error(ErrorCategory::usage, "--mu must list exactly d values");
      }
      cfg.mu = Eigen::Map<const Vec>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    }
    cfg.sigma = a.sigma == "identity" ? Mat(Mat::Identity(cfg.d, cfg.d)) : read_raw_csv(a.sigma);
    parse_law(a.intercept_law, "--intercept-law", cfg.intercept_law, cfg.intercept_a,
              cfg.intercept_b);
    parse_law(a.slope_law, "--slope-law", cfg.slope_law, cfg.slope_a, cfg.slope_b);
    if (!a.loadings.empty()) {
      cfg.pattern = LoadingPattern::user_matrix;
      cfg.user_loadings = read_raw_csv(a.loadings);
    } else if (a.pattern == "single") {
      cfg.pattern = LoadingPattern::single_random_dimension;
    } else if (a.pattern == "dense") {
      cfg.pattern = LoadingPattern::dense;
    } else if (a.pattern == "cross") {
      cfg.pattern = LoadingPattern::random_cross;
    } else {
      throw Error(ErrorCategory::usage, "--pattern must be single, dense, or cross");
    }
    cfg.seed = a.seed;
  }
  if (a.sparsity >= 0) cfg.p_miss = a.sparsity;

  Stopwatch total;
  GroundTruth truth = simulate(cfg);

  ensure_directory(a.out);
  std::vector<std::string> person_labels, item_labels;
  for (int i = 0; i < cfg.m; ++i) person_labels.push_back(std::to_string(i));
  for (int j = 0; j < cfg.n; ++j) item_labels.push_back(std::to_string(j));
  save_triplets(truth.responses, join_path(a.out, "triplets.csv"));
  save_matrix(truth.params.theta, person_labels, "person_id", join_path(a.out, "true_theta.csv"));
  save_matrix(truth.params.x, item_labels, "item_id", join_path(a.out, "true_items.csv"));

  RunManifest manifest;
  manifest.subcommand = "simulate";
  manifest.seed = cfg.seed;
  manifest.config["preset"] = a.preset.empty() ? "(custom)" : a.preset;
  manifest.config["m"] = std::to_string(cfg.m);
  manifest.config["n"] = std::to_string(cfg.n);
  manifest.config["d"] = std::to_string(cfg.d);
  manifest.config["p_miss"] = format_double(cfg.p_miss);
  manifest.config["out"] = a.out;
  manifest.timings["simulate"] = total.seconds();
  manifest.write(join_path(a.out, "manifest.json"));

  std::cout << "simulated " << cfg.m << " persons x " << cfg.n << " items (d=" << cfg.d << "), "
            << truth.responses.observed() << " observed cells -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data;
  std::string format = "triplets";
  int dim = -1;
  bool person_intercept = false;
  bool no_item_intercept = false;
  FitConfig cfg;
  bool full_batch = false;
  bool no_penalize_intercepts = false;
  std::string valid;
  std::string out;
};

ResponseMatrix load_responses(const std::string& path, const std::string& format) {
  if (format == "triplets") return load_triplets(path);
  if (format == "dense") return load_dense(path);
  throw Error(ErrorCategory::usage, "--format must be triplets or dense");
}

// Re-indexes a validation file against the training matrix's label maps so
// both share one coordinate system.
ResponseMatrix align_validation(const ResponseMatrix& valid, const ResponseMatrix& train) {
  std::unordered_map<std::string, std::int32_t> person_index, item_index;
  for (int i = 0; i < train.persons(); ++i) person_index.emplace(train.person_label(i), i);
  for (int j = 0; j < train.items(); ++j) item_index.emplace(train.item_label(j), j);
  std::vector<Cell> cells;
  for (const Cell& c : valid.cells()) {
    auto pi = person_index.find(valid.person_label(c.person));
    auto ii = item_index.find(valid.item_label(c.item));
    if (pi == person_index.end() || ii == item_index.end()) {
      throw Error(ErrorCategory::data,
                  "validation cell (" + valid.person_label(c.person) + ", " +
                      valid.item_label(c.item) + ") names an id absent from the training data");
    }
    cells.push_back({pi->second, ii->second, c.value});
  }
  ResponseMatrix out = ResponseMatrix::from_cells(train.persons(), train.items(), std::move(cells));
  std::vector<std::string> person_labels, item_labels;
  for (int i = 0; i < train.persons(); ++i) person_labels.push_back(train.person_label(i));
  for (int j = 0; j < train.items(); ++j) item_labels.push_back(train.item_label(j));
  out.set_labels(std::move(person_labels), std::move(item_labels));
  return out;
}

int cmd_fit(const FitArgs& a) {
  if (a.dim < 0) throw Error(ErrorCategory::usage, "--dim is required");
  ModelSpec spec{a.dim, a.person_intercept, !a.no_item_intercept};
  spec.validate();

  Stopwatch load_timer;
  ResponseMatrix U = load_responses(a.data, a.format);
  std::optional<ResponseMatrix> valid;
  if (!a.valid.empty()) valid = align_validation(load_responses(a.valid, a.format), U);
  double load_seconds = load_timer.seconds();

  FitConfig cfg = a.cfg;
  cfg.full_batch_deterministic = a.full_batch;
  cfg.penalize_intercepts = !a.no_penalize_intercepts;

  Stopwatch fit_timer;
  FitResult result = fit(U, spec, cfg, valid ? &*valid : nullptr);
  double fit_seconds = fit_timer.seconds();

  ensure_directory(a.out);
  std::vector<std::string> person_labels, item_labels;
  for (int i = 0; i < U.persons(); ++i) person_labels.push_back(U.person_label(i));
  for (int j = 0; j < U.items(); ++j) item_labels.push_back(U.item_label(j));
  save_matrix(result.params.theta, person_labels, "person_id", join_path(a.out, "theta.csv"));
  save_matrix(result.params.x, item_labels, "item_id", join_path(a.out, "items.csv"));
  {
    std::ofstream traj(join_path(a.out, "trajectory.csv"));
    if (!traj) throw Error(ErrorCategory::io, "cannot write " + join_path(a.out, "trajectory.csv"));
    traj << "epoch,objective,validation_auc\n";
    for (std::size_t e = 0; e < result.trajectory.size(); ++e) {
      traj << (e + 1) << ',' << format_double(result.trajectory[e].objective) << ',';
      if (result.trajectory[e].validation_auc) {
        traj << format_double(*result.trajectory[e].validation_auc);
      }
      traj << '\n';
    }
  }

  RunManifest manifest;
  manifest.subcommand = "fit";
  manifest.seed = cfg.seed;
  manifest.config["data"] = a.data;
  manifest.config["format"] = a.format;
  manifest.config["dim"] = std::to_string(spec.r);
  manifest.config["person_intercept"] = bool_name(spec.person_intercept);
  manifest.config["item_intercept"] = bool_name(spec.item_intercept);
  manifest.config["lambda"] = format_double(cfg.lambda);
  manifest.config["learning_rate"] = format_double(cfg.learning_rate);
  manifest.config["batches"] = std::to_string(cfg.batch_count);
  manifest.config["max_epochs"] = std::to_string(cfg.max_epochs);
  manifest.config["patience"] = std::to_string(cfg.patience);
  manifest.config["init_scale"] = format_double(cfg.init_scale);
  manifest.config["full_batch_deterministic"] = bool_name(cfg.full_batch_deterministic);
  manifest.config["penalize_intercepts"] = bool_name(cfg.penalize_intercepts);
  manifest.config["valid"] = a.valid;
  manifest.config["out"] = a.out;
  manifest.inputs[a.data] = file_digest(a.data);
  if (!a.valid.empty()) manifest.inputs[a.valid] = file_digest(a.valid);
  manifest.timings["load"] = load_seconds;
  manifest.timings["fit"] = fit_seconds;
  manifest.write(join_path(a.out, "manifest.json"));

  std::cout << "fit " << U.persons() << " x " << U.items() << " (dim=" << spec.r << ", lambda="
            << format_double(cfg.lambda) << "): " << result.epochs_run << " epochs, objective "
            << format_double(result.trajectory.back().objective);
  if (result.best_validation_score) {
    std::cout << ", best validation AUC " << format_double(*result.best_validation_score);
  }
  std::cout << " -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// explore

struct ExploreArgs {
  std::string data;
  std::string preset;
  std::uint64_t sim_seed = 0;
  std::string method;
  std::string dims;
  std::string lambdas;
  int folds = 5;
  int restarts = 10;
  double sample_p = 0.7;
  std::string split = "0.5,0.25,0.25";
  FitConfig cfg;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_explore(const ExploreArgs& a) {
  if (a.data.empty() == a.preset.empty()) {
    throw Error(ErrorCategory::usage, "exactly one of --data and --preset is required");
  }
  if (a.method != "striated" && a.method != "elementwise") {
    throw Error(ErrorCategory::usage, "--method must be striated or elementwise");
  }

  Stopwatch load_timer;
  ResponseMatrix U = a.data.empty() ? simulate(preset_by_name(a.preset, a.sim_seed)).responses
                                    : load_triplets(a.data);
  double load_seconds = load_timer.seconds();

  SearchSpace space;
  for (int d : parse_ints(a.dims, "--dims")) {
    if (d < 0) throw Error(ErrorCategory::usage, "--dims entries must be nonnegative");
    space.models.push_back({d, false, true});
  }
  std::vector<double> grid = parse_doubles(a.lambdas, "--lambdas");
  space.lambda_grid.assign(space.models.size(), grid);
  space.folds = a.folds;
  space.restarts = a.restarts;
  space.sample_prob = a.sample_p;
  std::vector<double> proportions = parse_doubles(a.split, "--split");
  if (proportions.size() != 3) {
    throw Error(ErrorCategory::usage, "--split takes three proportions");
  }
  space.split = {proportions[0], proportions[1], proportions[2]};
  space.seed = a.seed;
  space.validate();

  FitConfig cfg = a.cfg;
  cfg.seed = a.seed;

  Stopwatch search_timer;
  SelectionResult result = a.method == "striated" ? best_model_striated(U, space, cfg)
                                                  : best_model_elementwise(U, space, cfg);
  double search_seconds = search_timer.seconds();

  ensure_directory(a.out);
  const std::string table_path = join_path(a.out, "table.csv");
  {
    std::ofstream table(table_path);
    if (!table) throw Error(ErrorCategory::io, "cannot write " + table_path);
    table << "method,dim,person_intercept,item_intercept,lambda_star,tuning_auc,test_auc,"
             "test_acc,test_gk,test_rmse,test_logloss,undefined_auc_units,seconds,selected\n";
    for (std::size_t k = 0; k < result.table.size(); ++k) {
      const ModelRow& row = result.table[k];
      table << a.method << ',' << row.spec.r << ',' << bool_name(row.spec.person_intercept) << ','
            << bool_name(row.spec.item_intercept) << ',' << format_double(row.lambda_star) << ','
            << format_double(row.tuning_auc) << ',' << format_double(row.final_report.mean.auc)
            << ',' << format_double(row.final_report.mean.acc) << ','
            << format_double(row.final_report.mean.gk) << ','
            << format_double(row.final_report.mean.rmse) << ','
            << format_double(row.final_report.mean.logloss) << ','
            << row.final_report.undefined_auc_units << ',' << format_double(row.seconds) << ','
            << (static_cast<int>(k) == result.best_index ? 1 : 0) << '\n';
    }
  }

  std::printf("%-12s %4s %8s %10s %10s %10s %8s %9s %9s %9s %9s\n", "method", "dim", "lambda*",
              "tune_auc", "test_auc", "test_acc", "test_gk", "test_rmse", "test_ll", "seconds",
              "selected");
  for (std::size_t k = 0; k < result.table.size(); ++k) {
    const ModelRow& row = result.table[k];
    std::printf("%-12s %4d %8.4g %10.4f %10.4f %10.4f %8.4f %9.4f %9.4f %9.1f %9s\n",
                a.method.c_str(), row.spec.r, row.lambda_star, row.tuning_auc,
                row.final_report.mean.auc, row.final_report.mean.acc, row.final_report.mean.gk,
                row.final_report.mean.rmse, row.final_report.mean.logloss, row.seconds,
                static_cast<int>(k) == result.best_index ? "*" : "");
  }

  RunManifest manifest;
  manifest.subcommand = "explore";
  manifest.seed = a.seed;
  manifest.config["method"] = a.method;
  manifest.config["dims"] = a.dims;
  manifest.config["lambdas"] = a.lambdas;
  manifest.config["folds"] = std::to_string(space.folds);
  manifest.config["restarts"] = std::to_string(space.restarts);
  manifest.config["sample_p"] = format_double(space.sample_prob);
  manifest.config["split"] = a.split;
  manifest.config["learning_rate"] = format_double(cfg.learning_rate);
  manifest.config["batches"] = std::to_string(cfg.batch_count);
  manifest.config["max_epochs"] = std::to_string(cfg.max_epochs);
  manifest.config["patience"] = std::to_string(cfg.patience);
  manifest.config["data"] = a.data;
  manifest.config["preset"] = a.preset;
  manifest.config["sim_seed"] = std::to_string(a.sim_seed);
  manifest.config["out"] = a.out;
  if (!a.data.empty()) manifest.inputs[a.data] = file_digest(a.data);
  manifest.timings["load"] = load_seconds;
  manifest.timings["search"] = search_seconds;
  manifest.write(join_path(a.out, "manifest.json"));
  return 0;
}

// ---------------------------------------------------------------------------
// bound

struct BoundArgs {
  std::string theta;
  std::string beta;
  bool from_truth = false;
  std::string theta_file;
  std::string items_file;
  std::string out;
};

int cmd_bound(const BoundArgs& a) {
  Stopwatch total;
  double value = 0;
  if (a.from_truth) {
    if (a.theta_file.empty() || a.items_file.empty()) {
      throw Error(ErrorCategory::usage, "--from-truth requires --theta-file and --items-file");
    }
    auto [theta, person_labels] = load_matrix(a.theta_file);
    auto [items, item_labels] = load_matrix(a.items_file);
    ModelSpec spec{static_cast<int>(theta.cols()), false, true};
    if (items.cols() != theta.cols() + 1) {
      throw DimensionError("item file must have one more column (the intercept) than the ability "
                           "file; got " +
                           std::to_string(items.cols()) + " and " + std::to_string(theta.cols()));
    }
    value = empirical_expected_accuracy(spec, {theta, items});
  } else {
    if (a.theta.empty() || a.beta.empty()) {
      throw Error(ErrorCategory::usage, "--theta and --beta are required without --from-truth");
    }
    value = rasch_expected_accuracy(parse_distribution(a.theta, "--theta"),
                                    parse_distribution(a.beta, "--beta"));
  }

  std::cout << "expected_accuracy " << format_double(value) << '\n';

  if (!a.out.empty()) {
    ensure_directory(a.out);
    {
      std::ofstream csv(join_path(a.out, "bound.csv"));
      if (!csv) throw Error(ErrorCategory::io, "cannot write " + join_path(a.out, "bound.csv"));
      csv << "theta,beta,expected_accuracy\n";
      if (a.from_truth) {
        csv << "truth:" << a.theta_file << ",truth:" << a.items_file << ','
            << format_double(value) << '\n';
      } else {
        csv << a.theta << ',' << a.beta << ',' << format_double(value) << '\n';
      }
    }
    RunManifest manifest;
    manifest.subcommand = "bound";
    manifest.config["theta"] = a.theta;
    manifest.config["beta"] = a.beta;
    manifest.config["from_truth"] = bool_name(a.from_truth);
    manifest.config["theta_file"] = a.theta_file;
    manifest.config["items_file"] = a.items_file;
    manifest.config["out"] = a.out;
    if (!a.theta_file.empty()) manifest.inputs[a.theta_file] = file_digest(a.theta_file);
    if (!a.items_file.empty()) manifest.inputs[a.items_file] = file_digest(a.items_file);
    manifest.timings["bound"] = total.seconds();
    manifest.write(join_path(a.out, "manifest.json"));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string items;
  std::string data;
  int dim = -1;
  bool person_intercept = false;
  bool no_item_intercept = false;
  double lambda = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_score(const ScoreArgs& a) {
  Stopwatch load_timer;
  auto [item_values, item_labels] = load_matrix(a.items);
  ResponseMatrix U = load_triplets(a.data);
  double load_seconds = load_timer.seconds();

  ModelSpec spec{a.dim, a.person_intercept, !a.no_item_intercept};
  if (a.dim < 0) {
    spec.r = static_cast<int>(item_values.cols()) - (spec.item_intercept ? 1 : 0);
  }
  spec.validate();
  if (item_values.cols() != spec.item_cols()) {
    throw DimensionError("item file has " + std::to_string(item_values.cols()) +
                         " parameter columns but the model needs " +
                         std::to_string(spec.item_cols()));
  }

  // Data item ids are matched to item-file rows by label, so the two files
  // may list items in different orders.
  std::unordered_map<std::string, Eigen::Index> item_row;
  for (std::size_t k = 0; k < item_labels.size(); ++k) {
    item_row.emplace(item_labels[k], static_cast<Eigen::Index>(k));
  }
  Mat items(U.items(), item_values.cols());
  for (int j = 0; j < U.items(); ++j) {
    auto it = item_row.find(U.item_label(j));
    if (it == item_row.end()) {
      throw Error(ErrorCategory::data,
                  "item '" + U.item_label(j) + "' in the data has no row in " + a.items);
    }
    items.row(j) = item_values.row(it->second);
  }

  FitConfig cfg;
  cfg.lambda = a.lambda;
  cfg.seed = a.seed;

  Stopwatch score_timer;
  PersonScores scores = score_persons(U, spec, items, cfg);
  PredictionBatch predictions = predict_cells(U, spec, {scores.theta, items});
  double score_seconds = score_timer.seconds();

  ensure_directory(a.out);
  {
    std::ofstream persons(join_path(a.out, "persons.csv"));
    if (!persons) throw Error(ErrorCategory::io, "cannot write " + join_path(a.out, "persons.csv"));
    persons << "person_id";
    for (Eigen::Index c = 0; c < scores.theta.cols(); ++c) persons << ",col" << c;
    persons << ",scored\n";
    for (int i = 0; i < U.persons(); ++i) {
      persons << U.person_label(i);
      for (Eigen::Index c = 0; c < scores.theta.cols(); ++c) {
        persons << ',' << format_double(scores.theta(i, c));
      }
      persons << ',' << static_cast<int>(scores.scored[static_cast<std::size_t>(i)]) << '\n';
    }
  }
  {
    std::ofstream preds(join_path(a.out, "predictions.csv"));
    if (!preds) {
      throw Error(ErrorCategory::io, "cannot write " + join_path(a.out, "predictions.csv"));
    }
    preds << "person_id,item_id,response,probability\n";
    for (std::size_t k = 0; k < predictions.size(); ++k) {
      const Cell& c = U.cells()[k];
      preds << U.person_label(c.person) << ',' << U.item_label(c.item) << ','
            << static_cast<int>(c.value) << ',' << format_double(predictions[k].p) << '\n';
    }
  }

  RunManifest manifest;
  manifest.subcommand = "score";
  manifest.seed = a.seed;
  manifest.config["items"] = a.items;
  manifest.config["data"] = a.data;
  manifest.config["dim"] = std::to_string(spec.r);
  manifest.config["person_intercept"] = bool_name(spec.person_intercept);
  manifest.config["item_intercept"] = bool_name(spec.item_intercept);
  manifest.config["lambda"] = format_double(a.lambda);
  manifest.config["out"] = a.out;
  manifest.inputs[a.items] = file_digest(a.items);
  manifest.inputs[a.data] = file_digest(a.data);
  manifest.timings["load"] = load_seconds;
  manifest.timings["score"] = score_seconds;
  manifest.write(join_path(a.out, "manifest.json"));

  std::cout << "scored " << U.persons() << " persons, " << predictions.size()
            << " predictions -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string table;
  std::string est_theta;
  std::string true_theta;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  if (a.table.empty() && a.est_theta.empty()) {
    throw Error(ErrorCategory::usage, "nothing to report: pass --table and/or --est-theta");
  }
  if (a.est_theta.empty() != a.true_theta.empty()) {
    throw Error(ErrorCategory::usage, "--est-theta and --true-theta go together");
  }
  ensure_directory(a.out);
  RunManifest manifest;
  manifest.subcommand = "report";

  if (!a.table.empty()) {
    std::ifstream in(a.table);
    if (!in) throw Error(ErrorCategory::io, "cannot open file: " + a.table);
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataError("empty file: " + a.table);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_list(line);
    auto column = [&](const std::string& name) {
      for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == name) return k;
      }
      throw ParseError("column '" + name + "' missing from " + a.table, 1);
    };
    const std::size_t method_col = column("method");
    const std::size_t dim_col = column("dim");
    const std::size_t lambda_col = column("lambda_star");
    const std::size_t auc_col = column("test_auc");
    const std::size_t selected_col = column("selected");

    std::ofstream out_csv(join_path(a.out, "auc_vs_dim.csv"));
    if (!out_csv) {
      throw Error(ErrorCategory::io, "cannot write " + join_path(a.out, "auc_vs_dim.csv"));
    }
    out_csv << "method,dim,lambda_star,test_auc,selected\n";
    long line_number = 1;
    while (std::getline(in, line)) {
      ++line_number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields = split_list(line);
      if (fields.size() != header.size()) throw ParseError("ragged row in " + a.table, line_number);
      out_csv << fields[method_col] << ',' << fields[dim_col] << ',' << fields[lambda_col] << ','
              << fields[auc_col] << ',' << fields[selected_col] << '\n';
    }
    manifest.config["table"] = a.table;
    manifest.inputs[a.table] = file_digest(a.table);
  }

  if (!a.est_theta.empty()) {
    auto [est, est_labels] = load_matrix(a.est_theta);
    auto [truth, true_labels] = load_matrix(a.true_theta);
    if (est.rows() != truth.rows()) {
      throw DimensionError("ability files disagree on person count: " +
                           std::to_string(est.rows()) + " vs " + std::to_string(truth.rows()));
    }
    Orthogonalized orth = orthogonalize(est);
    RecoveryReport recovery = recovery_report(orth.scores, truth);

    std::ofstream out_csv(join_path(a.out, "recovery.csv"));
    if (!out_csv) {
      throw Error(ErrorCategory::io, "cannot write " + join_path(a.out, "recovery.csv"));
    }
    out_csv << "estimate_col,true_col,correlation,variance_share\n";
    for (std::size_t k = 0; k < recovery.matched_true.size(); ++k) {
      if (recovery.matched_true[k] < 0) continue;
      out_csv << k << ',' << recovery.matched_true[k] << ','
              << format_double(recovery.matched_corr[k]) << ','
              << format_double(recovery.variance_share[k]) << '\n';
    }
    manifest.config["est_theta"] = a.est_theta;
    manifest.config["true_theta"] = a.true_theta;
    manifest.inputs[a.est_theta] = file_digest(a.est_theta);
    manifest.inputs[a.true_theta] = file_digest(a.true_theta);
  }

  manifest.config["out"] = a.out;
  manifest.write(join_path(a.out, "manifest.json"));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Penalized joint maximum likelihood for sparse binary response matrices"};
  app.name("pjml");
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic dataset with known truth");
  sim->add_option("--preset", sim_args.preset,
                  "Named configuration: multiunidim, sparse5d, sparse5d-small, correlated3d");
  sim->add_option("--m", sim_args.m, "Persons (custom runs)");
  sim->add_option("--n", sim_args.n, "Items (custom runs)");
  sim->add_option("--d", sim_args.d, "Latent dimensions (custom runs)");
  sim->add_option("--mu", sim_args.mu, "Ability means, comma separated (default zeros)");
  sim->add_option("--sigma", sim_args.sigma, "Ability covariance: 'identity' or a CSV path");
  sim->add_option("--intercept-law", sim_args.intercept_law,
                  "uniform:<lo>,<hi> | normal:<mean>,<sd> | lognormal:<log-mean>,<log-sd>");
  sim->add_option("--slope-law", sim_args.slope_law, "Same grammar as --intercept-law");
  sim->add_option("--pattern", sim_args.pattern, "Loading pattern: single, dense, or cross");
  sim->add_option("--loadings", sim_args.loadings, "CSV of item rows (intercept then slopes)");
  sim->add_option("--sparsity", sim_args.sparsity, "Fraction of cells deleted at random");
  sim->add_option("--seed", sim_args.seed, "Random seed");
  sim->add_option("--out", sim_args.out, "Output directory")->required();

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit one model at one penalty weight");
  fit_cmd->add_option("--data", fit_args.data, "Response file")->required();
  fit_cmd->add_option("--format", fit_args.format, "triplets (default) or dense");
  fit_cmd->add_option("--dim", fit_args.dim, "Latent dimensions")->required();
  fit_cmd->add_flag("--person-intercept", fit_args.person_intercept, "Add a person intercept");
  fit_cmd->add_flag("--no-item-intercept", fit_args.no_item_intercept, "Drop the item intercept");
  fit_cmd->add_option("--lambda", fit_args.cfg.lambda, "Penalty weight");
  fit_cmd->add_option("--learning-rate", fit_args.cfg.learning_rate, "Step size");
  fit_cmd->add_option("--batches", fit_args.cfg.batch_count, "Mini-batches per epoch");
  fit_cmd->add_option("--max-epochs", fit_args.cfg.max_epochs, "Epoch cap");
  fit_cmd->add_option("--patience", fit_args.cfg.patience,
                      "Epochs without validation improvement before stopping");
  fit_cmd->add_option("--init-scale", fit_args.cfg.init_scale, "Sd of the random start");
  fit_cmd->add_flag("--full-batch", fit_args.full_batch,
                    "One batch per epoch in canonical order, no shuffling");
  fit_cmd->add_flag("--no-penalize-intercepts", fit_args.no_penalize_intercepts,
                    "Exclude intercept columns from the penalty");
  fit_cmd->add_option("--valid", fit_args.valid, "Held-out responses for early stopping");
  fit_cmd->add_option("--seed", fit_args.cfg.seed, "Random seed");
  fit_cmd->add_option("--out", fit_args.out, "Output directory")->required();

  ExploreArgs explore_args;
  CLI::App* explore = app.add_subcommand("explore", "Grid-search dimensions and penalties");
  explore->add_option("--data", explore_args.data, "Response triplet file");
  explore->add_option("--preset", explore_args.preset, "Simulate this preset instead of loading");
  explore->add_option("--sim-seed", explore_args.sim_seed, "Seed for --preset data");
  explore->add_option("--method", explore_args.method, "striated or elementwise")->required();
  explore->add_option("--dims", explore_args.dims, "Candidate dimensions, comma separated")
      ->required();
  explore->add_option("--lambdas", explore_args.lambdas, "Penalty grid, comma separated")
      ->required();
  explore->add_option("--folds", explore_args.folds, "Item folds (striated stages)");
  explore->add_option("--restarts", explore_args.restarts, "Random masks (elementwise tuning)");
  explore->add_option("--sample-p", explore_args.sample_p, "Cell-sampling probability");
  explore->add_option("--split", explore_args.split, "Row proportions train,validation,test");
  explore->add_option("--learning-rate", explore_args.cfg.learning_rate, "Step size");
  explore->add_option("--batches", explore_args.cfg.batch_count, "Mini-batches per epoch");
  explore->add_option("--max-epochs", explore_args.cfg.max_epochs, "Epoch cap");
  explore->add_option("--patience", explore_args.cfg.patience,
                      "Epochs without validation improvement before stopping");
  explore->add_option("--seed", explore_args.seed, "Random seed");
  explore->add_option("--out", explore_args.out, "Output directory")->required();

  BoundArgs bound_args;
  CLI::App* bound = app.add_subcommand("bound", "Expected-accuracy ceiling");
  bound->add_option("--theta", bound_args.theta,
                    "Ability law: normal:<mean>,<sd> | point:<v> | empirical:<path>");
  bound->add_option("--beta", bound_args.beta, "Difficulty law, same grammar");
  bound->add_flag("--from-truth", bound_args.from_truth,
                  "Average max(p, 1-p) over a known parameter set");
  bound->add_option("--theta-file", bound_args.theta_file, "Ability matrix (--from-truth)");
  bound->add_option("--items-file", bound_args.items_file, "Item matrix (--from-truth)");
  bound->add_option("--out", bound_args.out, "Output directory (optional)");

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "Estimate persons against fixed item parameters");
  score->add_option("--items", score_args.items, "Item parameter file")->required();
  score->add_option("--data", score_args.data, "Response triplet file")->required();
  score->add_option("--dim", score_args.dim, "Latent dimensions (default: from the item file)");
  score->add_flag("--person-intercept", score_args.person_intercept, "Add a person intercept");
  score->add_flag("--no-item-intercept", score_args.no_item_intercept, "Drop the item intercept");
  score->add_option("--lambda", score_args.lambda, "Penalty weight for the person problems");
  score->add_option("--seed", score_args.seed, "Random seed");
  score->add_option("--out", score_args.out, "Output directory")->required();

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "Summaries from earlier outputs");
  report->add_option("--table", report_args.table, "table.csv from explore");
  report->add_option("--est-theta", report_args.est_theta, "Estimated ability file");
  report->add_option("--true-theta", report_args.true_theta, "True ability file");
  report->add_option("--out", report_args.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    emit_error_record("usage", static_cast<int>(ErrorCategory::usage), e.what());
    return static_cast<int>(ErrorCategory::usage);
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit_cmd->parsed()) return cmd_fit(fit_args);
    if (explore->parsed()) return cmd_explore(explore_args);
    if (bound->parsed()) return cmd_bound(bound_args);
    if (score->parsed()) return cmd_score(score_args);
    if (report->parsed()) return cmd_report(report_args);
  } catch (const Error& e) {
    emit_error_record(category_name(e.category()), static_cast<int>(e.category()), e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    emit_error_record("internal", 1, e.what());
    return 1;
  }
  return 0;
}

}  // namespace pjml
