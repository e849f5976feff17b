#include "pjml/simulate.hpp"

#include <Eigen/Cholesky>

#include <cmath>

#include "pjml/kernels.hpp"
#include "pjml/model.hpp"
#include "pjml/rng.hpp"

namespace pjml {

void SimConfig::validate() const {
  if (m < 1 || n < 1) throw DimensionError("simulation needs at least one person and one item");
  if (d < 1) throw DimensionError("simulation dimension must be at least 1");
  if (mu.size() != d) throw DimensionError("ability mean length does not match dimension");
  if (sigma.rows() != d || sigma.cols() != d) {
    throw DimensionError("ability covariance must be d x d");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw CovarianceError("ability covariance is not symmetric");
  }
  if (pattern == LoadingPattern::user_matrix) {
    if (!user_loadings.has_value()) {
      throw DimensionError("user loading pattern requires a loading matrix");
    }
    if (user_loadings->rows() != n || user_loadings->cols() != d + 1) {
      throw DimensionError("user loading matrix must be n x (1 + d)");
    }
  }
  if (p_miss < 0.0 || p_miss >= 1.0) {
    throw DimensionError("missingness probability must lie in [0, 1)");
  }
}

namespace {

double draw_law(Rng& rng, SimConfig::Law law, double a, double b) {
  switch (law) {
    case SimConfig::Law::uniform:
      return rng.uniform(a, b);
    case SimConfig::Law::gaussian:
      return rng.normal(a, b);
    case SimConfig::Law::lognormal:
      return rng.lognormal(a, b);
  }
  return 0.0;
}

}  // namespace

GroundTruth simulate(const SimConfig& cfg) {
  cfg.validate();

  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(cfg.sigma));
  if (llt.info() != Eigen::Success) {
    throw CovarianceError("ability covariance is not positive definite");
  }
  const Eigen::MatrixXd chol = llt.matrixL();

  Rng rng(cfg.seed);
  GroundTruth truth;
  truth.spec = ModelSpec::m2pl(cfg.d);

  truth.params.theta.resize(cfg.m, cfg.d);
  Vec standard(cfg.d);
  for (int i = 0; i < cfg.m; ++i) {
    for (int k = 0; k < cfg.d; ++k) standard[k] = rng.normal();
    truth.params.theta.row(i) = (cfg.mu + chol * standard).transpose();
  }

  truth.params.x.resize(cfg.n, cfg.d + 1);
  truth.params.x.setZero();
  for (int j = 0; j < cfg.n; ++j) {
    switch (cfg.pattern) {
      case LoadingPattern::user_matrix:
        truth.params.x.row(j) = cfg.user_loadings->row(j);
        break;
      case LoadingPattern::single_random_dimension: {
        truth.params.x(j, 0) = draw_law(rng, cfg.intercept_law, cfg.intercept_a, cfg.intercept_b);
        int active = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.d)));
        truth.params.x(j, 1 + active) = draw_law(rng, cfg.slope_law, cfg.slope_a, cfg.slope_b);
        break;
      }
      case LoadingPattern::dense: {
        truth.params.x(j, 0) = draw_law(rng, cfg.intercept_law, cfg.intercept_a, cfg.intercept_b);
        for (int k = 0; k < cfg.d; ++k) {
          truth.params.x(j, 1 + k) = draw_law(rng, cfg.slope_law, cfg.slope_a, cfg.slope_b);
        }
        break;
      }
      case LoadingPattern::random_cross: {
        truth.params.x(j, 0) = draw_law(rng, cfg.intercept_law, cfg.intercept_a, cfg.intercept_b);
        int active = 1 + static_cast<int>(rng.below(3));
        active = std::min(active, cfg.d);
        // Choose `active` distinct dimensions by partial Fisher-Yates.
        std::vector<int> dims(static_cast<std::size_t>(cfg.d));
        for (int k = 0; k < cfg.d; ++k) dims[static_cast<std::size_t>(k)] = k;
        for (int k = 0; k < active; ++k) {
          int pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.d - k)));
          std::swap(dims[static_cast<std::size_t>(k)], dims[static_cast<std::size_t>(pick)]);
          truth.params.x(j, 1 + dims[static_cast<std::size_t>(k)]) =
              draw_law(rng, cfg.slope_law, cfg.slope_a, cfg.slope_b);
        }
        break;
      }
    }
  }

  truth.probabilities.resize(cfg.m, cfg.n);
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(cfg.m) * static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.m; ++i) {
    for (int j = 0; j < cfg.n; ++j) {
      double p = prob(kernels::cell_logit(truth.spec, truth.params.theta, truth.params.x, i, j));
      truth.probabilities(i, j) = p;
      cells.push_back({i, j, static_cast<std::uint8_t>(rng.bernoulli(p) ? 1 : 0)});
    }
  }
  truth.responses = ResponseMatrix::from_cells(cfg.m, cfg.n, std::move(cells));
  if (cfg.p_miss > 0.0) {
    truth.responses = apply_mcar(truth.responses, cfg.p_miss, derive_seed(cfg.seed, {0x4d43}));
  }
  return truth;
}

ResponseMatrix apply_mcar(const ResponseMatrix& U, double p_miss, std::uint64_t seed) {
  if (p_miss < 0.0 || p_miss >= 1.0) {
    throw DimensionError("missingness probability must lie in [0, 1)");
  }
  if (p_miss == 0.0) return U;
  Rng rng(seed);
  std::vector<Cell> kept;
  kept.reserve(U.observed());
  for (const Cell& c : U.cells()) {
    if (!rng.bernoulli(p_miss)) kept.push_back(c);
  }
  ResponseMatrix out = ResponseMatrix::from_cells(U.persons(), U.items(), std::move(kept));
  out.set_labels(U.person_labels(), U.item_labels());
  return out;
}

SimConfig preset_multiunidim(std::uint64_t seed) {
  SimConfig cfg;
  cfg.m = 1000;
  cfg.n = 60;
  cfg.d = 3;
  cfg.mu = Vec::Zero(3);
  cfg.sigma = Mat::Identity(3, 3);
  cfg.intercept_law = SimConfig::Law::uniform;
  cfg.intercept_a = -2.5;
  cfg.intercept_b = 2.5;
  cfg.slope_law = SimConfig::Law::lognormal;
  cfg.slope_a = 0.0;
  cfg.slope_b = 0.5;
  cfg.pattern = LoadingPattern::single_random_dimension;
  cfg.seed = seed;
  return cfg;
}

SimConfig preset_sparse5d(std::uint64_t seed, bool small, double p_miss) {
  SimConfig cfg;
  cfg.m = small ? 80 : 1000;
  cfg.n = small ? 20 : 50;
  cfg.d = 5;
  cfg.mu = Vec::Zero(5);
  cfg.sigma = Mat::Identity(5, 5);
  cfg.intercept_law = SimConfig::Law::gaussian;
  cfg.intercept_a = 0.0;
  cfg.intercept_b = 1.0;
  cfg.slope_law = SimConfig::Law::gaussian;
  cfg.slope_a = 0.0;
  cfg.slope_b = 1.0;
  cfg.pattern = LoadingPattern::dense;
  cfg.p_miss = p_miss;
  cfg.seed = seed;
  return cfg;
}

SimConfig preset_correlated3d(std::uint64_t seed) {
  SimConfig cfg;
  cfg.m = 2000;
  cfg.n = 30;
  cfg.d = 3;
  cfg.mu = Vec(3);
  cfg.mu << -0.4, -0.7, 0.1;
  cfg.sigma = Mat(3, 3);
  cfg.sigma << 1.21, 0.297, 1.232, 0.297, 0.81, 0.252, 1.232, 0.252, 1.96;
  cfg.intercept_law = SimConfig::Law::uniform;
  cfg.intercept_a = -2.5;
  cfg.intercept_b = 2.5;
  cfg.slope_law = SimConfig::Law::lognormal;
  cfg.slope_a = 0.0;
  cfg.slope_b = 0.5;
  cfg.pattern = LoadingPattern::random_cross;
  cfg.seed = seed;
  return cfg;
}

SimConfig preset_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "multiunidim") return preset_multiunidim(seed);
  if (name == "sparse5d") return preset_sparse5d(seed);
  if (name == "sparse5d-small") return preset_sparse5d(seed, true);
  if (name == "correlated3d") return preset_correlated3d(seed);
  throw Error(ErrorCategory::usage, "unknown preset: " + name);
}

}  // namespace pjml
