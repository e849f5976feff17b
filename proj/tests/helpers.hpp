#pragma once

#include <cmath>
#include <vector>

#include "pjml/model.hpp"
#include "pjml/rng.hpp"
#include "pjml/types.hpp"

// Shared fixtures for the test suites: random instances, finite differences,
// and small numeric utilities. Everything here is independent of the library
// internals it is used to check.

namespace pjml::testing {

struct Instance {
  ResponseMatrix U;
  ParameterSet params;
};

// A seeded random instance: parameters i.i.d. Normal(0, scale^2), responses
// Bernoulli(sigmoid(z)), cells kept independently with probability density.
inline Instance random_instance(int m, int n, const ModelSpec& spec, std::uint64_t seed,
                                double density = 1.0, double scale = 1.0) {
  Rng rng(seed);
  ParameterSet params;
  params.theta.resize(m, spec.person_cols());
  params.x.resize(n, spec.item_cols());
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < spec.person_cols(); ++c) params.theta(i, c) = rng.normal(0, scale);
  }
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < spec.item_cols(); ++c) params.x(j, c) = rng.normal(0, scale);
  }
  std::vector<Cell> cells;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (density < 1.0 && !rng.bernoulli(density)) continue;
      double p = prob(logit(spec, params.theta.row(i), params.x.row(j)));
      cells.push_back({i, j, static_cast<std::uint8_t>(rng.bernoulli(p) ? 1 : 0)});
    }
  }
  return {ResponseMatrix::from_cells(m, n, std::move(cells)), std::move(params)};
}

// Central finite difference of the penalized objective along one coordinate.
inline double fd_gradient(const ResponseMatrix& U, const ModelSpec& spec, ParameterSet params,
                          double lambda, bool penalize_intercepts, bool person_side, int row,
                          int col, double h = 1e-5) {
  double& slot = person_side ? params.theta(row, col) : params.x(row, col);
  const double center = slot;
  slot = center + h;
  double up = penalized_objective(U, spec, params, lambda, penalize_intercepts);
  slot = center - h;
  double down = penalized_objective(U, spec, params, lambda, penalize_intercepts);
  slot = center;
  return (up - down) / (2 * h);
}

// Maximizes a unimodal function on [lo, hi] by golden-section search.
template <typename F>
double golden_section_max(F f, double lo, double hi, double tol = 1e-10) {
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace pjml::testing
