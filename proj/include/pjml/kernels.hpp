#pragma once

#include <cstdint>
#include <vector>

#include "pjml/types.hpp"

// Computational kernels behind the likelihood and its gradient.
//
// Each kernel exists in two forms. The serial form is a direct scatter or sum
// over observed cells and serves as the reference implementation. The parallel
// form groups cells by person (and by item) so that every accumulator receives
// its contributions in the same order as the serial scatter; the result is
// bitwise identical to the reference for any thread count. The benchmark
// target compares the two forms on identical inputs.

namespace pjml::kernels {

// Index of a subset of cells, grouped by a key (person or item). `order`
// lists cell positions so that equal keys are contiguous and the original
// relative order within a key is preserved; `offsets[k] .. offsets[k+1]`
// delimits key k. Buffers are reusable across calls to avoid reallocation.
struct GroupIndex {
  std::vector<std::int32_t> order;
  std::vector<std::int32_t> offsets;
};

// Stable counting sort of `subset` (positions into `cells`) by person or item.
void group_by_person(const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                     int persons, GroupIndex& out);
void group_by_item(const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                   int items, GroupIndex& out);

// Logit of cell (i, j) under the spec. Intercept columns sit at position 0.
double cell_logit(const ModelSpec& spec, const Mat& theta, const Mat& x, int i, int j);

// Residual u - sigmoid(z) for every cell position in `subset`. `out` is
// resized to cells.size() and indexed by cell position, so grouped and
// scattered consumers address residuals the same way; positions outside the
// subset are left unspecified.
void residuals_serial(const ModelSpec& spec, const Mat& theta, const Mat& x,
                      const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                      std::vector<double>& out);
void residuals_parallel(const ModelSpec& spec, const Mat& theta, const Mat& x,
                        const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                        std::vector<double>& out);

// Adds the data term of the objective gradient for the given cells onto
// g_theta and g_x: for each cell, residual * companion row (with implicit 1
// for intercept coordinates). Accumulators must be pre-sized and pre-zeroed
// by the caller.
void scatter_gradient_serial(const ModelSpec& spec, const Mat& x, const Mat& theta,
                             const std::vector<Cell>& cells,
                             const std::vector<std::int32_t>& subset,
                             const std::vector<double>& residuals, Mat& g_theta, Mat& g_x);

// Same contribution, accumulated per person row and per item row in subset
// order. Requires group indices built from the same subset; the result is
// bitwise identical to the serial scatter for any thread count.
void grouped_gradient_parallel(const ModelSpec& spec, const Mat& x, const Mat& theta,
                               const std::vector<Cell>& cells, const GroupIndex& by_person,
                               const GroupIndex& by_item, const std::vector<double>& residuals,
                               const std::vector<std::int32_t>& subset, Mat& g_theta, Mat& g_x);

// Log-likelihood over all cells. Both forms subtotal per person block and
// combine the subtotals in person order (cells are stored person-major), so
// the parallel reduction is bitwise identical to the serial sum for any
// thread count.
double log_likelihood_serial(const ModelSpec& spec, const Mat& theta, const Mat& x,
                             const std::vector<Cell>& cells);
double log_likelihood_parallel(const ModelSpec& spec, const Mat& theta, const Mat& x,
                               const std::vector<Cell>& cells, int persons);

}  // namespace pjml::kernels
