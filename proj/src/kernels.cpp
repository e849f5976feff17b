#include "pjml/kernels.hpp"

#include <cmath>

#include "pjml/model.hpp"

namespace pjml::kernels {

namespace {

// Sigmoid without the probability clamp. Gradients use the raw value; the
// clamp only matters inside log terms.
inline double sigmoid(double z) {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

void group_by_key(const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                  int keys, bool by_person, GroupIndex& out) {
  out.offsets.assign(static_cast<std::size_t>(keys) + 1, 0);
  out.order.resize(subset.size());
  for (std::int32_t pos : subset) {
    const Cell& c = cells[static_cast<std::size_t>(pos)];
    int key = by_person ? c.person : c.item;
    ++out.offsets[static_cast<std::size_t>(key) + 1];
  }
  for (int k = 0; k < keys; ++k) {
    out.offsets[static_cast<std::size_t>(k) + 1] += out.offsets[static_cast<std::size_t>(k)];
  }
  std::vector<std::int32_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  for (std::int32_t pos : subset) {
    const Cell& c = cells[static_cast<std::size_t>(pos)];
    int key = by_person ? c.person : c.item;
    out.order[static_cast<std::size_t>(cursor[static_cast<std::size_t>(key)]++)] = pos;
  }
}

}  // namespace

void group_by_person(const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                     int persons, GroupIndex& out) {
  group_by_key(cells, subset, persons, true, out);
}

void group_by_item(const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                   int items, GroupIndex& out) {
  group_by_key(cells, subset, items, false, out);
}

double cell_logit(const ModelSpec& spec, const Mat& theta, const Mat& x, int i, int j) {
  const double* trow = theta.row(i).data();
  const double* xrow = x.row(j).data();
  double z = 0.0;
  int toff = 0, xoff = 0;
  if (spec.person_intercept) z += trow[toff++];
  if (spec.item_intercept) z += xrow[xoff++];
  for (int k = 0; k < spec.r; ++k) {
    z += trow[toff + k] * xrow[xoff + k];
  }
  return z;
}

void residuals_serial(const ModelSpec& spec, const Mat& theta, const Mat& x,
                      const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                      std::vector<double>& out) {
  out.resize(cells.size());
  for (std::int32_t pos : subset) {
    const Cell& c = cells[static_cast<std::size_t>(pos)];
    double z = cell_logit(spec, theta, x, c.person, c.item);
    out[static_cast<std::size_t>(pos)] = static_cast<double>(c.value) - sigmoid(z);
  }
}

void residuals_parallel(const ModelSpec& spec, const Mat& theta, const Mat& x,
                        const std::vector<Cell>& cells, const std::vector<std::int32_t>& subset,
                        std::vector<double>& out) {
  out.resize(cells.size());
  const std::int64_t count = static_cast<std::int64_t>(subset.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < count; ++k) {
    const std::int32_t pos = subset[static_cast<std::size_t>(k)];
    const Cell& c = cells[static_cast<std::size_t>(pos)];
    double z = cell_logit(spec, theta, x, c.person, c.item);
    out[static_cast<std::size_t>(pos)] = static_cast<double>(c.value) - sigmoid(z);
  }
}

void scatter_gradient_serial(const ModelSpec& spec, const Mat& x, const Mat& theta,
                             const std::vector<Cell>& cells,
                             const std::vector<std::int32_t>& subset,
                             const std::vector<double>& residuals, Mat& g_theta, Mat& g_x) {
  const int toff = spec.person_intercept ? 1 : 0;
  const int xoff = spec.item_intercept ? 1 : 0;
  for (std::int32_t pos : subset) {
    const Cell& c = cells[static_cast<std::size_t>(pos)];
    const double res = residuals[static_cast<std::size_t>(pos)];
    double* gt = g_theta.row(c.person).data();
    double* gx = g_x.row(c.item).data();
    const double* trow = theta.row(c.person).data();
    const double* xrow = x.row(c.item).data();
    if (spec.person_intercept) gt[0] += res;
    if (spec.item_intercept) gx[0] += res;
    for (int d = 0; d < spec.r; ++d) {
      gt[toff + d] += res * xrow[xoff + d];
      gx[xoff + d] += res * trow[toff + d];
    }
  }
}

void grouped_gradient_parallel(const ModelSpec& spec, const Mat& x, const Mat& theta,
                               const std::vector<Cell>& cells, const GroupIndex& by_person,
                               const GroupIndex& by_item, const std::vector<double>& residuals,
                               const std::vector<std::int32_t>& subset, Mat& g_theta, Mat& g_x) {
  (void)subset;
  const int toff = spec.person_intercept ? 1 : 0;
  const int xoff = spec.item_intercept ? 1 : 0;

  // Each accumulator row is owned by exactly one loop iteration, and the
  // stable grouping preserves subset order within a row, so every row
  // receives its additions in the same order as the serial scatter.
  const std::int64_t persons = static_cast<std::int64_t>(by_person.offsets.size()) - 1;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < persons; ++i) {
    const std::int32_t begin = by_person.offsets[static_cast<std::size_t>(i)];
    const std::int32_t end = by_person.offsets[static_cast<std::size_t>(i) + 1];
    if (begin == end) continue;
    double* gt = g_theta.row(i).data();
    for (std::int32_t s = begin; s < end; ++s) {
      const std::int32_t pos = by_person.order[static_cast<std::size_t>(s)];
      const Cell& c = cells[static_cast<std::size_t>(pos)];
      const double res = residuals[static_cast<std::size_t>(pos)];
      const double* xrow = x.row(c.item).data();
      if (spec.person_intercept) gt[0] += res;
      for (int d = 0; d < spec.r; ++d) {
        gt[toff + d] += res * xrow[xoff + d];
      }
    }
  }

  const std::int64_t items = static_cast<std::int64_t>(by_item.offsets.size()) - 1;
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < items; ++j) {
    const std::int32_t begin = by_item.offsets[static_cast<std::size_t>(j)];
    const std::int32_t end = by_item.offsets[static_cast<std::size_t>(j) + 1];
    if (begin == end) continue;
    double* gx = g_x.row(j).data();
    for (std::int32_t s = begin; s < end; ++s) {
      const std::int32_t pos = by_item.order[static_cast<std::size_t>(s)];
      const Cell& c = cells[static_cast<std::size_t>(pos)];
      const double res = residuals[static_cast<std::size_t>(pos)];
      const double* trow = theta.row(c.person).data();
      if (spec.item_intercept) gx[0] += res;
      for (int d = 0; d < spec.r; ++d) {
        gx[xoff + d] += res * trow[toff + d];
      }
    }
  }
}

double log_likelihood_serial(const ModelSpec& spec, const Mat& theta, const Mat& x,
                             const std::vector<Cell>& cells) {
  // Subtotals per person block and folds the subtotals in person order, the
  // same combine tree the parallel reduction uses.
  double total = 0.0;
  double person_sum = 0.0;
  int current = -1;
  for (const Cell& c : cells) {
    if (c.person != current) {
      total += person_sum;
      person_sum = 0.0;
      current = c.person;
    }
    double p = prob(cell_logit(spec, theta, x, c.person, c.item));
    person_sum += c.value ? std::log(p) : std::log1p(-p);
  }
  return total + person_sum;
}

double log_likelihood_parallel(const ModelSpec& spec, const Mat& theta, const Mat& x,
                               const std::vector<Cell>& cells, int persons) {
  // Per-person partial sums, combined in person order afterwards. Cells are
  // stored person-major, so this reproduces the serial left-to-right sum
  // bitwise, independent of the thread count.
  std::vector<double> partial(static_cast<std::size_t>(persons), 0.0);
  std::vector<std::int64_t> start(static_cast<std::size_t>(persons) + 1, 0);
  const std::int64_t count = static_cast<std::int64_t>(cells.size());
  {
    std::int64_t pos = 0;
    for (int i = 0; i < persons; ++i) {
      start[static_cast<std::size_t>(i)] = pos;
      while (pos < count && cells[static_cast<std::size_t>(pos)].person == i) ++pos;
    }
    start[static_cast<std::size_t>(persons)] = count;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < persons; ++i) {
    double sum = 0.0;
    for (std::int64_t k = start[static_cast<std::size_t>(i)];
         k < start[static_cast<std::size_t>(i) + 1]; ++k) {
      const Cell& c = cells[static_cast<std::size_t>(k)];
      double p = prob(cell_logit(spec, theta, x, c.person, c.item));
      sum += c.value ? std::log(p) : std::log1p(-p);
    }
    partial[static_cast<std::size_t>(i)] = sum;
  }
  double total = 0.0;
  for (int i = 0; i < persons; ++i) total += partial[static_cast<std::size_t>(i)];
  return total;
}

}  // namespace pjml::kernels
