#include "pjml/types.hpp"

#include <algorithm>
#include <cmath>

namespace pjml {

void ModelSpec::validate() const {
  if (r < 0) {
    throw DimensionError("latent dimension must be nonnegative, got " + std::to_string(r));
  }
  if (r == 0 && !person_intercept && !item_intercept) {
    throw DimensionError("empty model: no latent dimension and no intercepts");
  }
}

void ParameterSet::validate(const ModelSpec& spec, Eigen::Index persons,
                            Eigen::Index items) const {
  spec.validate();
  if (theta.rows() != persons || theta.cols() != spec.person_cols()) {
    throw DimensionError("person parameter matrix is " + std::to_string(theta.rows()) + "x" +
                         std::to_string(theta.cols()) + ", expected " + std::to_string(persons) +
                         "x" + std::to_string(spec.person_cols()));
  }
  if (x.rows() != items || x.cols() != spec.item_cols()) {
    throw DimensionError("item parameter matrix is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", expected " + std::to_string(items) + "x" +
                         std::to_string(spec.item_cols()));
  }
  if (!theta.allFinite() || !x.allFinite()) {
    throw DimensionError("parameter set contains non-finite entries");
  }
}

ResponseMatrix ResponseMatrix::from_cells(int persons, int items, std::vector<Cell> cells) {
  if (persons < 0 || items < 0) {
    throw DimensionError("negative matrix dimensions");
  }
  for (const Cell& c : cells) {
    if (c.person < 0 || c.person >= persons || c.item < 0 || c.item >= items) {
      throw DimensionError("cell (" + std::to_string(c.person) + ", " + std::to_string(c.item) +
                           ") outside a " + std::to_string(persons) + "x" + std::to_string(items) +
                           " matrix");
    }
    if (c.value > 1) {
      throw DimensionError("response at (" + std::to_string(c.person) + ", " +
                           std::to_string(c.item) + ") is not 0 or 1");
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.person != b.person ? a.person < b.person : a.item < b.item;
  });
  for (std::size_t k = 1; k < cells.size(); ++k) {
    if (cells[k].person == cells[k - 1].person && cells[k].item == cells[k - 1].item) {
      throw DimensionError("duplicate cell (" + std::to_string(cells[k].person) + ", " +
                           std::to_string(cells[k].item) + ")");
    }
  }
  ResponseMatrix out;
  out.persons_ = persons;
  out.items_ = items;
  out.cells_ = std::move(cells);
  return out;
}

void ResponseMatrix::set_labels(std::vector<std::string> person_labels,
                                std::vector<std::string> item_labels) {
  if (!person_labels.empty() && person_labels.size() != static_cast<std::size_t>(persons_)) {
    throw DimensionError("person label count does not match person count");
  }
  if (!item_labels.empty() && item_labels.size() != static_cast<std::size_t>(items_)) {
    throw DimensionError("item label count does not match item count");
  }
  person_labels_ = std::move(person_labels);
  item_labels_ = std::move(item_labels);
}

std::string ResponseMatrix::person_label(int i) const {
  if (!person_labels_.empty()) return person_labels_[static_cast<std::size_t>(i)];
  return std::to_string(i);
}

std::string ResponseMatrix::item_label(int j) const {
  if (!item_labels_.empty()) return item_labels_[static_cast<std::size_t>(j)];
  return std::to_string(j);
}

}  // namespace pjml
