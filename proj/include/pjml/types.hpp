#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types shared by every component of the library.
//
// The data model is a sparse binary response matrix: persons in rows, items in
// columns, and an explicit set of observed cells. Cells that are not listed are
// missing and never contribute to likelihoods or metrics.

namespace pjml {

// Dense matrices are row-major throughout: person and item parameter rows are
// the unit of access in all hot loops.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Error categories map onto CLI exit codes. Library callers can catch the
// concrete subclasses below when they need to distinguish failure modes.
enum class ErrorCategory : int {
  usage = 2,
  io = 3,
  data = 4,
  config = 5,
  numeric = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error(ErrorCategory::config, m) {}
};
struct ParseError : Error {
  ParseError(const std::string& m, long line_number)
      : Error(ErrorCategory::data, m + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  long line;
};
struct EmptyDataError : Error {
  explicit EmptyDataError(const std::string& m) : Error(ErrorCategory::data, m) {}
};
struct DegenerateValidationError : Error {
  explicit DegenerateValidationError(const std::string& m) : Error(ErrorCategory::data, m) {}
};
struct UndefinedAucError : Error {
  explicit UndefinedAucError(const std::string& m) : Error(ErrorCategory::numeric, m) {}
};
struct UndefinedDifficultyError : Error {
  explicit UndefinedDifficultyError(const std::string& m) : Error(ErrorCategory::numeric, m) {}
};
struct SplitDegenerateError : Error {
  explicit SplitDegenerateError(const std::string& m) : Error(ErrorCategory::config, m) {}
};
struct MaskInfeasibleError : Error {
  explicit MaskInfeasibleError(const std::string& m) : Error(ErrorCategory::config, m) {}
};
struct RankDeficiencyError : Error {
  RankDeficiencyError(const std::string& m, int deficient)
      : Error(ErrorCategory::numeric, m), deficient_dimensions(deficient) {}
  int deficient_dimensions;
};
struct InvalidDensityError : Error {
  explicit InvalidDensityError(const std::string& m) : Error(ErrorCategory::numeric, m) {}
};
struct CovarianceError : Error {
  explicit CovarianceError(const std::string& m) : Error(ErrorCategory::config, m) {}
};

// Model family selector: a latent dimension count plus optional person and
// item intercepts. The classical special cases are provided as factories.
//
//   r = 0, item intercepts only    -> item-level base rates (person independence)
//   r = 0, person intercepts only  -> person-level base rates (item independence)
//   r = 0, both                    -> Rasch
//   r >= 1, item intercepts        -> 2PL (r = 1) / M2PL (r > 1)
struct ModelSpec {
  int r = 0;
  bool person_intercept = false;
  bool item_intercept = false;

  // Number of stored columns per person row and per item row. Intercepts,
  // when present, occupy column 0; slope columns follow.
  int person_cols() const { return r + (person_intercept ? 1 : 0); }
  int item_cols() const { return r + (item_intercept ? 1 : 0); }

  // Throws DimensionError for the empty model (no dimension, no intercepts).
  void validate() const;

  bool operator==(const ModelSpec&) const = default;

  static ModelSpec rasch() { return {0, true, true}; }
  static ModelSpec person_independence() { return {0, false, true}; }
  static ModelSpec item_independence() { return {0, true, false}; }
  static ModelSpec m2pl(int r) { return {r, false, true}; }
};

// Free parameters of a model: one row per person and one row per item. The
// intercept column (when the spec has one) is stored first, slopes after it.
struct ParameterSet {
  Mat theta;  // persons x spec.person_cols()
  Mat x;      // items x spec.item_cols()

  // Verifies shapes against the spec and that every entry is finite.
  void validate(const ModelSpec& spec, Eigen::Index persons, Eigen::Index items) const;
};

// One observed response. `value` is 0 or 1.
struct Cell {
  std::int32_t person;
  std::int32_t item;
  std::uint8_t value;
};

// Sparse binary response matrix. Construction canonicalizes cell order to
// (person, item) ascending and rejects duplicate coordinates, so two matrices
// holding the same observations compare and iterate identically regardless of
// input order.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  // Validates index ranges and cell values, sorts, and rejects duplicates.
  static ResponseMatrix from_cells(int persons, int items, std::vector<Cell> cells);

  int persons() const { return persons_; }
  int items() const { return items_; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t observed() const { return cells_.size(); }

  // Optional external identifiers, aligned with row and column indices.
  // Empty vectors mean purely numeric identities.
  const std::vector<std::string>& person_labels() const { return person_labels_; }
  const std::vector<std::string>& item_labels() const { return item_labels_; }
  void set_labels(std::vector<std::string> person_labels, std::vector<std::string> item_labels);

  std::string person_label(int i) const;
  std::string item_label(int j) const;

 private:
  int persons_ = 0;
  int items_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::string> person_labels_;
  std::vector<std::string> item_labels_;
};

}  // namespace pjml
