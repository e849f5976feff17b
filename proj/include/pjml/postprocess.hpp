#pragma once

#include <vector>

#include "pjml/types.hpp"

// Post-estimation analysis: whitening of ability estimates, recovery of
// simulated dimensions, and threshold-based item selection from loadings.

namespace pjml {

struct Orthogonalized {
  Mat scores;     // centered, whitened, variance-ordered columns
  Mat transform;  // applied after centering: scores = centered * transform
};

// Centers the columns, whitens them through the eigendecomposition of the
// covariance, orders components by decreasing explained variance, and fixes
// signs so each column's largest-magnitude entry is positive. Throws
// RankDeficiencyError when the covariance is singular.
Orthogonalized orthogonalize(const Mat& theta);

struct RecoveryReport {
  Mat correlations;                    // estimated columns x true columns
  std::vector<int> matched_true;       // matched_true[a] = true column paired with estimate a
  std::vector<double> matched_corr;    // signed correlation of each pair
  std::vector<double> variance_share;  // squared correlation of each pair
  std::vector<int> excluded_estimate_cols;  // zero-variance columns left out
};

// Cross-correlates estimated against true dimensions and pairs them greedily
// by absolute correlation. The caller is expected to orthogonalize estimates
// first; the report itself does not rotate anything. Zero-variance columns
// are excluded and reported.
RecoveryReport recovery_report(const Mat& theta_est, const Mat& theta_true);

struct FactorOverlapSelection {
  std::vector<int> retained_factors;
  std::vector<int> selected_items;  // non-anchor items, ascending
  bool empty_warning = false;       // set when no factor was retained
};

// Binarizes the anchor items' loadings at `loading_threshold`, counts
// exceedances per factor over the anchors, retains factors whose count is
// strictly above `factor_count_threshold`, and selects every non-anchor item
// loading above the threshold on at least one retained factor.
FactorOverlapSelection factor_overlap_selection(const Mat& item_loadings,
                                                const std::vector<int>& anchor_items,
                                                double loading_threshold = 1.3,
                                                int factor_count_threshold = 5);

}  // namespace pjml
