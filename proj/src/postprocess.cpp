#include "pjml/postprocess.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace pjml {

Orthogonalized orthogonalize(const Mat& theta) {
  const Eigen::Index m = theta.rows();
  const Eigen::Index r = theta.cols();
  if (r < 1) throw DimensionError("orthogonalization needs at least one column");
  if (m < 2) throw DimensionError("orthogonalization needs at least two rows");

  Mat centered = theta;
  Eigen::RowVectorXd means = theta.colwise().mean();
  centered.rowwise() -= means;

  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(m - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCategory::numeric, "eigendecomposition failed");
  }

  // Eigenvalues come back ascending; work in descending variance order.
  Vec values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

  const double tolerance = std::max(values[0], 0.0) * 1e-12 + 1e-300;
  int deficient = 0;
  for (Eigen::Index k = 0; k < r; ++k) {
    if (values[k] <= tolerance) ++deficient;
  }
  if (deficient > 0) {
    throw RankDeficiencyError("ability covariance is rank deficient in " +
                                  std::to_string(deficient) + " dimension(s)",
                              deficient);
  }

  Orthogonalized out;
  out.transform = vectors * values.cwiseSqrt().cwiseInverse().asDiagonal();
  out.scores = centered * out.transform;

  // Fix signs so the largest-magnitude entry of each column is positive.
  for (Eigen::Index c = 0; c < r; ++c) {
    Eigen::Index at = 0;
    out.scores.col(c).cwiseAbs().maxCoeff(&at);
    if (out.scores(at, c) < 0) {
      out.scores.col(c) = -out.scores.col(c);
      out.transform.col(c) = -out.transform.col(c);
    }
  }
  return out;
}

namespace {

double pearson(const Mat& a, Eigen::Index ca, const Mat& b, Eigen::Index cb) {
  const Eigen::Index m = a.rows();
  double ma = a.col(ca).mean();
  double mb = b.col(cb).mean();
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double da = a(i, ca) - ma;
    double db = b(i, cb) - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace

RecoveryReport recovery_report(const Mat& theta_est, const Mat& theta_true) {
  if (theta_est.rows() != theta_true.rows()) {
    throw DimensionError("estimate and truth must have the same number of rows");
  }
  if (theta_est.rows() < 2) throw DimensionError("recovery needs at least two rows");

  RecoveryReport report;

  // Columns without variance cannot be correlated; exclude and report them.
  std::vector<Eigen::Index> usable;
  for (Eigen::Index c = 0; c < theta_est.cols(); ++c) {
    double sd = std::sqrt((theta_est.col(c).array() - theta_est.col(c).mean()).square().sum());
    if (sd < 1e-12) {
      report.excluded_estimate_cols.push_back(static_cast<int>(c));
    } else {
      usable.push_back(c);
    }
  }

  const Eigen::Index ne = static_cast<Eigen::Index>(usable.size());
  const Eigen::Index nt = theta_true.cols();
  report.correlations.resize(ne, nt);
  for (Eigen::Index a = 0; a < ne; ++a) {
    for (Eigen::Index b = 0; b < nt; ++b) {
      report.correlations(a, b) = pearson(theta_est, usable[static_cast<std::size_t>(a)],
                                          theta_true, b);
    }
  }

  // Greedy one-to-one pairing on absolute correlation.
  const Eigen::Index pairs = std::min(ne, nt);
  std::vector<bool> row_used(static_cast<std::size_t>(ne), false);
  std::vector<bool> col_used(static_cast<std::size_t>(nt), false);
  report.matched_true.assign(static_cast<std::size_t>(ne), -1);
  report.matched_corr.assign(static_cast<std::size_t>(ne), 0.0);
  report.variance_share.assign(static_cast<std::size_t>(ne), 0.0);
  for (Eigen::Index step = 0; step < pairs; ++step) {
    double best = -1.0;
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index a = 0; a < ne; ++a) {
      if (row_used[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = 0; b < nt; ++b) {
        if (col_used[static_cast<std::size_t>(b)]) continue;
        double v = std::abs(report.correlations(a, b));
        if (v > best) {
          best = v;
          bi = a;
          bj = b;
        }
      }
    }
    if (bi < 0) break;  // only non-finite correlations remain
    row_used[static_cast<std::size_t>(bi)] = true;
    col_used[static_cast<std::size_t>(bj)] = true;
    report.matched_true[static_cast<std::size_t>(bi)] = static_cast<int>(bj);
    report.matched_corr[static_cast<std::size_t>(bi)] = report.correlations(bi, bj);
    report.variance_share[static_cast<std::size_t>(bi)] =
        report.correlations(bi, bj) * report.correlations(bi, bj);
  }
  return report;
}

FactorOverlapSelection factor_overlap_selection(const Mat& item_loadings,
                                                const std::vector<int>& anchor_items,
                                                double loading_threshold,
                                                int factor_count_threshold) {
  if (anchor_items.empty()) throw DimensionError("anchor item set must be nonempty");
  const Eigen::Index n = item_loadings.rows();
  const Eigen::Index r = item_loadings.cols();
  std::vector<bool> is_anchor(static_cast<std::size_t>(n), false);
  for (int a : anchor_items) {
    if (a < 0 || a >= n) throw DimensionError("anchor item index out of range");
    is_anchor[static_cast<std::size_t>(a)] = true;
  }

  FactorOverlapSelection out;
  for (Eigen::Index f = 0; f < r; ++f) {
    int count = 0;
    for (int a : anchor_items) {
      if (item_loadings(a, f) > loading_threshold) ++count;
    }
    if (count > factor_count_threshold) out.retained_factors.push_back(static_cast<int>(f));
  }
  if (out.retained_factors.empty()) {
    out.empty_warning = true;
    return out;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (is_anchor[static_cast<std::size_t>(j)]) continue;
    for (int f : out.retained_factors) {
      if (item_loadings(j, f) > loading_threshold) {
        out.selected_items.push_back(static_cast<int>(j));
        break;
      }
    }
  }
  return out;
}

}  // namespace pjml
