// Timing comparison between the serial reference kernels and the OpenMP
// versions, with an equality check on every result. Run with different
// OMP_NUM_THREADS settings to see scaling.

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>
#include <vector>

#include "pjml/kernels.hpp"
#include "pjml/simulate.hpp"

namespace {

double time_best_of(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    double start = omp_get_wtime();
    body();
    best = std::min(best, omp_get_wtime() - start);
  }
  return best;
}

}  // namespace

int main() {
  using namespace pjml;
  using namespace pjml::kernels;

  SimConfig cfg = preset_multiunidim(2024);
  cfg.m = 4000;
  cfg.n = 200;
  GroundTruth truth = simulate(cfg);
  const ResponseMatrix& U = truth.responses;
  const ModelSpec spec = truth.spec;
  const Mat& theta = truth.params.theta;
  const Mat& x = truth.params.x;

  std::vector<std::int32_t> subset(U.cells().size());
  std::iota(subset.begin(), subset.end(), 0);
  GroupIndex by_person, by_item;
  group_by_person(U.cells(), subset, U.persons(), by_person);
  group_by_item(U.cells(), subset, U.items(), by_item);

  std::printf("%d persons x %d items, %zu cells, %d OpenMP threads\n", U.persons(), U.items(),
              U.cells().size(), omp_get_max_threads());

  const int repeats = 7;
  std::vector<double> rs, rp;
  double t_rs =
      time_best_of(repeats, [&] { residuals_serial(spec, theta, x, U.cells(), subset, rs); });
  double t_rp =
      time_best_of(repeats, [&] { residuals_parallel(spec, theta, x, U.cells(), subset, rp); });
  bool residuals_equal = rs == rp;

  Mat gt_s(theta.rows(), theta.cols()), gx_s(x.rows(), x.cols());
  Mat gt_p(theta.rows(), theta.cols()), gx_p(x.rows(), x.cols());
  double t_gs = time_best_of(repeats, [&] {
    gt_s.setZero();
    gx_s.setZero();
    scatter_gradient_serial(spec, x, theta, U.cells(), subset, rs, gt_s, gx_s);
  });
  double t_gp = time_best_of(repeats, [&] {
    gt_p.setZero();
    gx_p.setZero();
    grouped_gradient_parallel(spec, x, theta, U.cells(), by_person, by_item, rp, subset, gt_p,
                              gx_p);
  });
  bool gradient_equal =
      (gt_s.array() == gt_p.array()).all() && (gx_s.array() == gx_p.array()).all();

  double ll_s = 0, ll_p = 0;
  double t_ls =
      time_best_of(repeats, [&] { ll_s = log_likelihood_serial(spec, theta, x, U.cells()); });
  double t_lp = time_best_of(repeats, [&] {
    ll_p = log_likelihood_parallel(spec, theta, x, U.cells(), U.persons());
  });
  bool loglik_equal = ll_s == ll_p;

  std::printf("%-14s %13s %13s %9s %6s\n", "kernel", "serial (ms)", "parallel (ms)", "speedup",
              "equal");
  std::printf("%-14s %13.2f %13.2f %8.2fx %6s\n", "residuals", t_rs * 1e3, t_rp * 1e3, t_rs / t_rp,
              residuals_equal ? "yes" : "NO");
  std::printf("%-14s %13.2f %13.2f %8.2fx %6s\n", "gradient", t_gs * 1e3, t_gp * 1e3, t_gs / t_gp,
              gradient_equal ? "yes" : "NO");
  std::printf("%-14s %13.2f %13.2f %8.2fx %6s\n", "log-likelihood", t_ls * 1e3, t_lp * 1e3,
              t_ls / t_lp, loglik_equal ? "yes" : "NO");

  return residuals_equal && gradient_equal && loglik_equal ? 0 : 1;
}
