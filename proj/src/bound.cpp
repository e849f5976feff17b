#include "pjml/bound.hpp"

#include <cmath>
#include <utility>

#include "pjml/kernels.hpp"
#include "pjml/model.hpp"

namespace pjml {

namespace {

// 15-point Kronrod rule with the embedded 7-point Gauss rule, on [-1, 1].
// The difference between the two estimates serves as the error indicator.
constexpr int kKronrodPoints = 15;
constexpr double kNodes[kKronrodPoints] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kKronrodWeights[kKronrodPoints] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
// Gauss weights align with every second Kronrod node (odd indices).
constexpr double kGaussWeights[7] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                                     0.417959183673469, 0.381830050505119, 0.279705391489277,
                                     0.129484966168870};

struct Estimate {
  double value;
  double error;
};

Estimate gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double kronrod = 0.0, gauss = 0.0;
  for (int i = 0; i < kKronrodPoints; ++i) {
    double v = f(center + half * kNodes[i]);
    kronrod += kKronrodWeights[i] * v;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * v;
  }
  kronrod *= half;
  gauss *= half;
  return {kronrod, std::abs(kronrod - gauss)};
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double normal_pdf(double z, double mean, double sd) {
  double t = (z - mean) / sd;
  return std::exp(-0.5 * t * t) / (sd * std::sqrt(2.0 * M_PI));
}

// Accuracy ceiling when the logit difference is Normal(mean, variance):
// the expectation of max(sigmoid(D), 1 - sigmoid(D)).
double normal_difference_accuracy(double mean, double variance) {
  if (variance <= 0.0) {
    double p = sigmoid(mean);
    return std::max(p, 1.0 - p);
  }
  const double sd = std::sqrt(variance);
  auto integrand = [&](double z) {
    double p = sigmoid(z);
    return normal_pdf(z, mean, sd) * std::max(p, 1.0 - p);
  };
  // The integrand has a kink at zero, so integrate each side separately.
  const double lo = std::min(mean - 10.0 * sd, 0.0);
  const double hi = std::max(mean + 10.0 * sd, 0.0);
  return integrate(integrand, lo, 0.0, 5e-7) + integrate(integrand, 0.0, hi, 5e-7);
}

}  // namespace

ScalarDistribution ScalarDistribution::normal(double mean, double variance) {
  ScalarDistribution d;
  d.kind = Kind::normal;
  d.mean = mean;
  d.variance = variance;
  d.validate();
  return d;
}

ScalarDistribution ScalarDistribution::point_mass(double value) {
  ScalarDistribution d;
  d.kind = Kind::point_mass;
  d.value = value;
  return d;
}

ScalarDistribution ScalarDistribution::empirical(std::vector<double> sample) {
  ScalarDistribution d;
  d.kind = Kind::empirical;
  d.sample = std::move(sample);
  d.validate();
  return d;
}

void ScalarDistribution::validate() const {
  if (kind == Kind::normal && !(variance > 0.0)) {
    throw DimensionError("normal distribution requires positive variance");
  }
  if (kind == Kind::empirical && sample.empty()) {
    throw DimensionError("empirical distribution requires a nonempty sample");
  }
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  struct Interval {
    double a, b, tol;
  };
  std::vector<Interval> stack{{a, b, abs_tol}};
  double total = 0.0;
  int evaluations = 0;
  constexpr int kMaxIntervals = 4000;
  while (!stack.empty()) {
    Interval iv = stack.back();
    stack.pop_back();
    Estimate e = gauss_kronrod(f, iv.a, iv.b);
    ++evaluations;
    double width = std::abs(iv.b - iv.a);
    if (e.error <= iv.tol || width < 1e-14 || evaluations >= kMaxIntervals) {
      total += e.value;
      continue;
    }
    double mid = 0.5 * (iv.a + iv.b);
    stack.push_back({iv.a, mid, 0.5 * iv.tol});
    stack.push_back({mid, iv.b, 0.5 * iv.tol});
  }
  return total;
}

double expected_accuracy_from_density(const std::function<double(double)>& f_P) {
  double mass = integrate(f_P, 0.0, 1.0, 1e-8);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw InvalidDensityError("density integrates to " + std::to_string(mass) +
                              ", expected 1 within 1e-6");
  }
  auto below = [&](double p) { return (1.0 - p) * f_P(p); };
  auto above = [&](double p) { return p * f_P(p); };
  return integrate(below, 0.0, 0.5, 5e-7) + integrate(above, 0.5, 1.0, 5e-7);
}

std::function<double(double)> rasch_probability_density(const ScalarDistribution& theta,
                                                        const ScalarDistribution& delta) {
  theta.validate();
  delta.validate();
  if (theta.kind == ScalarDistribution::Kind::empirical ||
      delta.kind == ScalarDistribution::Kind::empirical) {
    throw DimensionError("probability density requires normal or point-mass inputs");
  }
  auto moments = [](const ScalarDistribution& d) {
    return d.kind == ScalarDistribution::Kind::normal ? std::pair{d.mean, d.variance}
                                                      : std::pair{d.value, 0.0};
  };
  auto [tm, tv] = moments(theta);
  auto [dm, dv] = moments(delta);
  const double mean = tm - dm;
  const double variance = tv + dv;
  if (!(variance > 0.0)) {
    throw DimensionError("probability density requires a nondegenerate difference");
  }
  const double sd = std::sqrt(variance);
  // Change of variables from the logit difference D to P = sigmoid(D):
  // f_P(p) = f_D(log(p / (1-p))) / (p (1-p)).
  return [mean, sd](double p) {
    double z = std::log(p / (1.0 - p));
    return normal_pdf(z, mean, sd) / (p * (1.0 - p));
  };
}

double rasch_expected_accuracy(const ScalarDistribution& theta, const ScalarDistribution& delta) {
  theta.validate();
  delta.validate();
  using Kind = ScalarDistribution::Kind;

  if (theta.kind == Kind::empirical && delta.kind == Kind::empirical) {
    double total = 0.0;
    for (double t : theta.sample) {
      for (double d : delta.sample) {
        double p = sigmoid(t - d);
        total += std::max(p, 1.0 - p);
      }
    }
    return total / (static_cast<double>(theta.sample.size()) *
                    static_cast<double>(delta.sample.size()));
  }

  auto moments = [](const ScalarDistribution& d) {
    return d.kind == Kind::normal ? std::pair{d.mean, d.variance} : std::pair{d.value, 0.0};
  };

  if (theta.kind == Kind::empirical || delta.kind == Kind::empirical) {
    const bool theta_is_sample = theta.kind == Kind::empirical;
    const auto& sample = theta_is_sample ? theta.sample : delta.sample;
    auto [om, ov] = moments(theta_is_sample ? delta : theta);
    double total = 0.0;
    for (double v : sample) {
      double mean = theta_is_sample ? v - om : om - v;
      total += normal_difference_accuracy(mean, ov);
    }
    return total / static_cast<double>(sample.size());
  }

  auto [tm, tv] = moments(theta);
  auto [dm, dv] = moments(delta);
  return normal_difference_accuracy(tm - dm, tv + dv);
}

double empirical_expected_accuracy(const ModelSpec& spec, const ParameterSet& params) {
  params.validate(spec, params.theta.rows(), params.x.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < params.theta.rows(); ++i) {
    for (Eigen::Index j = 0; j < params.x.rows(); ++j) {
      double p = prob(kernels::cell_logit(spec, params.theta, params.x, static_cast<int>(i),
                                          static_cast<int>(j)));
      total += std::max(p, 1.0 - p);
    }
  }
  return total / (static_cast<double>(params.theta.rows()) *
                  static_cast<double>(params.x.rows()));
}

}  // namespace pjml
