#pragma once

#include <functional>
#include <vector>

#include "pjml/types.hpp"

// Expected-accuracy ceilings.
//
// When the probability of a correct response is p, the best possible
// classifier for that cell is right with probability max(p, 1-p). Averaging
// over the distribution of p gives the highest accuracy any method can reach,
// independent of estimation. These routines compute that ceiling analytically
// for intercept-only models with known parameter distributions, and
// empirically for a known probability matrix.

namespace pjml {

struct ScalarDistribution {
  enum class Kind { normal, point_mass, empirical };

  Kind kind = Kind::point_mass;
  double mean = 0;       // normal
  double variance = 1;   // normal; must be positive
  double value = 0;      // point_mass
  std::vector<double> sample;  // empirical; must be nonempty

  static ScalarDistribution normal(double mean, double variance);
  static ScalarDistribution point_mass(double value);
  static ScalarDistribution empirical(std::vector<double> sample);

  void validate() const;
};

// Adaptive Gauss-Kronrod integration of f over [a, b] to the given absolute
// tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-6);

// Expected accuracy for a success-probability density f_P on (0, 1):
// integral of (1-p) f_P below one half plus integral of p f_P above it.
// Throws InvalidDensityError if f_P does not integrate to 1 within 1e-6.
double expected_accuracy_from_density(const std::function<double(double)>& f_P);

// The density of P = sigmoid(theta - delta) on (0, 1) when theta - delta has
// a (nondegenerate) normal distribution. Provided for cross-checking the
// reduced computation below through expected_accuracy_from_density.
std::function<double(double)> rasch_probability_density(const ScalarDistribution& theta,
                                                        const ScalarDistribution& delta);

// Expected accuracy when response probabilities follow P = sigmoid(theta -
// delta) with independent person ability theta and item difficulty delta.
// Normal and point-mass inputs reduce to a one-dimensional integral over the
// difference; empirical inputs are handled by exhaustive pairing.
double rasch_expected_accuracy(const ScalarDistribution& theta, const ScalarDistribution& delta);

// Mean of max(p, 1-p) over every cell of the probability matrix implied by
// the given parameters: the accuracy ceiling when the truth is known.
double empirical_expected_accuracy(const ModelSpec& spec, const ParameterSet& params);

}  // namespace pjml
