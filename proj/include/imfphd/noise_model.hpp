#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "imfphd/gaussian.hpp"
#include "imfphd/rng.hpp"

namespace imfphd {

// One term of the measurement-noise mixture: proportion, mean, covariance.
struct NoiseComponent {
    double delta;
    Vector mu;
    Matrix R;
};

// Finite Gaussian mixture standing in for the (possibly non-Gaussian)
// measurement noise distribution.  Proportions sum to 1; every covariance is
// symmetric PSD and shares the measurement dimension.
struct NoiseMixtureModel {
    std::vector<NoiseComponent> components;

    NoiseMixtureModel() = default;
    explicit NoiseMixtureModel(std::vector<NoiseComponent> comps);

    int L() const { return static_cast<int>(components.size()); }
    int dim() const {
        return components.empty() ? 0 : static_cast<int>(components.front().mu.size());
    }

    // Single-Gaussian collapse: total mean and total covariance (law of
    // total variance).  What a mixture-unaware filter would use as R.
    std::pair<Vector, Matrix> momentMatched() const;
};

// Row-stochastic Markov model-switching matrix.
struct TransitionMatrix {
    Matrix p;

    explicit TransitionMatrix(Matrix m);
    int L() const { return static_cast<int>(p.rows()); }
};

// L x L matrix with every row equal to the mixture proportions.
TransitionMatrix build_transition_matrix(const NoiseMixtureModel& model);

struct EmFitReport {
    NoiseMixtureModel model;
    std::vector<double> logLikelihoodTrace;
    int iterations = 0;
    bool converged = false;
};

// Standard EM for Gaussian mixtures with k-means++ seeding,
// log-sum-exp responsibilities, and a covariance floor of
// 1e-8 * per-dimension sample variance.  A collapsed component
// (covariance eigenvalue below 1e-8 * data variance) is re-seeded from a
// random sample once; a second collapse of the same component is an error.
EmFitReport em_fit(const std::vector<Vector>& samples, int L, std::uint64_t seed,
                   int maxIter = 500, double tol = 1e-6);

// Draw one noise vector: component index by proportion, then N(mu, R).
Vector sample_noise(const NoiseMixtureModel& model, Rng& rng);

}  // namespace imfphd
