#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

#include "imfphd/errors.hpp"

namespace imfphd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// One weighted Gaussian term of an intensity function.  The covariance is
// symmetrized on construction; weight must be nonnegative.
struct GaussianComponent {
    double weight;
    Vector mean;
    Matrix cov;

    GaussianComponent() : weight(0.0) {}
    GaussianComponent(double w, Vector m, Matrix P);

    int dim() const { return static_cast<int>(mean.size()); }
};

// Gaussian mixture intensity.  Mass (sum of weights) is the expected target
// count under the PHD interpretation.
struct GaussianMixture {
    std::vector<GaussianComponent> components;
    int dim;

    explicit GaussianMixture(int d) : dim(d) {}
    GaussianMixture(int d, std::vector<GaussianComponent> comps);

    std::size_t size() const { return components.size(); }
    bool empty() const { return components.empty(); }
    double mass() const;
    void add(GaussianComponent c);
};

double mixture_mass(const GaussianMixture& v);

// Linear-Gaussian motion: x' = F x + q, q ~ N(0, Q).
struct MotionModel {
    Matrix F;
    Matrix Q;

    MotionModel() = default;
    MotionModel(Matrix f, Matrix q);
    int dim() const { return static_cast<int>(F.rows()); }
};

// z = H x + r; the noise covariance lives with the noise model.
struct MeasurementModel {
    Matrix H;

    MeasurementModel() = default;
    explicit MeasurementModel(Matrix h);
    int measDim() const { return static_cast<int>(H.rows()); }
    int stateDim() const { return static_cast<int>(H.cols()); }
};

struct KalmanUpdateResult {
    Vector posteriorMean;
    Matrix posteriorCov;
    Vector innovation;
    Matrix innovationCov;
    Matrix gain;
    double predictedLikelihood;
};

// Cholesky factorization with a single retry after adding 1e-9*trace/dim of
// diagonal jitter.  Throws SingularCovarianceError if both attempts fail.
Eigen::LLT<Matrix> robust_llt(const Matrix& cov);

// log N(x; mean, cov), evaluated through a triangular factorization.
double log_gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov);
double gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

GaussianComponent kalman_predict(const GaussianComponent& comp, const MotionModel& motion);

// Measurement-independent part of a Kalman update for one predicted
// component: S, its factorization, gain, and the posterior covariance are
// shared by every measurement, so the filter computes them once per
// component and applies the per-z part separately.
struct KalmanPrecomp {
    Vector projectedMean;  // H m
    Matrix innovationCov;  // S = H P H^T + R
    Matrix cholS;          // lower-triangular factor of S
    Matrix gain;           // K = P H^T S^{-1}
    Matrix posteriorCov;
    double logNormConst;   // -(m/2) log 2pi - (1/2) log|S|
};

KalmanPrecomp kalman_precompute(const GaussianComponent& comp, const MeasurementModel& meas,
                                const Matrix& R, bool josephForm = false);

double log_likelihood_of(const KalmanPrecomp& pre, const Vector& innovation);

KalmanUpdateResult kalman_apply(const KalmanPrecomp& pre, const GaussianComponent& comp,
                                const Vector& noiseMean, const Vector& z);

KalmanUpdateResult kalman_update(const GaussianComponent& comp, const MeasurementModel& meas,
                                 const Matrix& R, const Vector& noiseMean, const Vector& z,
                                 bool josephForm = false);

}  // namespace imfphd
