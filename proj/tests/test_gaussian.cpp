#include <cmath>
#include <functional>

#include "doctest.h"

#include "imfphd/errors.hpp"
#include "imfphd/gaussian.hpp"
#include "imfphd/rng.hpp"

using namespace imfphd;

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }
Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

// Trapezoid integral with a fixed step, used as the independent oracle for
// density values.
double trapezoid(double lo, double hi, double h, const std::function<double(double)>& f) {
    const int n = static_cast<int>(std::ceil((hi - lo) / h));
    double acc = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < n; ++i) acc += f(lo + i * h);
    return acc * h;
}

Matrix random_psd(int n, Rng& rng, double jitter = 0.5) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    return Matrix(m * m.transpose()) + jitter * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("scalar density matches a quadrature oracle") {
    // N(x; 0, 4) at x = 3, against trapezoid integration of the
    // unnormalized kernel exp(-x^2/8)
    const double kernelAt3 = std::exp(-9.0 / 8.0);
    const double z =
        trapezoid(-40.0, 40.0, 1e-3, [](double x) { return std::exp(-x * x / 8.0); });
    const double expected = kernelAt3 / z;
    CHECK(gaussian_pdf(vec1(3.0), vec1(0.0), mat1(4.0)) ==
          doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("scalar density integrates to one across scales") {
    for (const double var : {0.01, 1.0, 100.0}) {
        const double sigma = std::sqrt(var);
        const double integral =
            trapezoid(-12.0 * sigma, 12.0 * sigma, sigma / 2000.0, [&](double x) {
                return gaussian_pdf(vec1(x), vec1(0.0), mat1(var));
            });
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("multivariate density at the mean is the closed-form constant") {
    Matrix cov(2, 2);
    cov << 2.0, 0.0, 0.0, 0.5;  // determinant 1
    const Vector mean = Vector::Zero(2);
    CHECK(gaussian_pdf(mean, mean, cov) ==
          doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log density agrees with the plain density") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const Matrix cov = random_psd(3, rng);
        Vector x(3), mean(3);
        for (int d = 0; d < 3; ++d) {
            x[d] = rng.normal();
            mean[d] = rng.normal();
        }
        const double p = gaussian_pdf(x, mean, cov);
        CHECK(std::exp(log_gaussian_pdf(x, mean, cov)) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("component construction enforces its invariants") {
    CHECK_THROWS_AS(GaussianComponent(-0.1, vec1(0.0), mat1(1.0)), InputError);
    Matrix asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(GaussianComponent(1.0, Vector::Zero(2), asym), InputError);
    CHECK_THROWS_AS(GaussianComponent(1.0, Vector::Zero(2), mat1(1.0)), InputError);
    CHECK_THROWS_AS(GaussianComponent(1.0, vec1(0.0), mat1(-1.0)), InputError);

    // asymmetry inside tolerance is repaired, not rejected
    Matrix nearSym(2, 2);
    nearSym << 1.0, 0.3, 0.3 + 5e-10, 1.0;
    const GaussianComponent c(1.0, Vector::Zero(2), nearSym);
    CHECK((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mixture mass is the plain weight sum") {
    GaussianMixture v(1);
    CHECK(mixture_mass(v) == 0.0);
    Rng rng(5);
    double expected = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double w = rng.uniform();
        expected += w;
        v.add(GaussianComponent(w, vec1(rng.normal()), mat1(1.0)));
    }
    CHECK(mixture_mass(v) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("scalar prediction is the closed-form affine map") {
    Matrix F = mat1(2.0), Q = mat1(1.0);
    const MotionModel motion(F, Q);
    const GaussianComponent prior(0.7, vec1(3.0), mat1(1.0));
    const GaussianComponent pred = kalman_predict(prior, motion);
    CHECK(pred.weight == 0.7);
    CHECK(pred.mean[0] == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(pred.cov(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("constant-velocity prediction moves position by velocity") {
    Matrix F = Matrix::Identity(4, 4);
    F(0, 1) = 1.0;
    F(2, 3) = 1.0;
    Matrix Q = Vector{{0.01, 0.1, 0.01, 0.1}}.asDiagonal();
    const MotionModel motion(F, Q);
    const GaussianComponent prior(1.0, Vector{{0.0, 1.0, 0.0, 1.0}},
                                  Matrix(Matrix::Identity(4, 4)));
    const auto pred = kalman_predict(prior, motion);
    CHECK(pred.mean.isApprox(Vector{{1.0, 1.0, 1.0, 1.0}}, 1e-15));
    CHECK(pred.cov(0, 0) == doctest::Approx(2.01).epsilon(1e-12));  // 1 + 1 + 0.01
}

TEST_CASE("scalar update matches hand algebra") {
    const MeasurementModel meas(mat1(1.0));
    const GaussianComponent prior(1.0, vec1(0.0), mat1(1.0));
    const auto upd = kalman_update(prior, meas, mat1(1.0), vec1(0.0), vec1(2.0));
    CHECK(upd.innovationCov(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(upd.gain(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(upd.posteriorMean[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(upd.posteriorCov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    const double lik = std::exp(-1.0) / std::sqrt(4.0 * M_PI);
    CHECK(upd.predictedLikelihood == doctest::Approx(lik).epsilon(1e-12));
}

TEST_CASE("noise mean shifts the innovation") {
    const MeasurementModel meas(mat1(1.0));
    const GaussianComponent prior(1.0, vec1(0.0), mat1(1.0));
    const auto upd = kalman_update(prior, meas, mat1(1.0), vec1(2.0), vec1(2.0));
    CHECK(upd.innovation[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(upd.posteriorMean[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("update never inflates the covariance") {
    Rng rng(17);
    Matrix H(2, 4);
    H << 1, 0, 0, 0,
         0, 0, 1, 0;
    const MeasurementModel meas(H);
    for (int trial = 0; trial < 50; ++trial) {
        const GaussianComponent prior(1.0, Vector::Zero(4), random_psd(4, rng));
        const Matrix R = random_psd(2, rng, 0.1);
        Vector z(2);
        z << rng.normal(), rng.normal();
        for (const bool joseph : {false, true}) {
            const auto upd = kalman_update(prior, meas, R, Vector::Zero(2), z, joseph);
            const Eigen::SelfAdjointEigenSolver<Matrix> es(prior.cov - upd.posteriorCov);
            CHECK(es.eigenvalues().minCoeff() >= -1e-9);
            const Eigen::SelfAdjointEigenSolver<Matrix> post(upd.posteriorCov);
            CHECK(post.eigenvalues().minCoeff() >= -1e-9);
        }
    }
}

TEST_CASE("joseph form agrees with the short form on well-conditioned input") {
    Rng rng(23);
    const MeasurementModel meas(mat1(1.0));
    for (int trial = 0; trial < 20; ++trial) {
        const GaussianComponent prior(1.0, vec1(rng.normal()), mat1(1.0 + rng.uniform()));
        const Vector z = vec1(rng.normal());
        const auto a = kalman_update(prior, meas, mat1(0.5), vec1(0.0), z, false);
        const auto b = kalman_update(prior, meas, mat1(0.5), vec1(0.0), z, true);
        CHECK(a.posteriorCov(0, 0) == doctest::Approx(b.posteriorCov(0, 0)).epsilon(1e-12));
        CHECK(a.posteriorMean[0] == doctest::Approx(b.posteriorMean[0]).epsilon(1e-12));
    }
}

TEST_CASE("singular matrices are rejected with the dedicated errors") {
    CHECK_THROWS_AS(robust_llt(Matrix::Zero(2, 2)), SingularCovarianceError);
    const MeasurementModel meas(mat1(1.0));
    const GaussianComponent flat(1.0, vec1(0.0), mat1(0.0));
    CHECK_THROWS_AS(kalman_precompute(flat, meas, mat1(0.0)), SingularInnovationError);
}
