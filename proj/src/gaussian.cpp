#include "imfphd/gaussian.hpp"

#include <cmath>
#include <numeric>

namespace imfphd {

namespace {
constexpr double kSymTol = 1e-9;
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}  // namespace

GaussianComponent::GaussianComponent(double w, Vector m, Matrix P)
    : weight(w), mean(std::move(m)), cov(std::move(P)) {
    if (weight < 0.0) throw InputError("GaussianComponent: negative weight");
    if (cov.rows() != cov.cols()) throw InputError("GaussianComponent: covariance not square");
    if (mean.size() != cov.rows()) throw InputError("GaussianComponent: mean/cov dimension mismatch");
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymTol) throw InputError("GaussianComponent: covariance asymmetry exceeds tolerance");
    cov = symmetrize(cov);
    for (int i = 0; i < cov.rows(); ++i) {
        if (cov(i, i) < -kSymTol) throw InputError("GaussianComponent: negative covariance diagonal");
    }
}

GaussianMixture::GaussianMixture(int d, std::vector<GaussianComponent> comps)
    : components(std::move(comps)), dim(d) {
    for (const auto& c : components) {
        if (c.dim() != dim) throw InputError("GaussianMixture: component dimension mismatch");
    }
}

double GaussianMixture::mass() const {
    return std::accumulate(components.begin(), components.end(), 0.0,
                           [](double acc, const GaussianComponent& c) { return acc + c.weight; });
}

void GaussianMixture::add(GaussianComponent c) {
    if (c.dim() != dim) throw InputError("GaussianMixture: component dimension mismatch");
    components.push_back(std::move(c));
}

double mixture_mass(const GaussianMixture& v) { return v.mass(); }

MotionModel::MotionModel(Matrix f, Matrix q) : F(std::move(f)), Q(std::move(q)) {
    if (F.rows() != F.cols()) throw InputError("MotionModel: F not square");
    if (Q.rows() != Q.cols() || Q.rows() != F.rows()) throw InputError("MotionModel: Q dimension mismatch");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > kSymTol) throw InputError("MotionModel: Q not symmetric");
    Q = symmetrize(Q);
}

MeasurementModel::MeasurementModel(Matrix h) : H(std::move(h)) {
    if (H.rows() < 1 || H.cols() < 1) throw InputError("MeasurementModel: empty H");
}

Eigen::LLT<Matrix> robust_llt(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt;
    const double jitter = 1e-9 * cov.trace() / static_cast<double>(cov.rows());
    Matrix bumped = cov;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() != Eigen::Success) {
        throw SingularCovarianceError("covariance not positive definite after jitter");
    }
    return llt;
}

double log_gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    if (x.size() != mean.size() || mean.size() != cov.rows()) {
        throw InputError("log_gaussian_pdf: dimension mismatch");
    }
    const auto llt = robust_llt(cov);
    const Matrix L = llt.matrixL();
    double logDet = 0.0;
    for (int i = 0; i < L.rows(); ++i) logDet += std::log(L(i, i));
    logDet *= 2.0;
    const Vector e = x - mean;
    const Vector y = L.triangularView<Eigen::Lower>().solve(e);
    const double quad = y.squaredNorm();
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + logDet + quad);
}

double gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    return std::exp(log_gaussian_pdf(x, mean, cov));
}

GaussianComponent kalman_predict(const GaussianComponent& comp, const MotionModel& motion) {
    if (motion.dim() != comp.dim()) throw InputError("kalman_predict: dimension mismatch");
    Vector m = motion.F * comp.mean;
    Matrix P = symmetrize(motion.Q + motion.F * comp.cov * motion.F.transpose());
    return GaussianComponent(comp.weight, std::move(m), std::move(P));
}

KalmanPrecomp kalman_precompute(const GaussianComponent& comp, const MeasurementModel& meas,
                                const Matrix& R, bool josephForm) {
    if (meas.stateDim() != comp.dim()) throw InputError("kalman_precompute: state dimension mismatch");
    if (R.rows() != meas.measDim() || R.cols() != meas.measDim()) {
        throw InputError("kalman_precompute: R dimension mismatch");
    }
    KalmanPrecomp pre;
    pre.projectedMean = meas.H * comp.mean;
    pre.innovationCov = symmetrize(meas.H * comp.cov * meas.H.transpose() + R);

    Eigen::LLT<Matrix> llt(pre.innovationCov);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-9 * pre.innovationCov.trace() / static_cast<double>(pre.innovationCov.rows());
        pre.innovationCov.diagonal().array() += jitter;
        llt.compute(pre.innovationCov);
        if (llt.info() != Eigen::Success) {
            throw SingularInnovationError("innovation covariance not positive definite");
        }
    }
    pre.cholS = llt.matrixL();

    // K = P H^T S^{-1}, via the factorization rather than an explicit inverse.
    pre.gain = llt.solve(meas.H * comp.cov).transpose();

    const int n = comp.dim();
    const Matrix IKH = Matrix::Identity(n, n) - pre.gain * meas.H;
    if (josephForm) {
        pre.posteriorCov = symmetrize(IKH * comp.cov * IKH.transpose() +
                                      pre.gain * R * pre.gain.transpose());
    } else {
        pre.posteriorCov = symmetrize(IKH * comp.cov);
    }

    double logDet = 0.0;
    for (int i = 0; i < pre.cholS.rows(); ++i) logDet += std::log(pre.cholS(i, i));
    const int m = meas.measDim();
    pre.logNormConst = -0.5 * static_cast<double>(m) * kLog2Pi - logDet;
    return pre;
}

double log_likelihood_of(const KalmanPrecomp& pre, const Vector& innovation) {
    const Vector y = pre.cholS.triangularView<Eigen::Lower>().solve(innovation);
    return pre.logNormConst - 0.5 * y.squaredNorm();
}

KalmanUpdateResult kalman_apply(const KalmanPrecomp& pre, const GaussianComponent& comp,
                                const Vector& noiseMean, const Vector& z) {
    KalmanUpdateResult r;
    r.innovation = z - pre.projectedMean - noiseMean;
    r.innovationCov = pre.innovationCov;
    r.gain = pre.gain;
    r.posteriorMean = comp.mean + pre.gain * r.innovation;
    r.posteriorCov = pre.posteriorCov;
    r.predictedLikelihood = std::exp(log_likelihood_of(pre, r.innovation));
    return r;
}

KalmanUpdateResult kalman_update(const GaussianComponent& comp, const MeasurementModel& meas,
                                 const Matrix& R, const Vector& noiseMean, const Vector& z,
                                 bool josephForm) {
    if (z.size() != meas.measDim() || noiseMean.size() != meas.measDim()) {
        throw InputError("kalman_update: measurement dimension mismatch");
    }
    const KalmanPrecomp pre = kalman_precompute(comp, meas, R, josephForm);
    return kalman_apply(pre, comp, noiseMean, z);
}

}  // namespace imfphd
