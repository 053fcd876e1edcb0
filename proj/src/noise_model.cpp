#include "imfphd/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imfphd {

namespace {
constexpr double kDeltaSumTol = 1e-9;
constexpr double kCovFloorFactor = 1e-8;
// Fixed chunk size for the deterministic E-step reduction: partial sums are
// accumulated per chunk and combined in chunk order, so the result does not
// depend on the number of threads.
constexpr std::size_t kChunk = 4096;
}  // namespace

NoiseMixtureModel::NoiseMixtureModel(std::vector<NoiseComponent> comps)
    : components(std::move(comps)) {
    if (components.empty()) throw InputError("NoiseMixtureModel: no components");
    const int d = static_cast<int>(components.front().mu.size());
    double sum = 0.0;
    for (auto& c : components) {
        if (c.delta <= 0.0 || c.delta > 1.0) throw InputError("NoiseMixtureModel: delta outside (0, 1]");
        if (c.mu.size() != d) throw InputError("NoiseMixtureModel: mean dimension mismatch");
        if (c.R.rows() != d || c.R.cols() != d) throw InputError("NoiseMixtureModel: R dimension mismatch");
        if ((c.R - c.R.transpose()).cwiseAbs().maxCoeff() > kDeltaSumTol) {
            throw InputError("NoiseMixtureModel: R not symmetric");
        }
        c.R = symmetrize(c.R);
        sum += c.delta;
    }
    if (std::abs(sum - 1.0) > kDeltaSumTol) throw InputError("NoiseMixtureModel: deltas do not sum to 1");
}

std::pair<Vector, Matrix> NoiseMixtureModel::momentMatched() const {
    const int d = dim();
    Vector mean = Vector::Zero(d);
    for (const auto& c : components) mean += c.delta * c.mu;
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& c : components) {
        const Vector e = c.mu - mean;
        cov += c.delta * (c.R + e * e.transpose());
    }
    return {mean, symmetrize(cov)};
}

TransitionMatrix::TransitionMatrix(Matrix m) : p(std::move(m)) {
    if (p.rows() != p.cols() || p.rows() < 1) throw InputError("TransitionMatrix: not square");
    if (p.minCoeff() < 0.0) throw InputError("TransitionMatrix: negative entry");
    for (int l = 0; l < p.rows(); ++l) {
        if (std::abs(p.row(l).sum() - 1.0) > 1e-12) {
            throw InputError("TransitionMatrix: row does not sum to 1");
        }
    }
}

TransitionMatrix build_transition_matrix(const NoiseMixtureModel& model) {
    const int L = model.L();
    Matrix p(L, L);
    for (int l = 0; l < L; ++l) {
        for (int u = 0; u < L; ++u) p(l, u) = model.components[u].delta;
    }
    return TransitionMatrix(std::move(p));
}

Vector sample_noise(const NoiseMixtureModel& model, Rng& rng) {
    const double x = rng.uniform();
    double acc = 0.0;
    int pick = model.L() - 1;
    for (int l = 0; l < model.L(); ++l) {
        acc += model.components[l].delta;
        if (x < acc) {
            pick = l;
            break;
        }
    }
    const auto& c = model.components[pick];
    const auto llt = robust_llt(c.R);
    const Matrix Lchol = llt.matrixL();
    Vector w(c.mu.size());
    for (int i = 0; i < w.size(); ++i) w(i) = rng.normal();
    return c.mu + Lchol * w;
}

namespace {

struct EmState {
    std::vector<double> delta;
    std::vector<Vector> mu;
    std::vector<Matrix> R;
};

// k-means++ style seeding: first center uniform, later centers proportional
// to squared distance from the nearest chosen center.
std::vector<Vector> seed_centers(const std::vector<Vector>& samples, int L, Rng& rng) {
    const std::size_t n = samples.size();
    std::vector<Vector> centers;
    centers.push_back(samples[rng.uniform_index(n)]);
    std::vector<double> d2(n, 0.0);
    for (int j = 1; j < L; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, (samples[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(samples[rng.uniform_index(n)]);
            continue;
        }
        double target = rng.uniform() * total;
        std::size_t pick = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (target < acc) {
                pick = i;
                break;
            }
        }
        centers.push_back(samples[pick]);
    }
    return centers;
}

Matrix sample_covariance(const std::vector<Vector>& samples, const Vector& mean) {
    const int d = static_cast<int>(mean.size());
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& s : samples) {
        const Vector e = s - mean;
        cov += e * e.transpose();
    }
    cov /= static_cast<double>(samples.size());
    return symmetrize(cov);
}

double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

}  // namespace

EmFitReport em_fit(const std::vector<Vector>& samples, int L, std::uint64_t seed,
                   int maxIter, double tol) {
    if (samples.empty()) throw InputError("em_fit: empty sample set");
    if (L < 1) throw InputError("em_fit: L must be >= 1");
    const std::size_t n = samples.size();
    if (n < static_cast<std::size_t>(10 * L)) throw InputError("em_fit: need at least 10*L samples");
    const int d = static_cast<int>(samples.front().size());
    for (const auto& s : samples) {
        if (s.size() != d) throw InputError("em_fit: inconsistent sample dimension");
    }

    Rng rng(seed);

    // Global sample moments: initial covariances, the covariance floor, and
    // the collapse threshold all derive from them.
    Vector globalMean = Vector::Zero(d);
    for (const auto& s : samples) globalMean += s;
    globalMean /= static_cast<double>(n);
    const Matrix globalCov = sample_covariance(samples, globalMean);
    const Vector varFloor = kCovFloorFactor * globalCov.diagonal();
    const double dataVariance = globalCov.diagonal().mean();
    const double collapseThreshold = kCovFloorFactor * dataVariance;

    EmState st;
    st.delta.assign(L, 1.0 / L);
    st.mu = seed_centers(samples, L, rng);
    st.R.assign(L, globalCov);
    for (auto& R : st.R) {
        for (int i = 0; i < d; ++i) R(i, i) = std::max(R(i, i), varFloor(i));
    }

    const std::size_t nChunks = (n + kChunk - 1) / kChunk;
    std::vector<double> resp(n * L);  // responsibilities, row-major per sample
    std::vector<bool> reseeded(L, false);

    EmFitReport report{NoiseMixtureModel({{1.0, globalMean, globalCov}}), {}, 0, false};

    double prevLogLik = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < maxIter; ++iter) {
        // E step: log responsibilities by log-sum-exp.  Per-chunk partial
        // log-likelihoods are combined in chunk order.
        std::vector<Matrix> cholR(L);
        std::vector<double> logNorm(L);
        std::vector<double> logDelta(L);
        for (int l = 0; l < L; ++l) {
            cholR[l] = Matrix(robust_llt(st.R[l]).matrixL());
            double logDet = 0.0;
            for (int i = 0; i < d; ++i) logDet += std::log(cholR[l](i, i));
            logNorm[l] = -0.5 * d * std::log(2.0 * M_PI) - logDet;
            logDelta[l] = std::log(st.delta[l]);
        }

        std::vector<double> chunkLogLik(nChunks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (nChunks > 4)
#endif
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nChunks); ++c) {
            const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
            const std::size_t hi = std::min(n, lo + kChunk);
            std::vector<double> logp(L);
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                for (int l = 0; l < L; ++l) {
                    const Vector e = samples[i] - st.mu[l];
                    const Vector y = cholR[l].triangularView<Eigen::Lower>().solve(e);
                    logp[l] = logDelta[l] + logNorm[l] - 0.5 * y.squaredNorm();
                }
                const double lse = log_sum_exp(logp);
                acc += lse;
                for (int l = 0; l < L; ++l) resp[i * L + l] = std::exp(logp[l] - lse);
            }
            chunkLogLik[c] = acc;
        }
        double logLik = 0.0;
        for (double x : chunkLogLik) logLik += x;
        report.logLikelihoodTrace.push_back(logLik);
        report.iterations = iter + 1;

        // M step, two passes (means, then scatter about the new means).
        std::vector<double> Nl(L, 0.0);
        std::vector<Vector> sumX(L, Vector::Zero(d));
        {
            std::vector<std::vector<double>> cN(nChunks, std::vector<double>(L, 0.0));
            std::vector<std::vector<Vector>> cX(nChunks, std::vector<Vector>(L, Vector::Zero(d)));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (nChunks > 4)
#endif
            for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nChunks); ++c) {
                const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
                const std::size_t hi = std::min(n, lo + kChunk);
                for (std::size_t i = lo; i < hi; ++i) {
                    for (int l = 0; l < L; ++l) {
                        const double r = resp[i * L + l];
                        cN[c][l] += r;
                        cX[c][l] += r * samples[i];
                    }
                }
            }
            for (std::size_t c = 0; c < nChunks; ++c) {
                for (int l = 0; l < L; ++l) {
                    Nl[l] += cN[c][l];
                    sumX[l] += cX[c][l];
                }
            }
        }
        for (int l = 0; l < L; ++l) {
            st.delta[l] = Nl[l] / static_cast<double>(n);
            if (Nl[l] > 0.0) st.mu[l] = sumX[l] / Nl[l];
        }

        std::vector<Matrix> scatter(L, Matrix::Zero(d, d));
        {
            std::vector<std::vector<Matrix>> cS(nChunks, std::vector<Matrix>(L, Matrix::Zero(d, d)));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (nChunks > 4)
#endif
            for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nChunks); ++c) {
                const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
                const std::size_t hi = std::min(n, lo + kChunk);
                for (std::size_t i = lo; i < hi; ++i) {
                    for (int l = 0; l < L; ++l) {
                        const Vector e = samples[i] - st.mu[l];
                        cS[c][l] += resp[i * L + l] * (e * e.transpose());
                    }
                }
            }
            for (std::size_t c = 0; c < nChunks; ++c) {
                for (int l = 0; l < L; ++l) scatter[l] += cS[c][l];
            }
        }
        for (int l = 0; l < L; ++l) {
            if (Nl[l] > 0.0) st.R[l] = symmetrize(scatter[l] / Nl[l]);
            for (int i = 0; i < d; ++i) st.R[l](i, i) = std::max(st.R[l](i, i), varFloor(i));
        }

        // Collapse handling: re-seed from a random sample once per component.
        // A starved component (vanishing responsibility mass) is treated the
        // same way.
        for (int l = 0; l < L; ++l) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(st.R[l]);
            const bool starved = Nl[l] < 1e-10 * static_cast<double>(n);
            if (starved || es.eigenvalues().minCoeff() < collapseThreshold) {
                if (reseeded[l]) throw Error("em_fit: component collapsed twice");
                reseeded[l] = true;
                st.mu[l] = samples[rng.uniform_index(n)];
                st.R[l] = globalCov;
                for (int i = 0; i < d; ++i) st.R[l](i, i) = std::max(st.R[l](i, i), varFloor(i));
                st.delta[l] = 1.0 / L;
                double sum = 0.0;
                for (double x : st.delta) sum += x;
                for (double& x : st.delta) x /= sum;
            }
        }

        if (iter > 0 && std::abs(logLik - prevLogLik) < tol) {
            report.converged = true;
            prevLogLik = logLik;
            break;
        }
        prevLogLik = logLik;
    }

    std::vector<NoiseComponent> comps;
    comps.reserve(L);
    double deltaSum = 0.0;
    for (int l = 0; l < L; ++l) deltaSum += st.delta[l];
    for (int l = 0; l < L; ++l) {
        comps.push_back({st.delta[l] / deltaSum, st.mu[l], st.R[l]});
    }
    report.model = NoiseMixtureModel(std::move(comps));
    return report;
}

}  // namespace imfphd
