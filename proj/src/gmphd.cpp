#include "imfphd/gmphd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imfphd/errors.hpp"

namespace imfphd {

namespace {
constexpr double kSymTol = 1e-9;
}

SpawnTerm::SpawnTerm(double w, Matrix f, Vector offset, Matrix q)
    : weight(w), F(std::move(f)), d(std::move(offset)), Q(std::move(q)) {
    if (!(weight >= 0.0)) throw InputError("SpawnTerm: weight must be >= 0");
    if (F.rows() != F.cols()) throw InputError("SpawnTerm: F must be square");
    if (d.size() != F.rows()) throw InputError("SpawnTerm: offset size mismatch");
    if (Q.rows() != F.rows() || Q.cols() != F.rows())
        throw InputError("SpawnTerm: Q size mismatch");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > kSymTol)
        throw InputError("SpawnTerm: Q must be symmetric");
    Q = symmetrize(Q);
}

ClutterModel::ClutterModel(double mean, Box box) : meanCount(mean), region(std::move(box)) {
    if (!(meanCount >= 0.0)) throw InputError("ClutterModel: meanCount must be >= 0");
    if (region.lo.size() != region.hi.size() || region.lo.size() == 0)
        throw InputError("ClutterModel: region bounds size mismatch");
    if (((region.hi - region.lo).array() <= 0.0).any())
        throw InputError("ClutterModel: region must have positive extent");
}

double ClutterModel::volume() const { return (region.hi - region.lo).prod(); }

double ClutterModel::intensityAt(const Vector& z) const {
    if (meanCount == 0.0) return 0.0;  // clutter-free, region irrelevant
    if (z.size() != region.lo.size())
        throw InputError("ClutterModel: measurement dimension mismatch");
    if ((z.array() < region.lo.array()).any() || (z.array() > region.hi.array()).any())
        return 0.0;
    return meanCount / volume();
}

void FilterParams::validate() const {
    if (!(pSurvive >= 0.0 && pSurvive <= 1.0))
        throw InputError("FilterParams: pSurvive must be in [0, 1]");
    if (!(pDetect >= 0.0 && pDetect <= 1.0))
        throw InputError("FilterParams: pDetect must be in [0, 1]");
    if (!(truncThreshold >= 0.0)) throw InputError("FilterParams: truncThreshold must be >= 0");
    if (!(mergeThreshold > 0.0)) throw InputError("FilterParams: mergeThreshold must be > 0");
    if (maxComponents < 1) throw InputError("FilterParams: maxComponents must be >= 1");
    if (!(extractThreshold >= 0.0))
        throw InputError("FilterParams: extractThreshold must be >= 0");
}

std::vector<GaussianComponent> predict_components(const std::vector<GaussianComponent>& prior,
                                                  const MotionModel& motion,
                                                  const SpawnModel& spawn,
                                                  const BirthModel& birth,
                                                  const FilterParams& params) {
    std::vector<GaussianComponent> out;
    out.reserve(prior.size() * (1 + spawn.terms.size()) + birth.intensity.size());
    for (const auto& c : prior) {
        GaussianComponent p = kalman_predict(c, motion);
        p.weight = params.pSurvive * c.weight;
        out.push_back(std::move(p));
    }
    for (const auto& c : prior) {
        for (const auto& term : spawn.terms) {
            const Vector m = term.F * c.mean + term.d;
            const Matrix P = term.Q + term.F * c.cov * term.F.transpose();
            out.emplace_back(term.weight * c.weight, m, symmetrize(P));
        }
    }
    for (const auto& c : birth.intensity.components) out.push_back(c);
    return out;
}

GaussianMixture phd_predict(const GaussianMixture& prior, const MotionModel& motion,
                            const SpawnModel& spawn, const BirthModel& birth,
                            const FilterParams& params) {
    params.validate();
    return {prior.dim, predict_components(prior.components, motion, spawn, birth, params)};
}

PhdUpdateOutput phd_update_full(const GaussianMixture& predicted, const MeasurementModel& meas,
                                const Matrix& noiseCov, const Vector& noiseMean,
                                const std::vector<Vector>& measurements,
                                const ClutterModel& clutter, const FilterParams& params) {
    params.validate();
    const int J = static_cast<int>(predicted.size());
    const int nZ = static_cast<int>(measurements.size());
    const int m = meas.measDim();
    if (meas.stateDim() != predicted.dim)
        throw InputError("phd_update: measurement model state dimension mismatch");
    if (noiseCov.rows() != m || noiseCov.cols() != m)
        throw InputError("phd_update: noise covariance dimension mismatch");
    if (noiseMean.size() != m) throw InputError("phd_update: noise mean dimension mismatch");
    for (const auto& z : measurements)
        if (z.size() != m) throw InputError("phd_update: measurement dimension mismatch");

    std::vector<KalmanPrecomp> pre(J);
    std::exception_ptr err;
#pragma omp parallel for schedule(static) if (J > 16)
    for (int i = 0; i < J; ++i) {
        try {
            pre[i] = kalman_precompute(predicted.components[i], meas, noiseCov,
                                       params.josephForm);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    PhdUpdateOutput out{GaussianMixture(predicted.dim), {}};
    std::vector<GaussianComponent> post(static_cast<std::size_t>(J) * (1 + nZ));
    out.innovations.resize(post.size());

    for (int i = 0; i < J; ++i) {
        const auto& c = predicted.components[i];
        post[i] = GaussianComponent((1.0 - params.pDetect) * c.weight, c.mean, c.cov);
        // innovations[i] stays detection = false
    }

    // Each measurement block is independent: weights are normalized inside the
    // block, so blocks can run concurrently without changing any value.
#pragma omp parallel for schedule(static) if (nZ > 2)
    for (int zi = 0; zi < nZ; ++zi) {
        const Vector& z = measurements[zi];
        const std::size_t base = static_cast<std::size_t>(J) * (1 + zi);
        std::vector<double> wnum(J);
        double wsum = 0.0;
        for (int i = 0; i < J; ++i) {
            const auto& c = predicted.components[i];
            const Vector innov = z - pre[i].projectedMean - noiseMean;
            const double q = std::exp(log_likelihood_of(pre[i], innov));
            wnum[i] = params.pDetect * c.weight * q;
            wsum += wnum[i];
            post[base + i] =
                GaussianComponent(0.0, c.mean + pre[i].gain * innov, pre[i].posteriorCov);
            out.innovations[base + i] = {true, innov, pre[i].innovationCov};
        }
        const double denom = clutter.intensityAt(z) + wsum;
        const double scale = denom > 0.0 ? 1.0 / denom : 0.0;
        for (int i = 0; i < J; ++i) post[base + i].weight = wnum[i] * scale;
    }

    out.posterior = GaussianMixture(predicted.dim, std::move(post));
    return out;
}

GaussianMixture phd_update(const GaussianMixture& predicted, const MeasurementModel& meas,
                           const Matrix& noiseCov, const Vector& noiseMean,
                           const std::vector<Vector>& measurements, const ClutterModel& clutter,
                           const FilterParams& params) {
    return phd_update_full(predicted, meas, noiseCov, noiseMean, measurements, clutter, params)
        .posterior;
}

ReductionPlan plan_reduction(const GaussianMixture& mixture, const FilterParams& params) {
    params.validate();
    ReductionPlan plan;
    const int J = static_cast<int>(mixture.size());
    if (J == 0) return plan;

    const double preMass = mixture.mass();

    std::vector<int> surviving;
    for (int i = 0; i < J; ++i)
        if (mixture.components[i].weight >= params.truncThreshold) surviving.push_back(i);

    std::vector<Eigen::LLT<Matrix>> llts(J);
    std::vector<char> invertible(J, 0);
    for (int i : surviving) {
        try {
            llts[i] = robust_llt(mixture.components[i].cov);
            invertible[i] = 1;
        } catch (const SingularCovarianceError&) {
            // never merged into another cluster, still allowed to lead its own
        }
    }

    std::vector<char> remaining(J, 0);
    for (int i : surviving) remaining[i] = 1;
    std::size_t left = surviving.size();

    std::vector<std::pair<double, std::vector<int>>> clusters;  // merged weight, members
    while (left > 0) {
        int leader = -1;
        for (int i : surviving)
            if (remaining[i] && (leader < 0 ||
                                 mixture.components[i].weight > mixture.components[leader].weight))
                leader = i;
        std::vector<int> cluster;
        double w = 0.0;
        for (int i : surviving) {
            if (!remaining[i]) continue;
            bool take = (i == leader);
            if (!take && invertible[i]) {
                const Vector e = mixture.components[i].mean - mixture.components[leader].mean;
                take = e.dot(llts[i].solve(e)) < params.mergeThreshold;
            }
            if (take) {
                cluster.push_back(i);
                w += mixture.components[i].weight;
                remaining[i] = 0;
                --left;
            }
        }
        clusters.emplace_back(w, std::move(cluster));
    }

    std::stable_sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second.front() < b.second.front();
    });
    if (static_cast<int>(clusters.size()) > params.maxComponents)
        clusters.resize(params.maxComponents);

    double keptMass = 0.0;
    for (auto& [w, members] : clusters) {
        keptMass += w;
        plan.clusters.push_back(std::move(members));
    }
    plan.rescale = keptMass > 0.0 ? preMass / keptMass : 1.0;
    return plan;
}

GaussianMixture apply_reduction(const ReductionPlan& plan, const GaussianMixture& mixture) {
    GaussianMixture out(mixture.dim);
    for (const auto& cluster : plan.clusters) {
        double w = 0.0;
        for (int i : cluster) {
            if (i < 0 || i >= static_cast<int>(mixture.size()))
                throw InputError("apply_reduction: plan index out of range");
            w += mixture.components[i].weight;
        }
        Vector mean = Vector::Zero(mixture.dim);
        Matrix cov = Matrix::Zero(mixture.dim, mixture.dim);
        if (w > 0.0) {
            for (int i : cluster) mean += mixture.components[i].weight * mixture.components[i].mean;
            mean /= w;
            for (int i : cluster) {
                const auto& c = mixture.components[i];
                const Vector e = mean - c.mean;
                cov += (c.weight / w) * (c.cov + e * e.transpose());
            }
        } else {
            // degenerate slice with zero mass on this cluster: fall back to a
            // plain average so the component stays well formed
            const double inv = 1.0 / static_cast<double>(cluster.size());
            for (int i : cluster) mean += inv * mixture.components[i].mean;
            for (int i : cluster) {
                const auto& c = mixture.components[i];
                const Vector e = mean - c.mean;
                cov += inv * (c.cov + e * e.transpose());
            }
        }
        out.add(GaussianComponent(w * plan.rescale, std::move(mean), symmetrize(cov)));
    }
    return out;
}

GaussianMixture prune_and_merge(const GaussianMixture& mixture, const FilterParams& params) {
    return apply_reduction(plan_reduction(mixture, params), mixture);
}

std::vector<StateEstimate> extract_states(const GaussianMixture& mixture,
                                          const FilterParams& params) {
    params.validate();
    std::vector<StateEstimate> out;
    for (const auto& c : mixture.components) {
        if (c.weight <= params.extractThreshold) continue;
        const int copies = c.weight > 1.5 ? static_cast<int>(std::llround(c.weight)) : 1;
        for (int k = 0; k < copies; ++k) out.push_back({c.mean, c.cov, c.weight});
    }
    return out;
}

GmphdStepResult gmphd_step(const GaussianMixture& prior, const MotionModel& motion,
                           const SpawnModel& spawn, const BirthModel& birth,
                           const MeasurementModel& meas, const Matrix& noiseCov,
                           const Vector& noiseMean, const std::vector<Vector>& measurements,
                           const ClutterModel& clutter, const FilterParams& params) {
    const GaussianMixture predicted = phd_predict(prior, motion, spawn, birth, params);
    const GaussianMixture updated =
        phd_update(predicted, meas, noiseCov, noiseMean, measurements, clutter, params);
    GmphdStepResult r{prune_and_merge(updated, params), {}};
    r.estimates = extract_states(r.posterior, params);
    return r;
}

}  // namespace imfphd
