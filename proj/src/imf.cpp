#include "imfphd/imf.hpp"

#include <cmath>

#include "imfphd/errors.hpp"

namespace imfphd {

namespace {
constexpr double kLikelihoodFloor = 1e-300;

Vector renormalized(Vector v) {
    const double s = v.sum();
    if (s > 0.0)
        v /= s;
    else
        v.setConstant(1.0 / static_cast<double>(v.size()));
    return v;
}
}  // namespace

ModelConditionedBank init_bank(const GaussianMixture& prior, const NoiseMixtureModel& noise) {
    ModelConditionedBank bank;
    bank.L = noise.L();
    bank.dim = prior.dim;
    Vector probs(bank.L);
    for (int l = 0; l < bank.L; ++l) probs[l] = noise.components[l].delta;
    for (const auto& c : prior.components) {
        BankComponent bc;
        bc.modelProbs = probs;
        bc.states.assign(static_cast<std::size_t>(bank.L), c);
        bank.comps.push_back(std::move(bc));
    }
    return bank;
}

MixedInputs mix_inputs(const ModelConditionedBank& bank, const TransitionMatrix& trans) {
    const int L = trans.L();
    if (!bank.comps.empty() && bank.L != L)
        throw InputError("mix_inputs: bank and transition matrix disagree on model count");

    MixedInputs mixed;
    mixed.L = L;
    mixed.dim = bank.dim;
    mixed.comps.reserve(bank.comps.size());

    for (const auto& bc : bank.comps) {
        if (static_cast<int>(bc.states.size()) != L || bc.modelProbs.size() != L)
            throw InputError("mix_inputs: bank component not aligned with model count");
        MixedComponent mc;
        mc.cbar = trans.p.transpose() * bc.modelProbs;
        mc.mixWeights.resize(L, L);
        for (int u = 0; u < L; ++u) {
            if (mc.cbar[u] > 0.0) {
                for (int l = 0; l < L; ++l)
                    mc.mixWeights(l, u) = trans.p(l, u) * bc.modelProbs[l] / mc.cbar[u];
            } else {
                // no probability flows into model u; pass the prior through
                for (int l = 0; l < L; ++l) mc.mixWeights(l, u) = bc.modelProbs[l];
            }
        }
        for (int u = 0; u < L; ++u) {
            double w = 0.0;
            Vector m = Vector::Zero(bank.dim);
            for (int l = 0; l < L; ++l) {
                w += mc.mixWeights(l, u) * bc.states[l].weight;
                m += mc.mixWeights(l, u) * bc.states[l].mean;
            }
            Matrix P = Matrix::Zero(bank.dim, bank.dim);
            for (int l = 0; l < L; ++l) {
                const Vector e = bc.states[l].mean - m;
                P += mc.mixWeights(l, u) * (bc.states[l].cov + e * e.transpose());
            }
            mc.inputs.emplace_back(w, std::move(m), symmetrize(P));
        }
        mixed.comps.push_back(std::move(mc));
    }
    return mixed;
}

PerModelStepResult per_model_step(const MixedInputs& mixed, int model,
                                  const NoiseMixtureModel& noise, const MotionModel& motion,
                                  const SpawnModel& spawn, const BirthModel& birth,
                                  const MeasurementModel& meas,
                                  const std::vector<Vector>& measurements,
                                  const ClutterModel& clutter, const FilterParams& params) {
    if (model < 0 || model >= noise.L()) throw InputError("per_model_step: model index out of range");
    if (mixed.L != noise.L()) throw InputError("per_model_step: model count mismatch");

    std::vector<GaussianComponent> inputs;
    inputs.reserve(mixed.comps.size());
    for (const auto& mc : mixed.comps) inputs.push_back(mc.inputs[model]);

    const GaussianMixture predicted(mixed.dim,
                                    predict_components(inputs, motion, spawn, birth, params));
    auto upd = phd_update_full(predicted, meas, noise.components[model].R,
                               noise.components[model].mu, measurements, clutter, params);
    return {std::move(upd.posterior.components), std::move(upd.innovations)};
}

Matrix model_likelihoods(const std::vector<PerModelStepResult>& perModel, const Matrix& cbars) {
    const int L = static_cast<int>(perModel.size());
    if (L == 0) throw InputError("model_likelihoods: empty model list");
    const int n = static_cast<int>(perModel.front().posterior.size());
    if (cbars.rows() != n || cbars.cols() != L)
        throw InputError("model_likelihoods: cbar matrix shape mismatch");
    for (const auto& pm : perModel)
        if (static_cast<int>(pm.posterior.size()) != n)
            throw InputError("model_likelihoods: posteriors not aligned");

    Matrix lambda(n, L);
    for (int k = 0; k < n; ++k) {
        for (int u = 0; u < L; ++u) {
            const auto& rec = perModel[u].innovations[k];
            if (rec.detection) {
                const Vector zero = Vector::Zero(rec.innovation.size());
                lambda(k, u) =
                    cbars(k, u) * gaussian_pdf(rec.innovation, zero, rec.innovationCov);
            } else {
                lambda(k, u) = cbars(k, u);
            }
        }
    }
    return lambda;
}

std::vector<Vector> update_model_probs(const Matrix& likelihoods, const Matrix& cbars) {
    if (likelihoods.rows() != cbars.rows() || likelihoods.cols() != cbars.cols())
        throw InputError("update_model_probs: shape mismatch");
    std::vector<Vector> probs;
    probs.reserve(static_cast<std::size_t>(likelihoods.rows()));
    for (Eigen::Index k = 0; k < likelihoods.rows(); ++k) {
        const double s = likelihoods.row(k).sum();
        if (s < kLikelihoodFloor)
            probs.push_back(renormalized(cbars.row(k).transpose()));
        else
            probs.push_back(likelihoods.row(k).transpose() / s);
    }
    return probs;
}

GaussianMixture fuse(const std::vector<PerModelStepResult>& perModel,
                     const std::vector<Vector>& modelProbs, int dim) {
    const int L = static_cast<int>(perModel.size());
    if (L == 0) throw InputError("fuse: empty model list");
    const std::size_t n = perModel.front().posterior.size();
    for (const auto& pm : perModel)
        if (pm.posterior.size() != n) throw InputError("fuse: posteriors not aligned");
    if (modelProbs.size() != n) throw InputError("fuse: model probability count mismatch");

    GaussianMixture fused(dim);
    for (std::size_t k = 0; k < n; ++k) {
        const Vector& theta = modelProbs[k];
        if (theta.size() != L) throw InputError("fuse: model probability length mismatch");
        double w = 0.0;
        Vector m = Vector::Zero(dim);
        for (int u = 0; u < L; ++u) {
            w += theta[u] * perModel[u].posterior[k].weight;
            m += theta[u] * perModel[u].posterior[k].mean;
        }
        Matrix P = Matrix::Zero(dim, dim);
        for (int u = 0; u < L; ++u) {
            const auto& c = perModel[u].posterior[k];
            const Vector e = c.mean - m;
            P += theta[u] * (c.cov + e * e.transpose());
        }
        fused.add(GaussianComponent(w, std::move(m), symmetrize(P)));
    }
    return fused;
}

ImfStepResult imf_gmphd_step(const ModelConditionedBank& bank, const TransitionMatrix& trans,
                             const NoiseMixtureModel& noise, const MotionModel& motion,
                             const SpawnModel& spawn, const BirthModel& birth,
                             const MeasurementModel& meas,
                             const std::vector<Vector>& measurements,
                             const ClutterModel& clutter, const FilterParams& params) {
    params.validate();
    const int L = noise.L();
    if (trans.L() != L) throw InputError("imf_gmphd_step: transition matrix model count mismatch");
    if (!bank.comps.empty() && bank.L != L)
        throw InputError("imf_gmphd_step: bank model count mismatch");

    const int dim = bank.comps.empty() ? motion.dim() : bank.dim;
    const MixedInputs mixed = mix_inputs(
        bank.comps.empty() ? ModelConditionedBank{L, dim, {}} : bank, trans);

    std::vector<PerModelStepResult> perModel(L);
    for (int u = 0; u < L; ++u)
        perModel[u] = per_model_step(mixed, u, noise, motion, spawn, birth, meas, measurements,
                                     clutter, params);

    // Predicted model probabilities follow each posterior component back to
    // its predicted ancestor: survivals and spawns inherit the parent's cbar,
    // birth components start from the transition applied to the proportions.
    const int J = static_cast<int>(mixed.comps.size());
    const int T = static_cast<int>(spawn.terms.size());
    const int B = static_cast<int>(birth.intensity.size());
    const int Jp = J * (1 + T) + B;
    Vector deltas(L);
    for (int l = 0; l < L; ++l) deltas[l] = noise.components[l].delta;
    const Vector cbarBirth = trans.p.transpose() * deltas;

    const int nPost = static_cast<int>(perModel.front().posterior.size());
    Matrix cbars(nPost, L);
    for (int k = 0; k < nPost; ++k) {
        const int j = Jp > 0 ? k % Jp : 0;
        const Vector* src = &cbarBirth;
        if (j < J)
            src = &mixed.comps[j].cbar;
        else if (j < J * (1 + T))
            src = &mixed.comps[(j - J) / T].cbar;
        cbars.row(k) = src->transpose();
    }

    const Matrix lambda = model_likelihoods(perModel, cbars);
    const std::vector<Vector> probs = update_model_probs(lambda, cbars);
    const GaussianMixture fusedFull = fuse(perModel, probs, dim);

    const ReductionPlan plan = plan_reduction(fusedFull, params);

    ImfStepResult r{{L, dim, {}}, apply_reduction(plan, fusedFull), {}};

    std::vector<GaussianMixture> slices;
    slices.reserve(static_cast<std::size_t>(L));
    for (int u = 0; u < L; ++u)
        slices.push_back(
            apply_reduction(plan, GaussianMixture(dim, perModel[u].posterior)));

    for (std::size_t c = 0; c < plan.clusters.size(); ++c) {
        double wsum = 0.0;
        Vector theta = Vector::Zero(L);
        for (int i : plan.clusters[c]) {
            wsum += fusedFull.components[i].weight;
            theta += fusedFull.components[i].weight * probs[i];
        }
        if (wsum > 0.0) {
            theta /= wsum;
        } else {
            const double inv = 1.0 / static_cast<double>(plan.clusters[c].size());
            for (int i : plan.clusters[c]) theta += inv * probs[i];
        }
        BankComponent bc;
        bc.modelProbs = renormalized(std::move(theta));
        for (int u = 0; u < L; ++u) bc.states.push_back(slices[u].components[c]);
        r.bank.comps.push_back(std::move(bc));
    }

    r.estimates = extract_states(r.fused, params);
    return r;
}

}  // namespace imfphd
