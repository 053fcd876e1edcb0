#pragma once

#include <vector>

#include "imfphd/gmphd.hpp"
#include "imfphd/noise_model.hpp"

namespace imfphd {

// One intensity component carried jointly by all noise models: per-model
// probabilities plus one (weight, mean, covariance) triple per model, kept
// index-aligned across the bank.
struct BankComponent {
    Vector modelProbs;                      // length L, sums to 1
    std::vector<GaussianComponent> states;  // length L
};

struct ModelConditionedBank {
    int L = 0;
    int dim = 0;
    std::vector<BankComponent> comps;
};

// Every prior component is replicated across models with the mixture
// proportions as initial model probabilities.
ModelConditionedBank init_bank(const GaussianMixture& prior, const NoiseMixtureModel& noise);

// Interaction step: predicted model probabilities and the merged input
// moments handed to each model-matched filter.
struct MixedComponent {
    Vector cbar;        // length L: predicted model probabilities
    Matrix mixWeights;  // (l, u): probability of source model l given target model u
    std::vector<GaussianComponent> inputs;  // per target model u
};

struct MixedInputs {
    int L = 0;
    int dim = 0;
    std::vector<MixedComponent> comps;
};

MixedInputs mix_inputs(const ModelConditionedBank& bank, const TransitionMatrix& trans);

// One model's full predict + update, run over the mixed inputs with that
// model's noise moments.  Posterior components are enumerated identically for
// every model, so index k means the same physical component bank-wide.
struct PerModelStepResult {
    std::vector<GaussianComponent> posterior;
    std::vector<InnovationRecord> innovations;
};

PerModelStepResult per_model_step(const MixedInputs& mixed, int model,
                                  const NoiseMixtureModel& noise, const MotionModel& motion,
                                  const SpawnModel& spawn, const BirthModel& birth,
                                  const MeasurementModel& meas,
                                  const std::vector<Vector>& measurements,
                                  const ClutterModel& clutter, const FilterParams& params);

// Likelihood of each model per posterior component: cbar * N(innovation; 0, S)
// for detection components, plain cbar for missed-detection ones.  cbars is
// (components x L), rows aligned with the per-model posteriors.
Matrix model_likelihoods(const std::vector<PerModelStepResult>& perModel, const Matrix& cbars);

// Normalized per-component model probabilities; when the likelihood row sums
// below 1e-300 the predicted probabilities are used instead.
std::vector<Vector> update_model_probs(const Matrix& likelihoods, const Matrix& cbars);

// Probability-weighted moment fusion across models, component by component.
GaussianMixture fuse(const std::vector<PerModelStepResult>& perModel,
                     const std::vector<Vector>& modelProbs, int dim);

struct ImfStepResult {
    ModelConditionedBank bank;  // reduced, ready for the next step
    GaussianMixture fused;      // reduced fused intensity the estimates come from
    std::vector<StateEstimate> estimates;
};

// One full filter step.  Mixture reduction is planned once on the fused
// intensity and replayed on every model slice, which keeps the bank aligned
// and makes the single-model bank reduce to the plain filter exactly.
ImfStepResult imf_gmphd_step(const ModelConditionedBank& bank, const TransitionMatrix& trans,
                             const NoiseMixtureModel& noise, const MotionModel& motion,
                             const SpawnModel& spawn, const BirthModel& birth,
                             const MeasurementModel& meas,
                             const std::vector<Vector>& measurements,
                             const ClutterModel& clutter, const FilterParams& params);

}  // namespace imfphd
