#pragma once

#include <vector>

#include "imfphd/gaussian.hpp"

namespace imfphd {

// Spontaneous birth intensity; weights are expected target counts per
// component, they do not need to sum to 1.
struct BirthModel {
    GaussianMixture intensity = GaussianMixture(0);
};

// One linear-Gaussian spawning term: a parent with mean m contributes a
// component with weight w * parentWeight, mean F*m + d, covariance
// Q + F*P*F^T.
struct SpawnTerm {
    double weight = 0.0;
    Matrix F;
    Vector d;
    Matrix Q;

    SpawnTerm() = default;
    SpawnTerm(double w, Matrix f, Vector offset, Matrix q);
};

struct SpawnModel {
    std::vector<SpawnTerm> terms;
};

struct Box {
    Vector lo;
    Vector hi;
};

// Poisson clutter, uniform over an axis-aligned box.
struct ClutterModel {
    double meanCount = 0.0;
    Box region;

    ClutterModel() = default;
    ClutterModel(double mean, Box box);
    double volume() const;
    // Clutter intensity kappa(z): meanCount / volume inside the region
    // (bounds inclusive), 0 outside.
    double intensityAt(const Vector& z) const;
};

struct FilterParams {
    double pSurvive = 0.99;
    double pDetect = 0.98;
    double truncThreshold = 1e-5;
    double mergeThreshold = 4.0;  // squared Mahalanobis distance
    int maxComponents = 100;
    double extractThreshold = 0.5;
    bool josephForm = false;

    void validate() const;
};

struct StateEstimate {
    Vector mean;
    Matrix cov;
    double weight = 0.0;
};

// Predicted intensity built from an arbitrary component list: survival of
// each input component, then spawn terms (input-major, term-minor), then the
// birth components.  This fixed order is what keeps parallel and model-bank
// variants aligned component-for-component.
std::vector<GaussianComponent> predict_components(const std::vector<GaussianComponent>& prior,
                                                  const MotionModel& motion,
                                                  const SpawnModel& spawn,
                                                  const BirthModel& birth,
                                                  const FilterParams& params);

GaussianMixture phd_predict(const GaussianMixture& prior, const MotionModel& motion,
                            const SpawnModel& spawn, const BirthModel& birth,
                            const FilterParams& params);

// Innovation bookkeeping for one posterior component; missed-detection
// components carry detection = false and empty vectors.
struct InnovationRecord {
    bool detection = false;
    Vector innovation;
    Matrix innovationCov;
};

// Posterior intensity ordered as: one missed-detection block (all predicted
// components scaled by 1 - pDetect), then one block per measurement in input
// order, each again in predicted-component order.  So posterior component k
// descends from predicted component k % J, where J = predicted count.
struct PhdUpdateOutput {
    GaussianMixture posterior;
    std::vector<InnovationRecord> innovations;
};

PhdUpdateOutput phd_update_full(const GaussianMixture& predicted, const MeasurementModel& meas,
                                const Matrix& noiseCov, const Vector& noiseMean,
                                const std::vector<Vector>& measurements,
                                const ClutterModel& clutter, const FilterParams& params);

GaussianMixture phd_update(const GaussianMixture& predicted, const MeasurementModel& meas,
                           const Matrix& noiseCov, const Vector& noiseMean,
                           const std::vector<Vector>& measurements, const ClutterModel& clutter,
                           const FilterParams& params);

// Mixture reduction is split into planning and application so the same
// cluster/cap/rescale decisions can be replayed on several aligned mixtures.
struct ReductionPlan {
    std::vector<std::vector<int>> clusters;  // kept clusters, output order
    double rescale = 1.0;                    // restores the pre-reduction mass
};

// Decisions are made on the given mixture: drop weights below truncThreshold,
// greedily cluster by squared Mahalanobis distance (each candidate measured in
// its own covariance) to the heaviest remaining component, order clusters by
// merged weight (heaviest first), keep at most maxComponents of them.
ReductionPlan plan_reduction(const GaussianMixture& mixture, const FilterParams& params);

// Replays a plan on a mixture with the same component enumeration.  Each
// cluster is moment-matched under the mixture's own weights; all weights are
// then scaled by plan.rescale.
GaussianMixture apply_reduction(const ReductionPlan& plan, const GaussianMixture& mixture);

GaussianMixture prune_and_merge(const GaussianMixture& mixture, const FilterParams& params);

// Components with weight > extractThreshold are reported; a weight above 1.5
// is reported round(weight) times (co-located targets).
std::vector<StateEstimate> extract_states(const GaussianMixture& mixture,
                                          const FilterParams& params);

struct GmphdStepResult {
    GaussianMixture posterior;  // pruned and merged
    std::vector<StateEstimate> estimates;
};

GmphdStepResult gmphd_step(const GaussianMixture& prior, const MotionModel& motion,
                           const SpawnModel& spawn, const BirthModel& birth,
                           const MeasurementModel& meas, const Matrix& noiseCov,
                           const Vector& noiseMean, const std::vector<Vector>& measurements,
                           const ClutterModel& clutter, const FilterParams& params);

}  // namespace imfphd
