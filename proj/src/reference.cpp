#include "imfphd/reference.hpp"

#include <cmath>

#include "imfphd/errors.hpp"

namespace imfphd::ref {

GaussianMixture phd_update(const GaussianMixture& predicted, const MeasurementModel& meas,
                           const Matrix& noiseCov, const Vector& noiseMean,
                           const std::vector<Vector>& measurements, const ClutterModel& clutter,
                           const FilterParams& params) {
    params.validate();
    GaussianMixture out(predicted.dim);
    for (const auto& c : predicted.components)
        out.add(GaussianComponent((1.0 - params.pDetect) * c.weight, c.mean, c.cov));

    for (const auto& z : measurements) {
        std::vector<GaussianComponent> block;
        std::vector<double> wnum;
        double wsum = 0.0;
        for (const auto& c : predicted.components) {
            const auto upd = kalman_update(c, meas, noiseCov, noiseMean, z, params.josephForm);
            const double w = params.pDetect * c.weight * upd.predictedLikelihood;
            wnum.push_back(w);
            wsum += w;
            block.emplace_back(0.0, upd.posteriorMean, upd.posteriorCov);
        }
        const double denom = clutter.intensityAt(z) + wsum;
        const double scale = denom > 0.0 ? 1.0 / denom : 0.0;
        for (std::size_t i = 0; i < block.size(); ++i) {
            block[i].weight = wnum[i] * scale;
            out.add(std::move(block[i]));
        }
    }
    return out;
}

std::vector<OspaResult> ospa_series(const std::vector<PointSet>& truthFrames,
                                    const std::vector<PointSet>& estimateFrames,
                                    const OspaParams& params,
                                    const std::vector<int>& positionIndices) {
    if (truthFrames.size() != estimateFrames.size())
        throw InputError("ospa_series: frame counts differ");
    const auto extract = [&](const PointSet& states) {
        PointSet out;
        for (const auto& s : states) {
            Vector pos(positionIndices.size());
            for (std::size_t d = 0; d < positionIndices.size(); ++d) {
                const int idx = positionIndices[d];
                if (idx < 0 || idx >= s.size())
                    throw InputError("ospa_series: position index out of range");
                pos[static_cast<Eigen::Index>(d)] = s[idx];
            }
            out.push_back(std::move(pos));
        }
        return out;
    };
    std::vector<OspaResult> out;
    out.reserve(truthFrames.size());
    for (std::size_t t = 0; t < truthFrames.size(); ++t)
        out.push_back(ospa(extract(truthFrames[t]), extract(estimateFrames[t]), params));
    return out;
}

}  // namespace imfphd::ref
