#pragma once

#include "imfphd/gmphd.hpp"
#include "imfphd/ospa.hpp"

namespace imfphd::ref {

// Serial textbook versions of the parallel kernels.  They exist to pin down
// the expected values: the parallel implementations must match them (the
// update bit for bit) and the benchmark compares their speed.

GaussianMixture phd_update(const GaussianMixture& predicted, const MeasurementModel& meas,
                           const Matrix& noiseCov, const Vector& noiseMean,
                           const std::vector<Vector>& measurements, const ClutterModel& clutter,
                           const FilterParams& params);

std::vector<OspaResult> ospa_series(const std::vector<PointSet>& truthFrames,
                                    const std::vector<PointSet>& estimateFrames,
                                    const OspaParams& params = {},
                                    const std::vector<int>& positionIndices = {0, 2});

}  // namespace imfphd::ref
