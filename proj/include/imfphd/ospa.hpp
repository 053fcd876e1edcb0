#pragma once

#include <vector>

#include "imfphd/gaussian.hpp"

namespace imfphd {

using PointSet = std::vector<Vector>;

struct OspaParams {
    double cutoff = 100.0;  // c, must be > 0
    double order = 1.0;     // p, must be >= 1
};

// All three fields are reported on the same scale as the input distances,
// i.e. already raised to 1/p.  distance^p == localization^p + cardinality^p.
struct OspaResult {
    double distance = 0.0;
    double localization = 0.0;
    double cardinality = 0.0;
};

OspaResult ospa(const PointSet& x, const PointSet& y, const OspaParams& params = {});

// Per-frame OSPA between two aligned frame sequences of state vectors.
// positionIndices selects which state entries form the position used for the
// distance; the default picks (x, y) out of a (x, vx, y, vy) state.
std::vector<OspaResult> ospa_series(const std::vector<PointSet>& truthFrames,
                                    const std::vector<PointSet>& estimateFrames,
                                    const OspaParams& params = {},
                                    const std::vector<int>& positionIndices = {0, 2});

}  // namespace imfphd
