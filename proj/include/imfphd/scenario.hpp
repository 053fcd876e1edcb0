#pragma once

#include <cstdint>
#include <vector>

#include "imfphd/gmphd.hpp"
#include "imfphd/noise_model.hpp"

namespace imfphd {

// One simulated target: appears at birthStep in initialState, then follows
// the motion model until deathStep (both 1-based, both inclusive).
struct TargetScript {
    int birthStep = 1;
    int deathStep = 2;
    Vector initialState;

    bool aliveAt(int step) const { return step >= birthStep && step <= deathStep; }
};

struct ScenarioConfig {
    int steps = 100;
    double dt = 1.0;
    std::uint64_t seed = 1;
    std::vector<TargetScript> targets;
    MotionModel motion;
    MeasurementModel measurement;
    NoiseMixtureModel noise;
    // Per-vector draws pick one mixture component for the whole measurement
    // vector; the per-axis switch picks a component independently per axis.
    bool noisePerAxis = false;
    double pDetect = 0.98;
    ClutterModel clutter;

    void validate() const;
};

struct ScenarioFrame {
    int step = 0;
    std::vector<Vector> truthStates;
    std::vector<Vector> measurements;  // detections and clutter, shuffled
};

// Draw order per step is fixed: process noise for alive targets in script
// order, then one detection coin plus (if detected) one noise draw per alive
// target, then the clutter count and the clutter points, then one shuffle of
// the measurement list.  Same seed, same frames, bit for bit.
std::vector<ScenarioFrame> simulate(const ScenarioConfig& config);

// The built-in benchmark scenario: 100 steps over a [0,200]^2 region, four
// crossing constant-velocity targets with staggered births and deaths,
// detection probability 0.98, Poisson clutter with mean 10, and measurement
// noise 0.7*N(0, 0.01*I) + 0.3*N(0, 100*I).
ScenarioConfig builtin_scenario();

}  // namespace imfphd
