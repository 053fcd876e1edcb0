#include "imfphd/scenario.hpp"

#include <cmath>

#include "imfphd/errors.hpp"

namespace imfphd {

namespace {

// Square root factor for sampling, tolerant of semidefinite matrices (a zero
// process noise block is legitimate scenario data).
Matrix psd_sqrt(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw SingularCovarianceError("psd_sqrt: eigensolver failed");
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

Vector draw_normals(int n, Rng& rng) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

int pick_component(const NoiseMixtureModel& model, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int l = 0; l < model.L(); ++l) {
        acc += model.components[l].delta;
        if (u < acc) return l;
    }
    return model.L() - 1;
}

Vector draw_noise_per_axis(const NoiseMixtureModel& model, Rng& rng) {
    Vector r(model.dim());
    for (int d = 0; d < model.dim(); ++d) {
        const auto& c = model.components[pick_component(model, rng)];
        r[d] = c.mu[d] + std::sqrt(c.R(d, d)) * rng.normal();
    }
    return r;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (steps < 1) throw InputError("ScenarioConfig: steps must be >= 1");
    if (!(dt > 0.0)) throw InputError("ScenarioConfig: dt must be > 0");
    if (!(pDetect >= 0.0 && pDetect <= 1.0))
        throw InputError("ScenarioConfig: pDetect must be in [0, 1]");
    const int stateDim = motion.dim();
    if (stateDim < 1) throw InputError("ScenarioConfig: motion model is empty");
    if (motion.Q.rows() != stateDim || motion.Q.cols() != stateDim)
        throw InputError("ScenarioConfig: Q dimension mismatch");
    if (measurement.stateDim() != stateDim)
        throw InputError("ScenarioConfig: measurement model state dimension mismatch");
    if (noise.L() < 1) throw InputError("ScenarioConfig: noise model is empty");
    if (noise.dim() != measurement.measDim())
        throw InputError("ScenarioConfig: noise dimension mismatch");
    if (clutter.meanCount > 0.0 && clutter.region.lo.size() != measurement.measDim())
        throw InputError("ScenarioConfig: clutter region dimension mismatch");
    for (const auto& t : targets) {
        if (t.birthStep < 1) throw InputError("ScenarioConfig: birthStep must be >= 1");
        if (t.birthStep >= t.deathStep)
            throw InputError("ScenarioConfig: birthStep must precede deathStep");
        if (t.initialState.size() != stateDim)
            throw InputError("ScenarioConfig: target state dimension mismatch");
    }
}

std::vector<ScenarioFrame> simulate(const ScenarioConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const int stateDim = config.motion.dim();
    const Matrix sqrtQ = psd_sqrt(config.motion.Q);

    std::vector<Vector> states(config.targets.size());
    std::vector<ScenarioFrame> frames;
    frames.reserve(static_cast<std::size_t>(config.steps));

    for (int k = 1; k <= config.steps; ++k) {
        ScenarioFrame frame;
        frame.step = k;
        for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
            const auto& script = config.targets[ti];
            if (k == script.birthStep)
                states[ti] = script.initialState;
            else if (script.aliveAt(k))
                states[ti] = config.motion.F * states[ti] + sqrtQ * draw_normals(stateDim, rng);
            if (script.aliveAt(k)) frame.truthStates.push_back(states[ti]);
        }
        for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
            if (!config.targets[ti].aliveAt(k)) continue;
            if (!rng.bernoulli(config.pDetect)) continue;
            const Vector r = config.noisePerAxis ? draw_noise_per_axis(config.noise, rng)
                                                 : sample_noise(config.noise, rng);
            frame.measurements.push_back(config.measurement.H * states[ti] + r);
        }
        const int clutterCount = rng.poisson(config.clutter.meanCount);
        for (int j = 0; j < clutterCount; ++j) {
            Vector z(config.clutter.region.lo.size());
            for (Eigen::Index d = 0; d < z.size(); ++d)
                z[d] = rng.uniform(config.clutter.region.lo[d], config.clutter.region.hi[d]);
            frame.measurements.push_back(std::move(z));
        }
        rng.shuffle(frame.measurements);
        frames.push_back(std::move(frame));
    }
    return frames;
}

ScenarioConfig builtin_scenario() {
    ScenarioConfig config;
    config.steps = 100;
    config.dt = 1.0;
    config.seed = 1;

    Matrix F = Matrix::Identity(4, 4);
    F(0, 1) = config.dt;
    F(2, 3) = config.dt;
    Matrix Q = Vector{{0.01, 0.1, 0.01, 0.1}}.asDiagonal();
    config.motion = MotionModel(std::move(F), std::move(Q));

    Matrix H(2, 4);
    H << 1, 0, 0, 0,
         0, 0, 1, 0;
    config.measurement = MeasurementModel(std::move(H));

    const Matrix eye2 = Matrix::Identity(2, 2);
    config.noise = NoiseMixtureModel({{0.7, Vector::Zero(2), 0.01 * eye2},
                                      {0.3, Vector::Zero(2), 100.0 * eye2}});

    config.pDetect = 0.98;
    config.clutter = ClutterModel(10.0, {Vector::Zero(2), Vector::Constant(2, 200.0)});

    config.targets = {
        {1, 70, Vector{{40.0, 1.2, 40.0, 1.7}}},
        {1, 100, Vector{{160.0, -1.6, 30.0, 1.4}}},
        {20, 100, Vector{{30.0, 1.8, 170.0, -1.5}}},
        {40, 100, Vector{{170.0, -1.5, 160.0, -1.3}}},
    };
    return config;
}

}  // namespace imfphd
