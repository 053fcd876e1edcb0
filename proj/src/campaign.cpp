#include "imfphd/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "imfphd/errors.hpp"
#include "imfphd/io.hpp"

namespace imfphd {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::uint64_t hash_measurements(std::uint64_t h, const std::vector<Vector>& zs) {
    for (const auto& z : zs)
        for (Eigen::Index d = 0; d < z.size(); ++d) {
            double v = z[d];
            h = fnv1a64(&v, sizeof v, h);
        }
    return h;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

int worker_count(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

void ExperimentConfig::validate() const {
    scenario.validate();
    if (runs < 1) throw InputError("ExperimentConfig: runs must be >= 1");
    if (filters.empty()) throw InputError("ExperimentConfig: at least one filter is required");
    if (workers < 0) throw InputError("ExperimentConfig: workers must be >= 0");
    const int measDim = scenario.measurement.measDim();
    for (const auto& spec : filters) {
        spec.params.validate();
        if (spec.noise.L() == 0 && !spec.singleR)
            throw InputError("ExperimentConfig: filter needs a noise mixture or a single R");
        if (spec.noise.L() > 0 && spec.noise.dim() != measDim)
            throw InputError("ExperimentConfig: filter noise dimension mismatch");
        if (spec.singleR && (spec.singleR->rows() != measDim || spec.singleR->cols() != measDim))
            throw InputError("ExperimentConfig: filter R dimension mismatch");
        if (!(spec.ospa.cutoff > 0.0) || !(spec.ospa.order >= 1.0))
            throw InputError("ExperimentConfig: invalid OSPA parameters");
    }
    for (const auto& c : birth.intensity.components)
        if (c.dim() != scenario.motion.dim())
            throw InputError("ExperimentConfig: birth component dimension mismatch");
}

std::pair<Matrix, Vector> single_noise_of(const FilterSpec& spec, int measDim) {
    if (spec.singleR) {
        Vector mean = spec.singleNoiseMean.size() > 0 ? spec.singleNoiseMean
                                                      : Vector::Zero(measDim);
        return {*spec.singleR, std::move(mean)};
    }
    if (spec.noise.L() == 0) throw InputError("filter spec has no noise description");
    auto [mean, cov] = spec.noise.momentMatched();
    return {std::move(cov), std::move(mean)};
}

NoiseMixtureModel mixture_noise_of(const FilterSpec& spec, int measDim) {
    if (spec.noise.L() > 0) return spec.noise;
    auto [cov, mean] = single_noise_of(spec, measDim);
    return NoiseMixtureModel({{1.0, std::move(mean), std::move(cov)}});
}

std::vector<std::string> effective_filter_names(const std::vector<FilterSpec>& filters) {
    std::vector<std::string> names;
    for (const auto& spec : filters) {
        std::string base = spec.name.empty()
                               ? (spec.kind == FilterKind::GmPhd ? "gm-phd" : "imf-gm-phd")
                               : spec.name;
        std::string candidate = base;
        int suffix = 2;
        while (std::find(names.begin(), names.end(), candidate) != names.end())
            candidate = base + "_" + std::to_string(suffix++);
        names.push_back(std::move(candidate));
    }
    return names;
}

RunSeries run_filter_on_frames(const FilterSpec& spec, const ExperimentConfig& config,
                               const std::vector<ScenarioFrame>& frames,
                               std::vector<std::vector<StateEstimate>>* estimatesOut) {
    const double t0 = now_seconds();
    RunSeries series;
    const auto& meas = config.scenario.measurement;
    const int measDim = meas.measDim();
    const int stateDim = config.scenario.motion.dim();

    GaussianMixture gmPrior(stateDim);
    ModelConditionedBank bank;
    NoiseMixtureModel mixture;
    Matrix singleR;
    Vector singleMean;
    TransitionMatrix trans{Matrix::Identity(1, 1)};
    if (spec.kind == FilterKind::GmPhd) {
        std::tie(singleR, singleMean) = single_noise_of(spec, measDim);
    } else {
        mixture = mixture_noise_of(spec, measDim);
        trans = build_transition_matrix(mixture);
        bank.L = mixture.L();
        bank.dim = stateDim;
    }

    series.measStreamHash = 14695981039346656037ull;
    for (const auto& frame : frames) {
        series.measStreamHash = hash_measurements(series.measStreamHash, frame.measurements);
        std::vector<StateEstimate> estimates;
        try {
            if (spec.kind == FilterKind::GmPhd) {
                auto step = gmphd_step(gmPrior, config.scenario.motion, config.spawn,
                                       config.birth, meas, singleR, singleMean,
                                       frame.measurements, config.scenario.clutter, spec.params);
                gmPrior = std::move(step.posterior);
                estimates = std::move(step.estimates);
            } else {
                auto step = imf_gmphd_step(bank, trans, mixture, config.scenario.motion,
                                           config.spawn, config.birth, meas,
                                           frame.measurements, config.scenario.clutter,
                                           spec.params);
                bank = std::move(step.bank);
                estimates = std::move(step.estimates);
            }
        } catch (const Error& e) {
            series.failed = true;
            series.failReason = e.what();
            break;
        }

        PointSet truthPos, estPos;
        bool finite = true;
        for (const auto& x : frame.truthStates) truthPos.push_back(meas.H * x);
        for (const auto& est : estimates) {
            if (!all_finite(est.mean)) finite = false;
            estPos.push_back(meas.H * est.mean);
        }
        const OspaResult o = finite ? ospa(truthPos, estPos, spec.ospa) : OspaResult{};
        if (!finite || !std::isfinite(o.distance)) {
            series.failed = true;
            series.failReason = "non-finite filter output";
            break;
        }
        series.ospa.push_back(o);
        series.estCount.push_back(static_cast<int>(estimates.size()));
        series.trueCount.push_back(static_cast<int>(frame.truthStates.size()));
        if (estimatesOut) estimatesOut->push_back(std::move(estimates));
    }
    series.wallSeconds = now_seconds() - t0;
    return series;
}

CampaignResult run_campaign(const ExperimentConfig& config) {
    config.validate();
    const double t0 = now_seconds();

    if (!config.outputDir.empty()) ensure_writable_dir(config.outputDir);

    const int nFilters = static_cast<int>(config.filters.size());
    const int nRuns = config.runs;
    const auto names = effective_filter_names(config.filters);

    CampaignResult result;
    result.filters.resize(nFilters);
    for (int f = 0; f < nFilters; ++f) {
        result.filters[f].name = names[f];
        result.filters[f].kind = config.filters[f].kind;
        result.filters[f].runs.resize(nRuns);
    }
    result.streamHashes.resize(nRuns);

    std::exception_ptr err;
    const int nWorkers = worker_count(config.workers);
#pragma omp parallel for schedule(dynamic) num_threads(nWorkers) if (nRuns > 1)
    for (int r = 0; r < nRuns; ++r) {
        try {
            ScenarioConfig sc = config.scenario;
            sc.seed = config.baseSeed + static_cast<std::uint64_t>(r);
            const auto frames = simulate(sc);
            for (int f = 0; f < nFilters; ++f)
                result.filters[f].runs[r] =
                    run_filter_on_frames(config.filters[f], config, frames);
            result.streamHashes[r] = result.filters[0].runs[r].measStreamHash;
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    for (int r = 0; r < nRuns; ++r)
        for (int f = 1; f < nFilters; ++f)
            if (result.filters[f].runs[r].measStreamHash != result.streamHashes[r])
                throw Error("run_campaign: filters consumed different measurement streams");

    const int steps = config.scenario.steps;
    for (auto& fc : result.filters) {
        fc.perRunTimeAveragedOspa.assign(nRuns, std::numeric_limits<double>::quiet_NaN());
        std::vector<int> validRuns;
        for (int r = 0; r < nRuns; ++r) {
            const auto& run = fc.runs[r];
            if (run.failed || static_cast<int>(run.ospa.size()) != steps) {
                ++fc.failedRuns;
                continue;
            }
            validRuns.push_back(r);
            double acc = 0.0;
            for (const auto& o : run.ospa) acc += o.distance;
            fc.perRunTimeAveragedOspa[r] = acc / steps;
        }
        if (validRuns.empty()) continue;
        const double n = static_cast<double>(validRuns.size());
        fc.meanOspa.assign(steps, 0.0);
        fc.meanLoc.assign(steps, 0.0);
        fc.meanCard.assign(steps, 0.0);
        fc.ciLo.assign(steps, 0.0);
        fc.ciHi.assign(steps, 0.0);
        for (int t = 0; t < steps; ++t) {
            for (int r : validRuns) {
                fc.meanOspa[t] += fc.runs[r].ospa[t].distance;
                fc.meanLoc[t] += fc.runs[r].ospa[t].localization;
                fc.meanCard[t] += fc.runs[r].ospa[t].cardinality;
            }
            fc.meanOspa[t] /= n;
            fc.meanLoc[t] /= n;
            fc.meanCard[t] /= n;
            double ss = 0.0;
            for (int r : validRuns) {
                const double e = fc.runs[r].ospa[t].distance - fc.meanOspa[t];
                ss += e * e;
            }
            const double half =
                validRuns.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
            fc.ciLo[t] = fc.meanOspa[t] - half;
            fc.ciHi[t] = fc.meanOspa[t] + half;
        }
        double acc = 0.0;
        for (double v : fc.meanOspa) acc += v;
        fc.timeAveragedMeanOspa = acc / steps;
    }

    result.totalWallSeconds = now_seconds() - t0;

    if (!config.outputDir.empty()) write_campaign_outputs(config.outputDir, config, result);
    return result;
}

ExperimentConfig builtin_experiment_config() {
    ExperimentConfig config;
    config.scenario = builtin_scenario();

    const Matrix birthCov = Vector{{100.0, 25.0, 100.0, 25.0}}.asDiagonal();
    GaussianMixture birth(4);
    for (const auto& t : config.scenario.targets) {
        Vector m(4);
        m << t.initialState[0], 0.0, t.initialState[2], 0.0;
        birth.add(GaussianComponent(0.05, std::move(m), birthCov));
    }
    config.birth = BirthModel{std::move(birth)};

    FilterSpec gm;
    gm.kind = FilterKind::GmPhd;
    gm.noise = config.scenario.noise;
    FilterSpec imf;
    imf.kind = FilterKind::ImfGmPhd;
    imf.noise = config.scenario.noise;
    config.filters = {std::move(gm), std::move(imf)};

    config.runs = 200;
    config.baseSeed = 1000;
    return config;
}

double paired_sign_test_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InputError("paired_sign_test_pvalue: length mismatch");
    long wins = 0, losses = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i]) || a[i] == b[i]) continue;
        (a[i] < b[i] ? wins : losses) += 1;
    }
    const long n = wins + losses;
    if (n == 0) return 1.0;
    const long k = std::min(wins, losses);
    const double log2n = static_cast<double>(n) * std::log(2.0);
    double tail = 0.0;
    for (long j = 0; j <= k; ++j) {
        const double logC = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
        tail += std::exp(logC - log2n);
    }
    return std::min(1.0, 2.0 * tail);
}

}  // namespace imfphd
