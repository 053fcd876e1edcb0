#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imfphd/imf.hpp"
#include "imfphd/ospa.hpp"
#include "imfphd/scenario.hpp"

namespace imfphd {

enum class FilterKind { GmPhd, ImfGmPhd };

// One filter under test.  The noise description can be given either as a
// mixture or as a single (R, mean); whichever is missing is derived from the
// other (moment matching for the single-model filter, a one-component
// mixture for the bank filter).
struct FilterSpec {
    std::string name;  // output file tag; defaults to the kind
    FilterKind kind = FilterKind::GmPhd;
    FilterParams params;
    NoiseMixtureModel noise;
    std::optional<Matrix> singleR;
    Vector singleNoiseMean;  // empty means zero
    OspaParams ospa;
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    BirthModel birth;
    SpawnModel spawn;
    std::vector<FilterSpec> filters;
    int runs = 1;
    std::uint64_t baseSeed = 1000;
    std::string outputDir;  // empty: keep everything in memory
    int workers = 0;        // 0: all hardware threads

    void validate() const;
};

struct RunSeries {
    bool failed = false;
    std::string failReason;
    std::vector<OspaResult> ospa;  // one entry per completed step
    std::vector<int> estCount;
    std::vector<int> trueCount;
    std::uint64_t measStreamHash = 0;
    double wallSeconds = 0.0;
};

struct FilterCampaign {
    std::string name;
    FilterKind kind = FilterKind::GmPhd;
    std::vector<RunSeries> runs;
    // Aggregates over non-failed runs; empty when every run failed.
    std::vector<double> meanOspa, meanLoc, meanCard, ciLo, ciHi;
    double timeAveragedMeanOspa = 0.0;
    std::vector<double> perRunTimeAveragedOspa;  // NaN for failed runs
    int failedRuns = 0;
};

struct CampaignResult {
    std::vector<FilterCampaign> filters;
    std::vector<std::uint64_t> streamHashes;  // per run, equal for every filter
    double totalWallSeconds = 0.0;
};

std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t h = 14695981039346656037ull);

// Resolved per-filter noise views.
std::pair<Matrix, Vector> single_noise_of(const FilterSpec& spec, int measDim);
NoiseMixtureModel mixture_noise_of(const FilterSpec& spec, int measDim);

// Output filename tags: explicit names, kind names for unnamed specs,
// "_2", "_3", ... appended to repeats.
std::vector<std::string> effective_filter_names(const std::vector<FilterSpec>& filters);

// One filter over one simulated run.  OSPA compares measured positions,
// H * state, of truth and estimates.  A thrown filter error or a non-finite
// value marks the run failed and keeps the completed prefix.  estimatesOut,
// when given, receives the per-step state estimates.
RunSeries run_filter_on_frames(const FilterSpec& spec, const ExperimentConfig& config,
                               const std::vector<ScenarioFrame>& frames,
                               std::vector<std::vector<StateEstimate>>* estimatesOut = nullptr);

// Monte Carlo campaign: run r uses scenario seed baseSeed + r, every filter
// sees the identical measurement stream.  Runs execute concurrently but all
// reported numbers are independent of the worker count.  With outputDir set,
// per-run series, per-filter aggregates, campaign.json, and timings.json are
// written; timings.json is the only output that is not deterministic.
CampaignResult run_campaign(const ExperimentConfig& config);

// The built-in benchmark campaign: the built-in scenario, both filters fed
// from the same noise mixture (the single-model filter gets its
// moment-matched collapse), 200 runs.
ExperimentConfig builtin_experiment_config();

// Exact two-sided paired sign test; ties and non-finite pairs are dropped.
double paired_sign_test_pvalue(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace imfphd
