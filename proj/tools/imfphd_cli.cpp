#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "imfphd/campaign.hpp"
#include "imfphd/errors.hpp"
#include "imfphd/io.hpp"
#include "imfphd/noise_model.hpp"
#include "imfphd/scenario.hpp"

namespace fs = std::filesystem;
using namespace imfphd;

namespace {

ExperimentConfig load_config(const std::string& arg) {
    if (arg == "paper") return builtin_experiment_config();
    return load_experiment_config(arg);
}

ScenarioConfig load_scenario(const std::string& arg) {
    if (arg == "paper") return builtin_scenario();
    return load_scenario_config(arg);
}

void emit(const std::string& outDir, const std::string& filename, const std::string& text) {
    if (outDir.empty()) {
        std::cout << text;
    } else {
        write_text_file((fs::path(outDir) / filename).string(), text);
    }
}

int run_simulate(const std::string& configArg, bool seedSet, std::uint64_t seed,
                 const std::string& outDir, const std::string& format) {
    ScenarioConfig sc = load_scenario(configArg);
    if (seedSet) sc.seed = seed;
    const auto frames = simulate(sc);
    if (!outDir.empty()) ensure_writable_dir(outDir);
    if (format == "json")
        emit(outDir, "scenario.json", scenario_json(sc, frames));
    else
        emit(outDir, "scenario.csv", scenario_csv(frames));
    return 0;
}

int run_track(const std::string& configArg, bool seedSet, std::uint64_t seed,
              const std::string& outDir, int workers) {
    ExperimentConfig config = load_config(configArg);
    if (seedSet) config.baseSeed = seed;
    if (workers >= 0) config.workers = workers;
    config.validate();
    if (!outDir.empty()) ensure_writable_dir(outDir);

    ScenarioConfig sc = config.scenario;
    sc.seed = config.baseSeed;
    const auto frames = simulate(sc);
    const auto names = effective_filter_names(config.filters);

    bool anyFailed = false;
    for (std::size_t f = 0; f < config.filters.size(); ++f) {
        std::vector<std::vector<StateEstimate>> estimates;
        const RunSeries series =
            run_filter_on_frames(config.filters[f], config, frames, &estimates);
        if (series.failed) {
            std::cerr << names[f] << ": run failed: " << series.failReason << "\n";
            anyFailed = true;
        }
        if (outDir.empty() && f > 0) std::cout << "\n";
        if (outDir.empty()) std::cout << "# filter: " << names[f] << "\n";
        emit(outDir, "track_" + names[f] + "_ospa.csv", ospa_csv(series.ospa));
        if (!outDir.empty())
            emit(outDir, "track_" + names[f] + "_estimates.csv", estimates_csv(estimates));
    }
    if (anyFailed) throw Error("track: a filter run failed");
    return 0;
}

int run_campaign_cmd(const std::string& configArg, bool seedSet, std::uint64_t seed, int runs,
                     const std::string& outDir, int workers) {
    ExperimentConfig config = load_config(configArg);
    if (seedSet) config.baseSeed = seed;
    if (runs > 0) config.runs = runs;
    if (!outDir.empty()) config.outputDir = outDir;
    if (workers >= 0) config.workers = workers;

    const CampaignResult result = run_campaign(config);
    for (const auto& fc : result.filters) {
        std::printf("%-24s time-averaged mean OSPA %.6f  (failed runs: %d/%d)\n",
                    fc.name.c_str(), fc.timeAveragedMeanOspa, fc.failedRuns, config.runs);
    }
    std::printf("total wall time %.2f s\n", result.totalWallSeconds);
    if (!config.outputDir.empty())
        std::printf("outputs written to %s\n", config.outputDir.c_str());
    return 0;
}

int run_fit_noise(const std::string& samplesPath, int components, std::uint64_t seed, int maxIter,
                  double tol, const std::string& outDir) {
    const auto samples = read_samples_csv(samplesPath);
    const EmFitReport report = em_fit(samples, components, seed, maxIter, tol);
    if (!outDir.empty()) ensure_writable_dir(outDir);
    emit(outDir, "noise_model.json", noise_model_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-mixture PHD multi-target tracking experiments"};
    app.require_subcommand(1);

    std::string configArg = "paper";
    std::uint64_t seed = 0;
    bool seedSet = false;
    int runs = 0;
    std::string outDir;
    std::string format = "csv";
    int workers = -1;

    auto addSeed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seedSet = true; });
    };

    auto* sim = app.add_subcommand("simulate", "generate a scenario and emit its frames");
    sim->add_option("--config", configArg, "config file path, or \"paper\" for the built-in");
    addSeed(sim);
    sim->add_option("--out", outDir, "output directory (default: stdout)");
    sim->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* track = app.add_subcommand("track", "single run of every configured filter");
    track->add_option("--config", configArg, "config file path, or \"paper\"");
    addSeed(track);
    track->add_option("--out", outDir, "output directory (default: stdout)");
    track->add_option("--workers", workers, "worker threads (0 = all cores)");

    auto* camp = app.add_subcommand("campaign", "Monte Carlo campaign over all filters");
    camp->add_option("--config", configArg, "config file path, or \"paper\"");
    addSeed(camp);
    camp->add_option("--runs", runs, "override the configured run count");
    camp->add_option("--out", outDir, "override the configured output directory");
    camp->add_option("--workers", workers, "worker threads (0 = all cores)");

    auto* fit = app.add_subcommand("fit-noise", "fit a noise mixture to residual samples");
    std::string samplesPath;
    int components = 2;
    int maxIter = 500;
    double tol = 1e-6;
    std::uint64_t fitSeed = 1;
    fit->add_option("--samples", samplesPath, "CSV of residual vectors, one row per sample")
        ->required();
    fit->add_option("--components", components, "mixture component count");
    fit->add_option("--seed", fitSeed, "seeding RNG");
    fit->add_option("--max-iter", maxIter, "iteration cap");
    fit->add_option("--tol", tol, "log-likelihood convergence tolerance");
    fit->add_option("--out", outDir, "output directory (default: stdout)");

    auto* paper = app.add_subcommand("paper-experiment",
                                     "the built-in benchmark campaign (200 runs, both filters)");
    addSeed(paper);
    paper->add_option("--runs", runs, "override the run count");
    paper->add_option("--out", outDir, "output directory");
    paper->add_option("--workers", workers, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return run_simulate(configArg, seedSet, seed, outDir, format);
        if (track->parsed()) return run_track(configArg, seedSet, seed, outDir, workers);
        if (camp->parsed())
            return run_campaign_cmd(configArg, seedSet, seed, runs, outDir, workers);
        if (fit->parsed())
            return run_fit_noise(samplesPath, components, fitSeed, maxIter, tol, outDir);
        if (paper->parsed())
            return run_campaign_cmd("paper", seedSet, seed, runs, outDir, workers);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
