#pragma once

#include <string>
#include <vector>

#include "imfphd/campaign.hpp"
#include "imfphd/noise_model.hpp"
#include "imfphd/scenario.hpp"

namespace imfphd {

// Config documents are JSON.  An experiment document has at least "scenario"
// and "filters"; a bare scenario document is the "scenario" object on its
// own.  "scenario" may also be the literal string "paper", selecting the
// built-in benchmark scenario.
ExperimentConfig parse_experiment_config(const std::string& jsonText);
ExperimentConfig load_experiment_config(const std::string& path);
ScenarioConfig parse_scenario_config(const std::string& jsonText);
// Accepts either document shape: the "scenario" member when present,
// otherwise the whole document.
ScenarioConfig load_scenario_config(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Creates the directory (parents included) and verifies it accepts writes.
void ensure_writable_dir(const std::string& dir);

// All emitted doubles use %.17g (round-trip exact), so equal inputs give
// byte-equal files.
std::string scenario_csv(const std::vector<ScenarioFrame>& frames);
std::string scenario_json(const ScenarioConfig& config, const std::vector<ScenarioFrame>& frames);
std::string run_csv(const RunSeries& series);
std::string aggregate_csv(const FilterCampaign& fc);
std::string ospa_csv(const std::vector<OspaResult>& series);
std::string estimates_csv(const std::vector<std::vector<StateEstimate>>& perStep);

// Experiment echo: everything that identifies the experiment; outputDir and
// workers are execution environment and stay out so reruns in different
// places produce identical bytes.
std::string experiment_config_json(const ExperimentConfig& config);
std::string campaign_json(const ExperimentConfig& config, const CampaignResult& result);
std::string timings_json(const CampaignResult& result);  // the one nondeterministic output
std::string noise_model_json(const EmFitReport& report);

// CSV of sample vectors, one row per sample; a non-numeric first line is
// treated as a header and skipped.
std::vector<Vector> read_samples_csv(const std::string& path);

// run_<r>_<name>.csv per run, aggregate_<name>.csv per filter, campaign.json,
// timings.json.
void write_campaign_outputs(const std::string& dir, const ExperimentConfig& config,
                            const CampaignResult& result);

}  // namespace imfphd
