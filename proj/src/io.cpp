#include "imfphd/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "imfphd/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace imfphd {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json vec_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json mat_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Vector vec_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw InputError(std::string("config: ") + what + " must be an array");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(std::string("config: ") + what + " must be numeric");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix mat_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw InputError(std::string("config: ") + what + " must be a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw InputError(std::string("config: ") + what + " rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
    return m;
}

NoiseMixtureModel noise_from_json(const json& j) {
    if (!j.contains("components")) throw InputError("config: noise needs a components array");
    std::vector<NoiseComponent> comps;
    for (const auto& c : j.at("components"))
        comps.push_back({c.at("delta").get<double>(), vec_from_json(c.at("mu"), "noise mu"),
                         mat_from_json(c.at("R"), "noise R")});
    return NoiseMixtureModel(std::move(comps));
}

json noise_to_json(const NoiseMixtureModel& model) {
    json comps = json::array();
    for (const auto& c : model.components)
        comps.push_back({{"delta", c.delta}, {"mu", vec_to_json(c.mu)}, {"R", mat_to_json(c.R)}});
    return json{{"components", std::move(comps)}};
}

ScenarioConfig scenario_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "paper") return builtin_scenario();
        throw InputError("config: unknown scenario preset \"" + j.get<std::string>() + "\"");
    }
    ScenarioConfig c;
    c.steps = j.value("steps", 100);
    c.dt = j.value("dt", 1.0);
    c.seed = j.value("seed", std::uint64_t{1});
    c.noisePerAxis = j.value("noisePerAxis", false);
    c.pDetect = j.value("pDetect", 0.98);
    c.motion = MotionModel(mat_from_json(j.at("motion").at("F"), "motion F"),
                           mat_from_json(j.at("motion").at("Q"), "motion Q"));
    c.measurement = MeasurementModel(mat_from_json(j.at("measurement").at("H"), "measurement H"));
    c.noise = noise_from_json(j.at("noise"));
    const auto& cl = j.at("clutter");
    c.clutter = ClutterModel(cl.at("meanCount").get<double>(),
                             {vec_from_json(cl.at("region").at("lo"), "clutter lo"),
                              vec_from_json(cl.at("region").at("hi"), "clutter hi")});
    if (j.contains("targets")) {
        for (const auto& t : j.at("targets")) {
            TargetScript s;
            s.birthStep = t.at("birthStep").get<int>();
            s.deathStep = t.at("deathStep").get<int>();
            s.initialState = vec_from_json(t.at("initialState"), "target initialState");
            c.targets.push_back(std::move(s));
        }
    }
    return c;
}

json scenario_to_json(const ScenarioConfig& c) {
    json targets = json::array();
    for (const auto& t : c.targets)
        targets.push_back({{"birthStep", t.birthStep},
                           {"deathStep", t.deathStep},
                           {"initialState", vec_to_json(t.initialState)}});
    return json{
        {"steps", c.steps},
        {"dt", c.dt},
        {"seed", c.seed},
        {"targets", std::move(targets)},
        {"motion", {{"F", mat_to_json(c.motion.F)}, {"Q", mat_to_json(c.motion.Q)}}},
        {"measurement", {{"H", mat_to_json(c.measurement.H)}}},
        {"noise", noise_to_json(c.noise)},
        {"noisePerAxis", c.noisePerAxis},
        {"pDetect", c.pDetect},
        {"clutter",
         {{"meanCount", c.clutter.meanCount},
          {"region",
           {{"lo", vec_to_json(c.clutter.region.lo)}, {"hi", vec_to_json(c.clutter.region.hi)}}}}},
    };
}

FilterParams params_from_json(const json& j) {
    FilterParams p;
    p.pSurvive = j.value("pSurvive", p.pSurvive);
    p.pDetect = j.value("pDetect", p.pDetect);
    p.truncThreshold = j.value("truncThreshold", p.truncThreshold);
    p.mergeThreshold = j.value("mergeThreshold", p.mergeThreshold);
    p.maxComponents = j.value("maxComponents", p.maxComponents);
    p.extractThreshold = j.value("extractThreshold", p.extractThreshold);
    p.josephForm = j.value("josephForm", p.josephForm);
    return p;
}

json params_to_json(const FilterParams& p) {
    return json{{"pSurvive", p.pSurvive},
                {"pDetect", p.pDetect},
                {"truncThreshold", p.truncThreshold},
                {"mergeThreshold", p.mergeThreshold},
                {"maxComponents", p.maxComponents},
                {"extractThreshold", p.extractThreshold},
                {"josephForm", p.josephForm}};
}

FilterSpec filter_from_json(const json& j) {
    FilterSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gm-phd")
        spec.kind = FilterKind::GmPhd;
    else if (kind == "imf-gm-phd")
        spec.kind = FilterKind::ImfGmPhd;
    else
        throw InputError("config: unknown filter kind \"" + kind + "\"");
    spec.name = j.value("name", std::string{});
    if (j.contains("params")) spec.params = params_from_json(j.at("params"));
    if (j.contains("noise")) spec.noise = noise_from_json(j.at("noise"));
    if (j.contains("R")) spec.singleR = mat_from_json(j.at("R"), "filter R");
    if (j.contains("noiseMean")) spec.singleNoiseMean = vec_from_json(j.at("noiseMean"), "noiseMean");
    if (j.contains("ospa")) {
        spec.ospa.cutoff = j.at("ospa").value("cutoff", spec.ospa.cutoff);
        spec.ospa.order = j.at("ospa").value("order", spec.ospa.order);
    }
    return spec;
}

json filter_to_json(const FilterSpec& spec) {
    json j{{"kind", spec.kind == FilterKind::GmPhd ? "gm-phd" : "imf-gm-phd"},
           {"params", params_to_json(spec.params)},
           {"ospa", {{"cutoff", spec.ospa.cutoff}, {"order", spec.ospa.order}}}};
    if (!spec.name.empty()) j["name"] = spec.name;
    if (spec.noise.L() > 0) j["noise"] = noise_to_json(spec.noise);
    if (spec.singleR) j["R"] = mat_to_json(*spec.singleR);
    if (spec.singleNoiseMean.size() > 0) j["noiseMean"] = vec_to_json(spec.singleNoiseMean);
    return j;
}

json experiment_to_json(const ExperimentConfig& c) {
    json birth = json::array();
    for (const auto& b : c.birth.intensity.components)
        birth.push_back(
            {{"weight", b.weight}, {"mean", vec_to_json(b.mean)}, {"cov", mat_to_json(b.cov)}});
    json spawn = json::array();
    for (const auto& s : c.spawn.terms)
        spawn.push_back({{"weight", s.weight},
                         {"F", mat_to_json(s.F)},
                         {"d", vec_to_json(s.d)},
                         {"Q", mat_to_json(s.Q)}});
    json filters = json::array();
    for (const auto& f : c.filters) filters.push_back(filter_to_json(f));
    return json{{"scenario", scenario_to_json(c.scenario)},
                {"birth", {{"components", std::move(birth)}}},
                {"spawn", std::move(spawn)},
                {"filters", std::move(filters)},
                {"runs", c.runs},
                {"baseSeed", c.baseSeed}};
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& jsonText) {
    json j;
    try {
        j = json::parse(jsonText);
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    try {
        ExperimentConfig c;
        if (!j.contains("scenario")) throw InputError("config: missing scenario");
        c.scenario = scenario_from_json(j.at("scenario"));
        const int stateDim = c.scenario.motion.dim();
        GaussianMixture birth(stateDim);
        if (j.contains("birth")) {
            for (const auto& b : j.at("birth").at("components"))
                birth.add(GaussianComponent(b.at("weight").get<double>(),
                                            vec_from_json(b.at("mean"), "birth mean"),
                                            mat_from_json(b.at("cov"), "birth cov")));
        }
        c.birth = BirthModel{std::move(birth)};
        if (j.contains("spawn")) {
            for (const auto& s : j.at("spawn"))
                c.spawn.terms.emplace_back(s.at("weight").get<double>(),
                                           mat_from_json(s.at("F"), "spawn F"),
                                           vec_from_json(s.at("d"), "spawn d"),
                                           mat_from_json(s.at("Q"), "spawn Q"));
        }
        if (!j.contains("filters")) throw InputError("config: missing filters");
        for (const auto& f : j.at("filters")) c.filters.push_back(filter_from_json(f));
        c.runs = j.value("runs", 1);
        c.baseSeed = j.value("baseSeed", std::uint64_t{1000});
        c.outputDir = j.value("outputDir", std::string{});
        c.workers = j.value("workers", 0);
        return c;
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_text_file(path));
}

ScenarioConfig parse_scenario_config(const std::string& jsonText) {
    try {
        return scenario_from_json(json::parse(jsonText));
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

ScenarioConfig load_scenario_config(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        const json j = json::parse(text);
        return scenario_from_json(j.contains("scenario") ? j.at("scenario") : j);
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    if (in.bad()) throw IoError("cannot read file: " + path);
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << text;
    out.flush();
    if (!out.good()) throw IoError("write failed: " + path);
}

void ensure_writable_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    const fs::path probe = fs::path(dir) / ".write_probe";
    {
        std::ofstream out(probe, std::ios::binary);
        out << "probe";
        if (!out.good()) throw IoError("output directory not writable: " + dir);
    }
    fs::remove(probe, ec);
}

std::string scenario_csv(const std::vector<ScenarioFrame>& frames) {
    Eigen::Index width = 0;
    for (const auto& f : frames) {
        for (const auto& v : f.truthStates) width = std::max(width, v.size());
        for (const auto& v : f.measurements) width = std::max(width, v.size());
    }
    std::string out = "step,kind";
    for (Eigen::Index i = 0; i < width; ++i) out += ",v" + std::to_string(i);
    out += "\n";
    const auto row = [&](int step, const char* kind, const Vector& v) {
        out += std::to_string(step);
        out += ",";
        out += kind;
        for (Eigen::Index i = 0; i < width; ++i) {
            out += ",";
            if (i < v.size()) out += fmt(v[i]);
        }
        out += "\n";
    };
    for (const auto& f : frames) {
        for (const auto& v : f.truthStates) row(f.step, "truth", v);
        for (const auto& v : f.measurements) row(f.step, "meas", v);
    }
    return out;
}

std::string scenario_json(const ScenarioConfig& config, const std::vector<ScenarioFrame>& frames) {
    json jframes = json::array();
    for (const auto& f : frames) {
        json truth = json::array(), meas = json::array();
        for (const auto& v : f.truthStates) truth.push_back(vec_to_json(v));
        for (const auto& v : f.measurements) meas.push_back(vec_to_json(v));
        jframes.push_back(
            {{"step", f.step}, {"truth", std::move(truth)}, {"measurements", std::move(meas)}});
    }
    return json{{"scenario", scenario_to_json(config)}, {"frames", std::move(jframes)}}.dump(2) +
           "\n";
}

std::string run_csv(const RunSeries& series) {
    std::string out = "step,ospa,loc,card,estCount,trueCount\n";
    for (std::size_t t = 0; t < series.ospa.size(); ++t) {
        out += std::to_string(t + 1) + "," + fmt(series.ospa[t].distance) + "," +
               fmt(series.ospa[t].localization) + "," + fmt(series.ospa[t].cardinality) + "," +
               std::to_string(series.estCount[t]) + "," + std::to_string(series.trueCount[t]) +
               "\n";
    }
    return out;
}

std::string aggregate_csv(const FilterCampaign& fc) {
    std::string out = "step,mean_ospa,ci95_lo,ci95_hi,mean_loc,mean_card\n";
    for (std::size_t t = 0; t < fc.meanOspa.size(); ++t) {
        out += std::to_string(t + 1) + "," + fmt(fc.meanOspa[t]) + "," + fmt(fc.ciLo[t]) + "," +
               fmt(fc.ciHi[t]) + "," + fmt(fc.meanLoc[t]) + "," + fmt(fc.meanCard[t]) + "\n";
    }
    return out;
}

std::string ospa_csv(const std::vector<OspaResult>& series) {
    std::string out = "step,ospa,loc,card\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        out += std::to_string(t + 1) + "," + fmt(series[t].distance) + "," +
               fmt(series[t].localization) + "," + fmt(series[t].cardinality) + "\n";
    }
    return out;
}

std::string estimates_csv(const std::vector<std::vector<StateEstimate>>& perStep) {
    Eigen::Index width = 0;
    for (const auto& step : perStep)
        for (const auto& est : step) width = std::max(width, est.mean.size());
    std::string out = "step,estimate,weight";
    for (Eigen::Index i = 0; i < width; ++i) out += ",s" + std::to_string(i);
    out += "\n";
    for (std::size_t t = 0; t < perStep.size(); ++t) {
        for (std::size_t e = 0; e < perStep[t].size(); ++e) {
            out += std::to_string(t + 1) + "," + std::to_string(e) + "," +
                   fmt(perStep[t][e].weight);
            for (Eigen::Index i = 0; i < width; ++i) {
                out += ",";
                if (i < perStep[t][e].mean.size()) out += fmt(perStep[t][e].mean[i]);
            }
            out += "\n";
        }
    }
    return out;
}

std::string experiment_config_json(const ExperimentConfig& config) {
    return experiment_to_json(config).dump(2) + "\n";
}

std::string campaign_json(const ExperimentConfig& config, const CampaignResult& result) {
    json filters = json::array();
    const auto names = effective_filter_names(config.filters);
    for (std::size_t f = 0; f < result.filters.size(); ++f) {
        const auto& fc = result.filters[f];
        json perRun = json::array();
        for (double v : fc.perRunTimeAveragedOspa) perRun.push_back(v);
        filters.push_back({{"name", names[f]},
                           {"kind", fc.kind == FilterKind::GmPhd ? "gm-phd" : "imf-gm-phd"},
                           {"failedRuns", fc.failedRuns},
                           {"timeAveragedMeanOspa", fc.timeAveragedMeanOspa},
                           {"perRunTimeAveragedOspa", std::move(perRun)}});
    }
    json hashes = json::array();
    for (auto h : result.streamHashes) hashes.push_back(hash_hex(h));
    return json{{"config", experiment_to_json(config)},
                {"filters", std::move(filters)},
                {"measurementStreamHashes", std::move(hashes)}}
               .dump(2) +
           "\n";
}

std::string timings_json(const CampaignResult& result) {
    json filters = json::array();
    for (const auto& fc : result.filters) {
        json runSeconds = json::array();
        for (const auto& run : fc.runs) runSeconds.push_back(run.wallSeconds);
        filters.push_back({{"name", fc.name}, {"runWallSeconds", std::move(runSeconds)}});
    }
    return json{{"totalWallSeconds", result.totalWallSeconds}, {"filters", std::move(filters)}}
               .dump(2) +
           "\n";
}

std::string noise_model_json(const EmFitReport& report) {
    json j = noise_to_json(report.model);
    j["iterations"] = report.iterations;
    j["converged"] = report.converged;
    if (!report.logLikelihoodTrace.empty())
        j["logLikelihood"] = report.logLikelihoodTrace.back();
    return j.dump(2) + "\n";
}

std::vector<Vector> read_samples_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<Vector> samples;
    std::istringstream lines(text);
    std::string line;
    Eigen::Index cols = -1;
    bool first = true;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        std::istringstream cells(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
                    ++pos;
                if (pos != cell.size()) throw std::invalid_argument(cell);
                vals.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw InputError("samples: non-numeric row in " + path);
        }
        first = false;
        if (vals.empty()) continue;
        if (cols < 0) cols = static_cast<Eigen::Index>(vals.size());
        if (static_cast<Eigen::Index>(vals.size()) != cols)
            throw InputError("samples: ragged rows in " + path);
        Vector v(cols);
        for (Eigen::Index i = 0; i < cols; ++i) v[i] = vals[static_cast<std::size_t>(i)];
        samples.push_back(std::move(v));
    }
    return samples;
}

void write_campaign_outputs(const std::string& dir, const ExperimentConfig& config,
                            const CampaignResult& result) {
    const fs::path base(dir);
    const auto names = effective_filter_names(config.filters);
    for (std::size_t f = 0; f < result.filters.size(); ++f) {
        const auto& fc = result.filters[f];
        for (std::size_t r = 0; r < fc.runs.size(); ++r) {
            const std::string name =
                "run_" + std::to_string(r) + "_" + names[f] + ".csv";
            write_text_file((base / name).string(), run_csv(fc.runs[r]));
        }
        write_text_file((base / ("aggregate_" + names[f] + ".csv")).string(), aggregate_csv(fc));
    }
    write_text_file((base / "campaign.json").string(), campaign_json(config, result));
    write_text_file((base / "timings.json").string(), timings_json(result));
}

}  // namespace imfphd
