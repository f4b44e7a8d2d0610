#include "lightstat/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>

#include "lightstat/errors.hpp"
#include "lightstat/estimation.hpp"
#include "lightstat/random.hpp"

namespace fs = std::filesystem;

namespace lightstat {

void validate(const ExperimentConfig& config) {
    if (config.transmittances.empty()) {
        throw ConfigError("config needs at least one transmittance");
    }
    for (double t : config.transmittances) {
        if (!(t > 0.0) || t > 1.0 || !std::isfinite(t)) {
            throw ConfigError("transmittance " + std::to_string(t) +
                              " is outside (0, 1]");
        }
    }
    if (config.shots_per_run < 100) {
        throw ConfigError("shots_per_run must be at least 100, got " +
                          std::to_string(config.shots_per_run));
    }
    try {
        validate(config.model);
        validate(config.chain);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
}

nlohmann::json to_json(const ExperimentConfig& config) {
    return nlohmann::json{
        {"label", config.label},
        {"model", to_json(config.model)},
        {"chain", to_json(config.chain)},
        {"transmittances", config.transmittances},
        {"shots_per_run", config.shots_per_run},
        {"master_seed", config.master_seed},
    };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    try {
        config.label = j.value("label", std::string{});
        config.model = model_from_json(j.at("model"));
        config.chain = chain_from_json(j.at("chain"));
        config.transmittances =
            j.at("transmittances").get<std::vector<double>>();
        config.shots_per_run =
            j.value("shots_per_run", std::size_t{100000});
        config.master_seed = j.value("master_seed", kDefaultMasterSeed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") +
                          e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    validate(config);
    return config;
}

namespace {

std::vector<double> default_grid() {
    std::vector<double> t;
    for (int i = 1; i <= 10; ++i) t.push_back(i / 10.0);
    return t;
}

}  // namespace

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig config;
    config.transmittances = default_grid();
    config.label = name;
    if (name == "coherent-pmt") {
        config.model = Poisson{20.0};
        config.chain = DetectorChain{0.24, 0.358, 0.0, 0.0};
    } else if (name == "thermal-pmt") {
        config.model = MultimodeThermal{30.0, 5.2};
        config.chain = DetectorChain{0.24, 0.356, 0.0, 0.0};
    } else if (name == "pseudo-thermal-hpd") {
        config.model = MultimodeThermal{35.0, 3.9};
        config.chain = DetectorChain{0.40, 0.187, 0.0, 0.0};
    } else {
        throw ConfigError("unknown preset \"" + name +
                          "\" (expected coherent-pmt, thermal-pmt, or "
                          "pseudo-thermal-hpd)");
    }
    return config;
}

std::vector<std::string> preset_names() {
    return {"coherent-pmt", "thermal-pmt", "pseudo-thermal-hpd"};
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw ConfigError("short write to " + path.string());
    }
}

std::string run_basename(std::size_t index, const char* ext) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "run_%03zu.%s", index, ext);
    return buf;
}

}  // namespace

SimulatedDataset cmd_simulate(const ExperimentConfig& config,
                              const fs::path& out_dir, bool also_csv) {
    validate(config);

    std::vector<double> grid = config.transmittances;
    std::sort(grid.begin(), grid.end());

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw ConfigError("cannot create output directory " +
                          out_dir.string());
    }

    // One future per transmittance; each run owns a stream derived from
    // (master_seed, index), so results do not depend on scheduling.
    std::vector<std::future<AttenuationRun>> futures;
    futures.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
            RandomStream rng(derive_subseed(config.master_seed, i));
            AttenuationRun run = simulate_run(config.model, config.chain,
                                              grid[i], config.shots_per_run,
                                              rng);
            run.label = config.label + " t=" + std::to_string(grid[i]);
            return run;
        }));
    }

    SimulatedDataset dataset;
    nlohmann::json manifest_runs = nlohmann::json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const AttenuationRun run = futures[i].get();
        const std::string base = run_basename(i, "json");
        const fs::path path = out_dir / base;
        write_text_file(path, to_json(run).dump() + "\n");
        if (also_csv) {
            std::ostringstream csv;
            write_run_csv(run, csv);
            write_text_file(out_dir / run_basename(i, "csv"), csv.str());
        }
        manifest_runs.push_back({
            {"file", base},
            {"transmittance", grid[i]},
            {"seed", derive_subseed(config.master_seed, i)},
        });
        dataset.run_files.push_back(path);
    }

    nlohmann::json manifest{
        {"label", config.label},
        {"model", to_json(config.model)},
        {"chain", to_json(config.chain)},
        {"master_seed", config.master_seed},
        {"shots_per_run", config.shots_per_run},
        {"runs", std::move(manifest_runs)},
    };
    dataset.manifest = out_dir / "manifest.json";
    write_text_file(dataset.manifest, manifest.dump(2) + "\n");
    return dataset;
}

DatasetRuns load_runs(const fs::path& dataset_dir) {
    if (!fs::is_directory(dataset_dir)) {
        throw DataError("dataset directory " + dataset_dir.string() +
                        " does not exist");
    }
    static const std::regex kRunFile(R"(run_\d+\.json)");
    DatasetRuns dataset;
    for (const auto& entry : fs::directory_iterator(dataset_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, kRunFile)) {
            dataset.files.push_back(name);
        }
    }
    if (dataset.files.empty()) {
        throw DataError("no run_NNN.json files under " +
                        dataset_dir.string());
    }
    std::sort(dataset.files.begin(), dataset.files.end());
    dataset.runs.reserve(dataset.files.size());
    for (const std::string& name : dataset.files) {
        std::ifstream in(dataset_dir / name, std::ios::binary);
        if (!in) {
            throw DataError("cannot read " + (dataset_dir / name).string());
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(name + " is not valid JSON: " + e.what());
        }
        dataset.runs.push_back(run_from_json(j));
    }
    return dataset;
}

CalibrationResult cmd_calibrate(const fs::path& dataset_dir,
                                const CalibrationOptions& opts,
                                const fs::path& out_dir) {
    const DatasetRuns dataset = load_runs(dataset_dir);
    const CalibrationResult result = calibrate(dataset.runs, opts);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw ConfigError("cannot create output directory " +
                          out_dir.string());
    }
    write_text_file(out_dir / "calibration.json", to_json(result).dump(2) + "\n");
    std::ostringstream csv;
    write_fano_csv(result.points, csv);
    write_text_file(out_dir / "fano_points.csv", csv.str());
    return result;
}

namespace {

std::vector<std::size_t> select_runs(const DatasetRuns& dataset,
                                     const std::string& selector) {
    std::vector<std::size_t> picked;
    if (selector == "all") {
        for (std::size_t i = 0; i < dataset.runs.size(); ++i) {
            picked.push_back(i);
        }
        return picked;
    }
    if (selector.rfind("t=", 0) == 0) {
        double target = 0.0;
        std::size_t consumed = 0;
        try {
            target = std::stod(selector.substr(2), &consumed);
        } catch (const std::exception&) {
            throw ConfigError("malformed run selector \"" + selector + "\"");
        }
        if (consumed != selector.size() - 2) {
            throw ConfigError("malformed run selector \"" + selector + "\"");
        }
        for (std::size_t i = 0; i < dataset.runs.size(); ++i) {
            if (std::abs(dataset.runs[i].transmittance - target) < 1e-9) {
                picked.push_back(i);
            }
        }
        if (picked.empty()) {
            throw DataError("no run with transmittance " +
                            std::to_string(target));
        }
        return picked;
    }
    std::size_t consumed = 0;
    long index = -1;
    try {
        index = std::stol(selector, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("malformed run selector \"" + selector +
                          "\" (expected all, an index, or t=<value>)");
    }
    if (consumed != selector.size() || index < 0) {
        throw ConfigError("malformed run selector \"" + selector +
                          "\" (expected all, an index, or t=<value>)");
    }
    if (static_cast<std::size_t>(index) >= dataset.runs.size()) {
        throw DataError("run index " + std::to_string(index) +
                        " out of range; dataset has " +
                        std::to_string(dataset.runs.size()) + " runs");
    }
    picked.push_back(static_cast<std::size_t>(index));
    return picked;
}

}  // namespace

std::vector<RunReconstruction> cmd_reconstruct(
    const fs::path& dataset_dir, const fs::path& calibration_path,
    const std::string& selector, FidelityStart start,
    const fs::path& out_dir) {
    std::ifstream calin(calibration_path, std::ios::binary);
    if (!calin) {
        throw DataError("cannot read calibration file " +
                        calibration_path.string());
    }
    nlohmann::json calj;
    try {
        calin >> calj;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("calibration file is not valid JSON: " +
                        std::string(e.what()));
    }
    CalibrationResult calib;
    try {
        calib = calibration_from_json(calj);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("calibration file is missing fields: " +
                        std::string(e.what()));
    }
    if (!(calib.alpha > 0.0)) {
        throw DataError("calibration file carries a non-positive gain; "
                        "refusing to rebin with it");
    }

    const DatasetRuns dataset = load_runs(dataset_dir);
    const std::vector<std::size_t> picked = select_runs(dataset, selector);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw ConfigError("cannot create output directory " +
                          out_dir.string());
    }

    std::vector<RunReconstruction> results;
    nlohmann::json summary_runs = nlohmann::json::array();
    for (std::size_t i : picked) {
        RunReconstruction r;
        r.run_index = i;
        r.run_file = dataset.files[i];
        r.transmittance = dataset.runs[i].transmittance;
        r.report = reconstruct_and_score(dataset.runs[i], calib, std::nullopt,
                                         start);

        char buf[48];
        std::snprintf(buf, sizeof(buf), "histogram_run_%03zu.csv", i);
        std::ostringstream csv;
        write_histogram_csv(r.report.histogram, r.report.theory, csv);
        write_text_file(out_dir / buf, csv.str());

        summary_runs.push_back({
            {"run_file", r.run_file},
            {"transmittance", r.transmittance},
            {"fidelity", r.report.fidelity_value},
            {"mean_electrons", r.report.mean_electrons},
            {"clamped_fraction", r.report.histogram.clamped_fraction()},
            {"theory", to_json(r.report.theory_model)},
            {"histogram_csv", std::string(buf)},
        });
        results.push_back(std::move(r));
    }

    nlohmann::json summary{
        {"calibration", calibration_path.string()},
        {"alpha", calib.alpha},
        {"classification", to_string(calib.classification)},
        {"fidelity_from", start == FidelityStart::from_one ? 1 : 0},
        {"runs", std::move(summary_runs)},
    };
    write_text_file(out_dir / "reconstruction.json", summary.dump(2) + "\n");
    return results;
}

std::string render_report(const CalibrationResult& calib) {
    std::ostringstream out;
    char buf[256];
    out << "Fano-line calibration\n";
    out << "---------------------\n";
    std::snprintf(buf, sizeof(buf), "points:          %zu runs\n",
                  calib.points.size());
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "weighted fit:    F_v = (%.6g +/- %.2g) * vbar + (%.6g +/- "
                  "%.2g) V\n",
                  calib.fit.slope, calib.fit.se_slope, calib.fit.intercept,
                  calib.fit.se_intercept);
    out << buf;
    std::snprintf(buf, sizeof(buf), "                 chi2 = %.4g, dof = %d\n",
                  calib.fit.chi2, calib.fit.dof);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "OLS diagnostic:  slope %.6g +/- %.2g, intercept %.6g +/- "
                  "%.2g V\n",
                  calib.fit_ols.slope, calib.fit_ols.se_slope,
                  calib.fit_ols.intercept, calib.fit_ols.se_intercept);
    out << buf;
    out << "classification:  " << to_string(calib.classification) << "\n";
    std::snprintf(buf, sizeof(buf),
                  "gain alpha:      %.6g +/- %.2g V per electron\n",
                  calib.alpha, calib.se_alpha);
    out << buf;
    if (calib.mu) {
        std::snprintf(buf, sizeof(buf), "modes mu:        %.6g +/- %.2g\n",
                      *calib.mu, *calib.se_mu);
        out << buf;
    }
    if (calib.alpha_constrained) {
        std::snprintf(buf, sizeof(buf),
                      "flat-line alpha: %.6g +/- %.2g V (coherent constraint)\n",
                      *calib.alpha_constrained, *calib.se_alpha_constrained);
        out << buf;
    }
    if (calib.hint_inconsistent) {
        out << "warning:         model hint \"" << to_string(calib.hint)
            << "\" is inconsistent with the fitted slope\n";
    }
    return out.str();
}

std::string render_reconstruction(const nlohmann::json& reconstruction) {
    std::ostringstream out;
    out << "Reconstruction summary\n";
    out << "----------------------\n";
    out << "classification:  "
        << reconstruction.value("classification", std::string("?")) << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "gain alpha:      %.6g V\n",
                  reconstruction.value("alpha", 0.0));
    out << buf;
    for (const auto& run : reconstruction.value("runs", nlohmann::json::array())) {
        std::snprintf(buf, sizeof(buf),
                      "  %s  t=%.3g  fidelity=%.6f  mean=%.4g electrons\n",
                      run.value("run_file", std::string("?")).c_str(),
                      run.value("transmittance", 0.0),
                      run.value("fidelity", 0.0),
                      run.value("mean_electrons", 0.0));
        out << buf;
    }
    return out.str();
}

}  // namespace lightstat
