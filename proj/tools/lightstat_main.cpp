#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lightstat/calibration.hpp"
#include "lightstat/errors.hpp"
#include "lightstat/experiment.hpp"
#include "lightstat/reconstruction.hpp"

namespace {

// 0 success, 2 config error, 3 data error, 4 fit failure.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitFit = 4;

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw lightstat::ConfigError("cannot read " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw lightstat::ConfigError(path + " is not valid JSON: " + e.what());
    }
    return j;
}

struct SimulateArgs {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> shots;
    std::string out_dir = "dataset";
    bool csv = false;
};

int run_simulate(const SimulateArgs& args) {
    lightstat::ExperimentConfig config;
    if (!args.config_path.empty()) {
        config = lightstat::config_from_json(read_json_file(args.config_path));
    } else if (!args.preset.empty()) {
        config = lightstat::preset_config(args.preset);
    } else {
        throw lightstat::ConfigError(
            "simulate needs either --config or --preset");
    }
    if (args.seed) config.master_seed = *args.seed;
    if (args.shots) config.shots_per_run = *args.shots;

    const lightstat::SimulatedDataset dataset =
        lightstat::cmd_simulate(config, args.out_dir, args.csv);
    std::cout << "wrote " << dataset.run_files.size() << " runs and "
              << dataset.manifest.string() << "\n";
    return 0;
}

struct CalibrateArgs {
    std::string data_dir;
    std::string hint = "auto";
    double z_threshold = 2.0;
    int bootstrap = 200;
    std::string out_dir = ".";
};

int run_calibrate(const CalibrateArgs& args) {
    lightstat::CalibrationOptions opts;
    opts.hint = lightstat::model_hint_from_string(args.hint);
    if (!(args.z_threshold > 0.0)) {
        throw lightstat::ConfigError("--z-threshold must be positive");
    }
    opts.z_threshold = args.z_threshold;
    if (args.bootstrap < 2) {
        throw lightstat::ConfigError("--bootstrap must be at least 2");
    }
    opts.bootstrap_rounds = args.bootstrap;

    const lightstat::CalibrationResult result =
        lightstat::cmd_calibrate(args.data_dir, opts, args.out_dir);
    std::cout << lightstat::render_report(result);
    return 0;
}

struct ReconstructArgs {
    std::string data_dir;
    std::string calib_path;
    std::string selector = "all";
    int fidelity_from = 0;
    std::string out_dir = ".";
};

int run_reconstruct(const ReconstructArgs& args) {
    const lightstat::FidelityStart start =
        args.fidelity_from == 1 ? lightstat::FidelityStart::from_one
                                : lightstat::FidelityStart::from_zero;
    const auto results = lightstat::cmd_reconstruct(
        args.data_dir, args.calib_path, args.selector, start, args.out_dir);
    for (const auto& r : results) {
        std::cout << r.run_file << "  t=" << r.transmittance << "  fidelity="
                  << r.report.fidelity_value << "\n";
    }
    return 0;
}

struct ReportArgs {
    std::string calib_path;
    std::string reconstruction_path;
};

int run_report(const ReportArgs& args) {
    const lightstat::CalibrationResult calib =
        lightstat::calibration_from_json(read_json_file(args.calib_path));
    std::cout << lightstat::render_report(calib);
    if (!args.reconstruction_path.empty()) {
        std::cout << "\n"
                  << lightstat::render_reconstruction(
                         read_json_file(args.reconstruction_path));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Photodetection-chain simulator and self-consistent gain calibration"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate =
        app.add_subcommand("simulate", "Generate a synthetic dataset");
    simulate->add_option("--config", sim.config_path,
                         "Experiment config JSON");
    simulate->add_option("--preset", sim.preset,
                         "Built-in config: coherent-pmt, thermal-pmt, "
                         "pseudo-thermal-hpd");
    simulate->add_option("--seed", sim.seed, "Master seed override");
    simulate->add_option("--shots", sim.shots, "Shots per run override");
    simulate->add_option("--out", sim.out_dir, "Output directory");
    simulate->add_flag("--csv", sim.csv, "Also write per-run CSV files");

    CalibrateArgs cal;
    CLI::App* calibrate = app.add_subcommand(
        "calibrate", "Fit the Fano line on a dataset and extract the gain");
    calibrate->add_option("--data", cal.data_dir, "Dataset directory")
        ->required();
    calibrate->add_option("--model-hint", cal.hint,
                          "auto, coherent, or thermal");
    calibrate->add_option("--z-threshold", cal.z_threshold,
                          "Slope significance threshold in SE units");
    calibrate->add_option("--bootstrap", cal.bootstrap,
                          "Bootstrap rounds per Fano point");
    calibrate->add_option("--out", cal.out_dir, "Output directory");

    ReconstructArgs rec;
    CLI::App* reconstruct = app.add_subcommand(
        "reconstruct", "Rebin runs into electron histograms and score them");
    reconstruct->add_option("--data", rec.data_dir, "Dataset directory")
        ->required();
    reconstruct->add_option("--calib", rec.calib_path, "calibration.json path")
        ->required();
    reconstruct->add_option("--run", rec.selector,
                            "Run selector: all, an index, or t=<value>");
    reconstruct
        ->add_option("--fidelity-from", rec.fidelity_from,
                     "First histogram bin in the fidelity sum (0 or 1)")
        ->check(CLI::IsMember({0, 1}));
    reconstruct->add_option("--out", rec.out_dir, "Output directory");

    ReportArgs rep;
    CLI::App* report =
        app.add_subcommand("report", "Render saved results as text");
    report->add_option("--calib", rep.calib_path, "calibration.json path")
        ->required();
    report->add_option("--reconstruction", rep.reconstruction_path,
                       "reconstruction.json path");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) return run_simulate(sim);
        if (calibrate->parsed()) return run_calibrate(cal);
        if (reconstruct->parsed()) return run_reconstruct(rec);
        if (report->parsed()) return run_report(rep);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    } catch (const lightstat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const lightstat::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const lightstat::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const lightstat::FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
