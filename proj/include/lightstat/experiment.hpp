#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lightstat/calibration.hpp"
#include "lightstat/detection.hpp"
#include "lightstat/photon_model.hpp"
#include "lightstat/reconstruction.hpp"

namespace lightstat {

inline constexpr std::uint64_t kDefaultMasterSeed = 123456789;

// Everything needed to produce one synthetic dataset: a source, a detector
// chain, and the attenuation grid to sweep.
struct ExperimentConfig {
    std::string label;
    PhotonNumberModel model = Poisson{1.0};
    DetectorChain chain;
    std::vector<double> transmittances;
    std::size_t shots_per_run = 100000;
    std::uint64_t master_seed = kDefaultMasterSeed;
};

// Throws ConfigError on an empty grid, out-of-range transmittance, or
// fewer than 100 shots per run.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Built-in configurations modeled on three bench experiments:
//   coherent-pmt        Poisson source, PMT chain (eta 0.24, alpha 0.358 V)
//   thermal-pmt         multimode thermal mu 5.2, PMT chain (alpha 0.356 V)
//   pseudo-thermal-hpd  multimode thermal mu 3.9, HPD chain (eta 0.40,
//                       alpha 0.187 V)
// Mean photon numbers are chosen so the mean voltage sweeps roughly 0-3 V
// across the grid t = 0.1..1.0.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct SimulatedDataset {
    std::filesystem::path manifest;
    std::vector<std::filesystem::path> run_files;
};

// Simulates one run per transmittance (ascending), writing run_NNN.json
// files plus manifest.json. Each run draws from an independent stream
// derived from the master seed and the run index, so output is
// byte-identical across reruns and independent of scheduling. `also_csv`
// adds a run_NNN.csv next to each JSON.
SimulatedDataset cmd_simulate(const ExperimentConfig& config,
                              const std::filesystem::path& out_dir,
                              bool also_csv = false);

struct DatasetRuns {
    std::vector<std::string> files;  // sorted run_NNN.json basenames
    std::vector<AttenuationRun> runs;
};

// Loads every run_NNN.json under the directory, sorted by filename. Reads
// only the run files; the manifest (which records the true chain) is never
// opened, so downstream analysis stays blind to the simulation parameters.
DatasetRuns load_runs(const std::filesystem::path& dataset_dir);

// Loads the dataset, calibrates, and writes calibration.json plus
// fano_points.csv into out_dir.
CalibrationResult cmd_calibrate(const std::filesystem::path& dataset_dir,
                                const CalibrationOptions& opts,
                                const std::filesystem::path& out_dir);

struct RunReconstruction {
    std::size_t run_index = 0;
    std::string run_file;
    double transmittance = 1.0;
    ReconstructionReport report;
};

// Rebins and scores the selected runs against the calibrated model.
// `selector` is "all", a zero-based run index, or "t=<value>". Writes one
// histogram_run_NNN.csv per selected run plus reconstruction.json.
std::vector<RunReconstruction> cmd_reconstruct(
    const std::filesystem::path& dataset_dir,
    const std::filesystem::path& calibration_path, const std::string& selector,
    FidelityStart start, const std::filesystem::path& out_dir);

// Human-readable summaries for the report subcommand.
std::string render_report(const CalibrationResult& calib);
std::string render_reconstruction(const nlohmann::json& reconstruction);

}  // namespace lightstat
