#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "lightstat/errors.hpp"
#include "lightstat/experiment.hpp"

using namespace lightstat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("lightstat_test_" + tag + "_" +
                std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ExperimentConfig tiny_config(std::uint64_t seed) {
    ExperimentConfig config;
    config.label = "tiny";
    config.model = Poisson{12.0};
    config.chain = DetectorChain{0.24, 0.358};
    config.transmittances = {0.2, 0.6, 1.0};
    config.shots_per_run = 2000;
    config.master_seed = seed;
    return config;
}

}  // namespace

TEST_SUITE_BEGIN("cli_io");

TEST_CASE("config validation") {
    ExperimentConfig config = tiny_config(1);
    CHECK_NOTHROW(validate(config));

    ExperimentConfig no_grid = config;
    no_grid.transmittances.clear();
    CHECK_THROWS_AS(validate(no_grid), ConfigError);

    ExperimentConfig bad_t = config;
    bad_t.transmittances = {0.5, 1.5};
    CHECK_THROWS_AS(validate(bad_t), ConfigError);

    ExperimentConfig few_shots = config;
    few_shots.shots_per_run = 99;
    CHECK_THROWS_AS(validate(few_shots), ConfigError);

    ExperimentConfig bad_model = config;
    bad_model.model = Poisson{-1.0};
    CHECK_THROWS_AS(validate(bad_model), ConfigError);
}

TEST_CASE("config serialization round-trips") {
    const ExperimentConfig config = tiny_config(7);
    const ExperimentConfig back = config_from_json(to_json(config));
    CHECK(back.label == config.label);
    CHECK(back.transmittances == config.transmittances);
    CHECK(back.shots_per_run == config.shots_per_run);
    CHECK(back.master_seed == config.master_seed);
    CHECK(std::get<Poisson>(back.model).nbar == 12.0);
    CHECK(back.chain.alpha == 0.358);

    nlohmann::json j = to_json(config);
    j.erase("model");
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::object()), ConfigError);
}

TEST_CASE("preset catalog") {
    CHECK(preset_names().size() == 3);
    const ExperimentConfig coh = preset_config("coherent-pmt");
    CHECK(coh.chain.eta == 0.24);
    CHECK(coh.chain.alpha == 0.358);
    CHECK(coh.transmittances.size() == 10);
    CHECK(coh.shots_per_run == 100000);
    CHECK(std::holds_alternative<Poisson>(coh.model));

    const ExperimentConfig th = preset_config("thermal-pmt");
    CHECK(th.chain.alpha == 0.356);
    CHECK(std::get<MultimodeThermal>(th.model).mu == 5.2);

    const ExperimentConfig hpd = preset_config("pseudo-thermal-hpd");
    CHECK(hpd.chain.eta == 0.40);
    CHECK(hpd.chain.alpha == 0.187);
    CHECK(std::get<MultimodeThermal>(hpd.model).mu == 3.9);

    CHECK_THROWS_AS(preset_config("squeezed"), ConfigError);
}

TEST_CASE("simulate writes a loadable dataset") {
    TempDir tmp("simulate");
    const SimulatedDataset ds = cmd_simulate(tiny_config(11), tmp.path);
    CHECK(ds.run_files.size() == 3);
    CHECK(fs::exists(ds.manifest));
    for (const auto& f : ds.run_files) CHECK(fs::exists(f));

    const DatasetRuns loaded = load_runs(tmp.path);
    REQUIRE(loaded.runs.size() == 3);
    CHECK(loaded.files == std::vector<std::string>{"run_000.json", "run_001.json",
                                                   "run_002.json"});
    CHECK(loaded.runs[0].transmittance == 0.2);
    CHECK(loaded.runs[2].transmittance == 1.0);
    CHECK(loaded.runs[1].samples.size() == 2000);
}

TEST_CASE("simulate optionally writes csv") {
    TempDir tmp("simulate_csv");
    cmd_simulate(tiny_config(12), tmp.path, true);
    CHECK(fs::exists(tmp.path / "run_001.csv"));
    const std::string csv = slurp(tmp.path / "run_001.csv");
    CHECK(csv.rfind("shot,voltage\n", 0) == 0);
}

TEST_CASE("identical config and seed give byte-identical datasets") {
    TempDir a("det_a"), b("det_b");
    cmd_simulate(tiny_config(13), a.path);
    cmd_simulate(tiny_config(13), b.path);
    for (const char* name :
         {"run_000.json", "run_001.json", "run_002.json", "manifest.json"}) {
        CHECK(slurp(a.path / name) == slurp(b.path / name));
    }

    TempDir c("det_c");
    cmd_simulate(tiny_config(14), c.path);
    CHECK(slurp(a.path / "run_000.json") != slurp(c.path / "run_000.json"));
}

TEST_CASE("loading skips foreign files and requires runs") {
    TempDir tmp("load");
    cmd_simulate(tiny_config(15), tmp.path);
    std::ofstream(tmp.path / "notes.txt") << "scratch";
    std::ofstream(tmp.path / "run_xyz.json") << "{}";
    const DatasetRuns loaded = load_runs(tmp.path);
    CHECK(loaded.runs.size() == 3);

    TempDir empty("load_empty");
    CHECK_THROWS_AS(load_runs(empty.path), DataError);
    CHECK_THROWS_AS(load_runs(empty.path / "missing"), DataError);
}

TEST_CASE("calibration ignores the manifest chain block") {
    TempDir data("blind_data");
    cmd_simulate(tiny_config(16), data.path);

    TempDir out1("blind_out1");
    cmd_calibrate(data.path, {}, out1.path);
    const std::string before = slurp(out1.path / "calibration.json");

    // Corrupt the manifest's chain: a blind analysis cannot notice.
    nlohmann::json manifest =
        nlohmann::json::parse(slurp(data.path / "manifest.json"));
    manifest["chain"] = {{"eta", 0.9}, {"alpha", -99.0}};
    std::ofstream(data.path / "manifest.json") << manifest.dump(2);

    TempDir out2("blind_out2");
    cmd_calibrate(data.path, {}, out2.path);
    CHECK(slurp(out2.path / "calibration.json") == before);
    CHECK(fs::exists(out2.path / "fano_points.csv"));
}

TEST_CASE("reconstruct selectors and failure modes") {
    TempDir data("rec_data");
    cmd_simulate(tiny_config(17), data.path);
    TempDir cal("rec_cal");
    cmd_calibrate(data.path, {}, cal.path);
    const fs::path calib = cal.path / "calibration.json";

    TempDir out_all("rec_all");
    const auto all = cmd_reconstruct(data.path, calib, "all",
                                     FidelityStart::from_zero, out_all.path);
    CHECK(all.size() == 3);
    CHECK(fs::exists(out_all.path / "histogram_run_002.csv"));
    CHECK(fs::exists(out_all.path / "reconstruction.json"));

    TempDir out_one("rec_one");
    const auto one = cmd_reconstruct(data.path, calib, "1",
                                     FidelityStart::from_zero, out_one.path);
    REQUIRE(one.size() == 1);
    CHECK(one[0].transmittance == 0.6);

    TempDir out_t("rec_t");
    const auto by_t = cmd_reconstruct(data.path, calib, "t=0.2",
                                      FidelityStart::from_zero, out_t.path);
    REQUIRE(by_t.size() == 1);
    CHECK(by_t[0].run_index == 0);

    TempDir scratch("rec_err");
    CHECK_THROWS_AS(cmd_reconstruct(data.path, calib, "t=0.99",
                                    FidelityStart::from_zero, scratch.path),
                    DataError);
    CHECK_THROWS_AS(cmd_reconstruct(data.path, calib, "7",
                                    FidelityStart::from_zero, scratch.path),
                    DataError);
    CHECK_THROWS_AS(cmd_reconstruct(data.path, calib, "first",
                                    FidelityStart::from_zero, scratch.path),
                    ConfigError);
    CHECK_THROWS_AS(cmd_reconstruct(data.path, calib, "t=abc",
                                    FidelityStart::from_zero, scratch.path),
                    ConfigError);
    CHECK_THROWS_AS(cmd_reconstruct(data.path, cal.path / "nope.json", "all",
                                    FidelityStart::from_zero, scratch.path),
                    DataError);
}

TEST_CASE("a non-positive stored gain is refused") {
    TempDir data("refuse_data");
    cmd_simulate(tiny_config(18), data.path);
    TempDir cal("refuse_cal");
    cmd_calibrate(data.path, {}, cal.path);

    nlohmann::json j =
        nlohmann::json::parse(slurp(cal.path / "calibration.json"));
    j["alpha"] = -0.5;
    std::ofstream(cal.path / "calibration.json") << j.dump(2);

    TempDir out("refuse_out");
    CHECK_THROWS_AS(cmd_reconstruct(data.path, cal.path / "calibration.json",
                                    "all", FidelityStart::from_zero, out.path),
                    DataError);
}

TEST_CASE("reports render the key quantities") {
    TempDir data("report_data");
    cmd_simulate(tiny_config(19), data.path);
    TempDir cal("report_cal");
    const CalibrationResult res = cmd_calibrate(data.path, {}, cal.path);
    const std::string text = render_report(res);
    CHECK(text.find("gain alpha") != std::string::npos);
    CHECK(text.find("classification") != std::string::npos);

    TempDir out("report_rec");
    cmd_reconstruct(data.path, cal.path / "calibration.json", "all",
                    FidelityStart::from_zero, out.path);
    const nlohmann::json rec =
        nlohmann::json::parse(slurp(out.path / "reconstruction.json"));
    const std::string rtext = render_reconstruction(rec);
    CHECK(rtext.find("fidelity") != std::string::npos);
    CHECK(rec.at("runs").size() == 3);
}

TEST_SUITE_END();
