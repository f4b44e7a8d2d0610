#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lightstat/estimation.hpp"
#include <json.hpp>

namespace lightstat {

// Photon statistics class inferred from the slope of the Fano line.
enum class LightClass { poissonian, super_poissonian, sub_poissonian };

// Prior knowledge about the source supplied by the operator. `automatic`
// lets the slope test decide.
enum class ModelHint { automatic, coherent, thermal };

std::string to_string(LightClass c);
std::string to_string(ModelHint h);
LightClass light_class_from_string(const std::string& s);
ModelHint model_hint_from_string(const std::string& s);

// Straight-line fit y = slope * x + intercept with per-point errors.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se_slope = 0.0;
    double se_intercept = 0.0;
    double cov_slope_intercept = 0.0;
    double chi2 = 0.0;
    int dof = 0;
};

// Weighted least squares of fv against vbar, weights 1/se_fv^2. Needs at
// least 3 points with strictly positive errors and non-degenerate vbar
// spread.
LineFit fit_fano_line(std::span<const RunFano> points);

// Ordinary least squares on the same data, parameter errors scaled by the
// residual variance. Diagnostic alternative to the weighted fit.
LineFit fit_fano_line_ols(std::span<const RunFano> points);

// Slope consistent with zero at `z_threshold` standard errors means
// Poissonian light; otherwise the sign decides.
LightClass classify(double slope, double se_slope, double z_threshold = 2.0);

struct CalibrationOptions {
    ModelHint hint = ModelHint::automatic;
    double z_threshold = 2.0;
    int bootstrap_rounds = 200;
};

struct CalibrationResult {
    LineFit fit;      // weighted
    LineFit fit_ols;  // unweighted diagnostic
    LightClass classification = LightClass::poissonian;
    ModelHint hint = ModelHint::automatic;
    double alpha = 0.0;     // gain estimate, volts per electron
    double se_alpha = 0.0;
    std::optional<double> mu;     // mode number, thermal sources only
    std::optional<double> se_mu;
    std::optional<double> alpha_constrained;     // coherent hint: weighted
    std::optional<double> se_alpha_constrained;  // mean of the Fano factors
    bool hint_inconsistent = false;
    std::vector<RunFano> points;
};

// Full self-calibration from a set of attenuation runs: computes Fano
// points, fits the line, classifies the source, and reads off the gain
// (intercept) and, for super-Poissonian light, the mode number (1/slope).
CalibrationResult calibrate(std::span<const AttenuationRun> runs,
                            const CalibrationOptions& opts = {});

nlohmann::json to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const nlohmann::json& j);

}  // namespace lightstat
