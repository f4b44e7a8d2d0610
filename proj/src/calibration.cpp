#include "lightstat/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lightstat/errors.hpp"

namespace lightstat {

namespace {

struct XY {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;  // 1 / se^2
};

XY extract(std::span<const RunFano> points, bool weighted) {
    if (points.size() < 3) {
        throw InsufficientDataError(
            "line fit needs at least 3 Fano points, got " +
            std::to_string(points.size()));
    }
    XY d;
    d.x.reserve(points.size());
    d.y.reserve(points.size());
    d.w.reserve(points.size());
    for (const RunFano& r : points) {
        if (weighted && !(r.point.se_fv > 0.0)) {
            throw ParameterError(
                "weighted fit requires strictly positive se_fv on every point");
        }
        d.x.push_back(r.point.vbar);
        d.y.push_back(r.point.fv);
        d.w.push_back(weighted ? 1.0 / (r.point.se_fv * r.point.se_fv) : 1.0);
    }
    const double x0 = d.x.front();
    const bool degenerate = std::all_of(d.x.begin(), d.x.end(),
                                        [x0](double v) { return v == x0; });
    if (degenerate) {
        throw DegenerateDesignError(
            "all runs share the same mean voltage; the line is unconstrained");
    }
    return d;
}

// Centered weighted least squares. Centering at the weighted mean of x
// makes slope and intercept estimates numerically stable and gives the
// covariance in closed form.
LineFit fit_line(const XY& d) {
    const std::size_t n = d.x.size();
    long double sw = 0.0L, swx = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        sw += d.w[i];
        swx += d.w[i] * d.x[i];
    }
    const long double xbar = swx / sw;
    long double sxx = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double dx = d.x[i] - xbar;
        sxx += d.w[i] * dx * dx;
        sxy += d.w[i] * dx * d.y[i];
    }
    if (!(sxx > 0.0L)) {
        throw DegenerateDesignError(
            "zero spread in mean voltage; the line is unconstrained");
    }
    const long double slope = sxy / sxx;
    long double swy = 0.0L;
    for (std::size_t i = 0; i < n; ++i) swy += d.w[i] * d.y[i];
    const long double ybar = swy / sw;
    const long double intercept = ybar - slope * xbar;

    long double chi2 = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double r = d.y[i] - (slope * d.x[i] + intercept);
        chi2 += d.w[i] * r * r;
    }

    LineFit f;
    f.slope = static_cast<double>(slope);
    f.intercept = static_cast<double>(intercept);
    const long double var_slope = 1.0L / sxx;
    const long double var_int = 1.0L / sw + xbar * xbar / sxx;
    f.se_slope = static_cast<double>(std::sqrt(var_slope));
    f.se_intercept = static_cast<double>(std::sqrt(var_int));
    f.cov_slope_intercept = static_cast<double>(-xbar / sxx);
    f.chi2 = static_cast<double>(chi2);
    f.dof = static_cast<int>(n) - 2;
    return f;
}

}  // namespace

std::string to_string(LightClass c) {
    switch (c) {
        case LightClass::poissonian: return "poissonian";
        case LightClass::super_poissonian: return "super_poissonian";
        case LightClass::sub_poissonian: return "sub_poissonian";
    }
    throw std::logic_error("unreachable");
}

std::string to_string(ModelHint h) {
    switch (h) {
        case ModelHint::automatic: return "auto";
        case ModelHint::coherent: return "coherent";
        case ModelHint::thermal: return "thermal";
    }
    throw std::logic_error("unreachable");
}

LightClass light_class_from_string(const std::string& s) {
    if (s == "poissonian") return LightClass::poissonian;
    if (s == "super_poissonian") return LightClass::super_poissonian;
    if (s == "sub_poissonian") return LightClass::sub_poissonian;
    throw ConfigError("unknown light class \"" + s + "\"");
}

ModelHint model_hint_from_string(const std::string& s) {
    if (s == "auto") return ModelHint::automatic;
    if (s == "coherent") return ModelHint::coherent;
    if (s == "thermal") return ModelHint::thermal;
    throw ConfigError("unknown model hint \"" + s +
                      "\" (expected auto, coherent, or thermal)");
}

LineFit fit_fano_line(std::span<const RunFano> points) {
    return fit_line(extract(points, true));
}

LineFit fit_fano_line_ols(std::span<const RunFano> points) {
    XY d = extract(points, false);
    LineFit f = fit_line(d);
    // Unit weights leave the parameter errors unscaled; estimate the point
    // error from the residual scatter instead. chi2 stays the raw residual
    // sum of squares.
    if (f.dof > 0) {
        const double s2 = f.chi2 / f.dof;
        const double s = std::sqrt(s2);
        f.se_slope *= s;
        f.se_intercept *= s;
        f.cov_slope_intercept *= s2;
    }
    return f;
}

LightClass classify(double slope, double se_slope, double z_threshold) {
    if (!(se_slope > 0.0)) {
        throw ParameterError("classification requires a positive slope error");
    }
    if (std::abs(slope) <= z_threshold * se_slope) {
        return LightClass::poissonian;
    }
    return slope > 0.0 ? LightClass::super_poissonian
                       : LightClass::sub_poissonian;
}

CalibrationResult calibrate(std::span<const AttenuationRun> runs,
                            const CalibrationOptions& opts) {
    if (runs.size() < 3) {
        throw InsufficientDataError(
            "calibration needs at least 3 attenuation runs, got " +
            std::to_string(runs.size()));
    }

    CalibrationResult res;
    res.hint = opts.hint;
    res.points.reserve(runs.size());
    for (const AttenuationRun& run : runs) {
        RunFano rf;
        rf.transmittance = run.transmittance;
        rf.point = fano_point(run, opts.bootstrap_rounds);
        res.points.push_back(rf);
    }
    std::sort(res.points.begin(), res.points.end(),
              [](const RunFano& a, const RunFano& b) {
                  return a.transmittance < b.transmittance;
              });

    res.fit = fit_fano_line(res.points);
    res.fit_ols = fit_fano_line_ols(res.points);
    res.classification =
        classify(res.fit.slope, res.fit.se_slope, opts.z_threshold);

    res.alpha = res.fit.intercept;
    res.se_alpha = res.fit.se_intercept;
    if (!(res.alpha > 0.0)) {
        throw FitError("fitted gain is not positive (" +
                       std::to_string(res.alpha) +
                       " V); the data do not describe a linear amplifier");
    }

    const bool want_mu =
        opts.hint == ModelHint::thermal ||
        (opts.hint == ModelHint::automatic &&
         res.classification == LightClass::super_poissonian);
    if (want_mu && res.fit.slope > 0.0) {
        res.mu = 1.0 / res.fit.slope;
        res.se_mu = res.fit.se_slope / (res.fit.slope * res.fit.slope);
    }
    if (opts.hint == ModelHint::thermal && !(res.fit.slope > 0.0)) {
        res.hint_inconsistent = true;
    }

    if (opts.hint == ModelHint::coherent) {
        // Under the coherent constraint the line is flat and every Fano
        // factor is a direct gain measurement; pool them by inverse
        // variance.
        long double sw = 0.0L, swy = 0.0L;
        for (const RunFano& r : res.points) {
            const long double w = 1.0L / (static_cast<long double>(r.point.se_fv) *
                                          r.point.se_fv);
            sw += w;
            swy += w * r.point.fv;
        }
        res.alpha_constrained = static_cast<double>(swy / sw);
        res.se_alpha_constrained =
            static_cast<double>(std::sqrt(1.0L / sw));
        if (res.classification != LightClass::poissonian) {
            res.hint_inconsistent = true;
        }
    }

    return res;
}

namespace {

nlohmann::json fit_to_json(const LineFit& f) {
    return nlohmann::json{
        {"slope", f.slope},
        {"intercept", f.intercept},
        {"se_slope", f.se_slope},
        {"se_intercept", f.se_intercept},
        {"cov_slope_intercept", f.cov_slope_intercept},
        {"chi2", f.chi2},
        {"dof", f.dof},
    };
}

LineFit fit_from_json(const nlohmann::json& j) {
    LineFit f;
    f.slope = j.at("slope").get<double>();
    f.intercept = j.at("intercept").get<double>();
    f.se_slope = j.at("se_slope").get<double>();
    f.se_intercept = j.at("se_intercept").get<double>();
    f.cov_slope_intercept = j.at("cov_slope_intercept").get<double>();
    f.chi2 = j.at("chi2").get<double>();
    f.dof = j.at("dof").get<int>();
    return f;
}

}  // namespace

nlohmann::json to_json(const CalibrationResult& result) {
    nlohmann::json points = nlohmann::json::array();
    for (const RunFano& r : result.points) {
        points.push_back({
            {"transmittance", r.transmittance},
            {"vbar", r.point.vbar},
            {"se_vbar", r.point.se_vbar},
            {"fv", r.point.fv},
            {"se_fv", r.point.se_fv},
            {"count", r.point.count},
        });
    }
    nlohmann::json j{
        {"fit", fit_to_json(result.fit)},
        {"fit_ols", fit_to_json(result.fit_ols)},
        {"classification", to_string(result.classification)},
        {"hint", to_string(result.hint)},
        {"alpha", result.alpha},
        {"se_alpha", result.se_alpha},
        {"hint_inconsistent", result.hint_inconsistent},
        {"points", std::move(points)},
    };
    if (result.mu) {
        j["mu"] = *result.mu;
        j["se_mu"] = *result.se_mu;
    }
    if (result.alpha_constrained) {
        j["alpha_constrained"] = *result.alpha_constrained;
        j["se_alpha_constrained"] = *result.se_alpha_constrained;
    }
    return j;
}

CalibrationResult calibration_from_json(const nlohmann::json& j) {
    CalibrationResult res;
    res.fit = fit_from_json(j.at("fit"));
    res.fit_ols = fit_from_json(j.at("fit_ols"));
    res.classification =
        light_class_from_string(j.at("classification").get<std::string>());
    res.hint = model_hint_from_string(j.at("hint").get<std::string>());
    res.alpha = j.at("alpha").get<double>();
    res.se_alpha = j.at("se_alpha").get<double>();
    res.hint_inconsistent = j.at("hint_inconsistent").get<bool>();
    if (j.contains("mu")) {
        res.mu = j.at("mu").get<double>();
        res.se_mu = j.at("se_mu").get<double>();
    }
    if (j.contains("alpha_constrained")) {
        res.alpha_constrained = j.at("alpha_constrained").get<double>();
        res.se_alpha_constrained = j.at("se_alpha_constrained").get<double>();
    }
    for (const auto& p : j.at("points")) {
        RunFano r;
        r.transmittance = p.at("transmittance").get<double>();
        r.point.vbar = p.at("vbar").get<double>();
        r.point.se_vbar = p.at("se_vbar").get<double>();
        r.point.fv = p.at("fv").get<double>();
        r.point.se_fv = p.at("se_fv").get<double>();
        r.point.count = p.at("count").get<std::size_t>();
        res.points.push_back(std::move(r));
    }
    return res;
}

}  // namespace lightstat
