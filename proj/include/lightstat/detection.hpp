#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lightstat/photon_model.hpp"
#include "lightstat/random.hpp"

namespace lightstat {

// The simulated instrument: Bernoulli photodetection at quantum efficiency
// eta followed by linear amplification to voltage, alpha volts per
// photoelectron. With both noise widths at zero the output is exactly
// v = alpha * m.
struct DetectorChain {
    double eta = 1.0;         // intrinsic quantum efficiency, (0,1]
    double alpha = 1.0;       // gain-conversion factor, V per photoelectron, > 0
    double sigma1 = 0.0;      // single-electron peak spread, V, >= 0
    double sigma_dark = 0.0;  // dark/electronic noise width, V, >= 0

    bool noiseless() const { return sigma1 == 0.0 && sigma_dark == 0.0; }
};

void validate(const DetectorChain& chain);

// One neutral-filter setting and the voltage samples recorded behind it.
// Samples have the dark mean already subtracted, so they may be slightly
// negative when the chain is noisy.
struct AttenuationRun {
    double transmittance = 1.0;   // filter transmittance, (0,1]
    std::vector<double> samples;  // output voltages, V
    std::string label;
};

// Bernoulli thinning of a counting distribution:
//   P_el(m) = sum_{n>=m} C(n,m) eta^m (1-eta)^(n-m) P_ph(n)
// evaluated as an exact double sum over the truncated support. The input
// must be normalized within 1e-10; the output then is as well.
std::vector<double> thin_pmf(std::span<const double> photon_pmf, double eta_eff);

// Moment propagation through the photocathode:
//   mean_el = eta * mean_ph
//   var_el  = eta^2 * var_ph + eta * (1 - eta) * mean_ph
Moments electron_moments(double photon_mean, double photon_var, double eta_eff);

// Monte Carlo detection chain: per shot draw n from the model, thin it with
// a Binomial(n, eta * transmittance) draw, and convert to voltage. Noiseless
// chains emit exact multiples of alpha; otherwise each of the m electrons
// contributes Normal(alpha, sigma1) and the electronics add
// Normal(0, sigma_dark). Deterministic under a fixed stream.
AttenuationRun simulate_run(const PhotonNumberModel& model, const DetectorChain& chain,
                            double transmittance, std::size_t count, RandomStream& rng);

// Electron pmf with its voltage scale: the voltage distribution is the
// thinned pmf placed at v = alpha * m (amplification is a pure rescaling).
struct VoltagePmf {
    double alpha = 1.0;
    std::vector<double> probabilities;  // index m, voltage alpha * m
};

// Exact output distribution of a noiseless chain at the given filter
// setting. Throws UnsupportedConfigError if the chain has noise.
VoltagePmf voltage_pmf(const PhotonNumberModel& model, const DetectorChain& chain,
                       double transmittance);

nlohmann::json to_json(const AttenuationRun& run);
AttenuationRun run_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DetectorChain& chain);
DetectorChain chain_from_json(const nlohmann::json& j);

// Two columns: shot index, voltage.
void write_run_csv(const AttenuationRun& run, std::ostream& out);

}  // namespace lightstat
