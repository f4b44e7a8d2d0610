#include "lightstat/detection.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "lightstat/errors.hpp"

namespace lightstat {

void validate(const DetectorChain& chain) {
    if (!(chain.eta > 0.0 && chain.eta <= 1.0))
        throw ParameterError("detector chain: eta must be in (0,1]");
    if (!(chain.alpha > 0.0) || !std::isfinite(chain.alpha))
        throw ParameterError("detector chain: alpha must be > 0");
    if (chain.sigma1 < 0.0 || chain.sigma_dark < 0.0)
        throw ParameterError("detector chain: noise widths must be >= 0");
}

std::vector<double> thin_pmf(std::span<const double> photon_pmf, double eta_eff) {
    if (!(eta_eff > 0.0 && eta_eff <= 1.0))
        throw ParameterError("thin_pmf: eta_eff must be in (0,1]");
    long double total = 0.0L;
    for (double p : photon_pmf) total += p;
    if (std::abs(static_cast<double>(total) - 1.0) > 1e-10)
        throw NormalizationError("thin_pmf: input pmf not normalized within 1e-10");

    std::vector<double> out(photon_pmf.size(), 0.0);
    if (eta_eff == 1.0) {
        std::copy(photon_pmf.begin(), photon_pmf.end(), out.begin());
        return out;
    }

    const std::size_t size = photon_pmf.size();
    std::vector<double> lfact(size);  // lgamma(i+1)
    for (std::size_t i = 0; i < size; ++i)
        lfact[i] = std::lgamma(static_cast<double>(i) + 1.0);

    const double log_eta = std::log(eta_eff);
    const double log_comp = std::log1p(-eta_eff);
    for (std::size_t m = 0; m < size; ++m) {
        long double acc = 0.0L;
        for (std::size_t n = m; n < size; ++n) {
            if (photon_pmf[n] == 0.0) continue;
            const double log_binom = lfact[n] - lfact[m] - lfact[n - m];
            const double log_w = log_binom + static_cast<double>(m) * log_eta +
                                 static_cast<double>(n - m) * log_comp;
            acc += static_cast<long double>(std::exp(log_w)) * photon_pmf[n];
        }
        out[m] = static_cast<double>(acc);
    }
    return out;
}

Moments electron_moments(double photon_mean, double photon_var, double eta_eff) {
    return {eta_eff * photon_mean,
            eta_eff * eta_eff * photon_var + eta_eff * (1.0 - eta_eff) * photon_mean};
}

AttenuationRun simulate_run(const PhotonNumberModel& model, const DetectorChain& chain,
                            double transmittance, std::size_t count, RandomStream& rng) {
    validate(model);
    validate(chain);
    if (!(transmittance > 0.0 && transmittance <= 1.0))
        throw ParameterError("simulate_run: transmittance must be in (0,1]");

    const double eta_eff = chain.eta * transmittance;
    const bool noiseless = chain.noiseless();
    ModelSampler draw_photons(model);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    AttenuationRun run;
    run.transmittance = transmittance;
    run.samples.resize(count);
    for (auto& v : run.samples) {
        const int n = draw_photons(rng);
        const int m = sample_binomial(rng, n, eta_eff);
        if (noiseless) {
            v = chain.alpha * m;
        } else {
            const double sd = std::sqrt(static_cast<double>(m) * chain.sigma1 * chain.sigma1 +
                                        chain.sigma_dark * chain.sigma_dark);
            v = chain.alpha * m + sd * unit_normal(rng);
        }
    }
    return run;
}

VoltagePmf voltage_pmf(const PhotonNumberModel& model, const DetectorChain& chain,
                       double transmittance) {
    validate(chain);
    if (!chain.noiseless())
        throw UnsupportedConfigError("voltage_pmf: defined for noiseless chains only");
    if (!(transmittance > 0.0 && transmittance <= 1.0))
        throw ParameterError("voltage_pmf: transmittance must be in (0,1]");
    return {chain.alpha, pmf_vector(thinned(model, chain.eta * transmittance))};
}

nlohmann::json to_json(const AttenuationRun& run) {
    return {{"transmittance", run.transmittance},
            {"label", run.label},
            {"samples", run.samples}};
}

AttenuationRun run_from_json(const nlohmann::json& j) {
    AttenuationRun run;
    run.transmittance = j.at("transmittance").get<double>();
    run.label = j.value("label", std::string{});
    run.samples = j.at("samples").get<std::vector<double>>();
    if (!(run.transmittance > 0.0 && run.transmittance <= 1.0))
        throw ParameterError("attenuation run: transmittance must be in (0,1]");
    return run;
}

nlohmann::json to_json(const DetectorChain& chain) {
    return {{"eta", chain.eta},
            {"alpha", chain.alpha},
            {"sigma1", chain.sigma1},
            {"sigma_dark", chain.sigma_dark}};
}

DetectorChain chain_from_json(const nlohmann::json& j) {
    DetectorChain chain;
    chain.eta = j.at("eta").get<double>();
    chain.alpha = j.at("alpha").get<double>();
    chain.sigma1 = j.value("sigma1", 0.0);
    chain.sigma_dark = j.value("sigma_dark", 0.0);
    validate(chain);
    return chain;
}

void write_run_csv(const AttenuationRun& run, std::ostream& out) {
    out << "shot,voltage\n";
    char buf[64];
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, run.samples[i]);
        out << buf;
    }
}

}  // namespace lightstat
