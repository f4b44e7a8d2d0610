#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lightstat/random.hpp"

namespace lightstat {

// Parametric photon-number distributions: per-pulse photon count models
// with exact pmf evaluation, analytic moments, and random sampling.

struct Poisson {
    double nbar = 1.0;  // mean photon number, > 0
};

// Convolution of `mu` independent single-mode thermal fields with total
// mean `nbar`. `mu` is a real >= 1 so that non-integer mode numbers coming
// out of fits are accepted; the pmf uses gamma functions throughout.
struct MultimodeThermal {
    double nbar = 1.0;  // mean photon number, > 0
    double mu = 1.0;    // number of modes, >= 1
};

// Sub-Poissonian test source: at most `max_photons` photons, each emitted
// independently with probability `p`. Mandel Q = -p < 0.
struct BinomialSource {
    int max_photons = 1;  // >= 1
    double p = 0.5;       // in (0,1)
};

using PhotonNumberModel = std::variant<Poisson, MultimodeThermal, BinomialSource>;

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

// Throws ParameterError if any parameter is outside its domain.
void validate(const PhotonNumberModel& model);

double log_pmf(const PhotonNumberModel& model, long n);

// P_ph(n). Stable in log space for n up to ~1e5.
double pmf(const PhotonNumberModel& model, long n);

// Analytic mean and variance.
Moments moments(const PhotonNumberModel& model);

// Q = variance/mean - 1: zero for Poisson, nbar/mu for multimode thermal,
// -p for the binomial source.
double mandel_q(const PhotonNumberModel& model);

// Smallest n_max such that the mass above n_max is below `tail_mass`.
// Scans the cumulative pmf and stops early once a geometric bound
// certifies the remaining tail; memory stays bounded for any parameters.
long support_size(const PhotonNumberModel& model, double tail_mass = 1e-12);

// pmf evaluated on 0..support_size(model, tail_mass); sums to 1 within
// tail_mass plus rounding.
std::vector<double> pmf_vector(const PhotonNumberModel& model, double tail_mass = 1e-12);

// Same family after Bernoulli thinning with survival probability eta:
// all three families are closed under thinning.
PhotonNumberModel thinned(const PhotonNumberModel& model, double eta);

// Draws photon counts. Poisson uses the standard library sampler,
// MultimodeThermal draws a Gamma(shape=mu, mean=nbar) rate then a Poisson
// count (exact for real mu), BinomialSource runs max_photons Bernoulli
// trials. Caches per-model state so per-shot cost stays low.
class ModelSampler {
public:
    explicit ModelSampler(const PhotonNumberModel& model);
    int operator()(RandomStream& rng);

private:
    PhotonNumberModel model_;
    std::poisson_distribution<int> poisson_;
    std::gamma_distribution<double> gamma_;
};

std::vector<int> sample(const PhotonNumberModel& model, RandomStream& rng, std::size_t count);

// JSON form: {"type": "poisson"|"multimode_thermal"|"binomial", parameters...}.
nlohmann::json to_json(const PhotonNumberModel& model);
PhotonNumberModel model_from_json(const nlohmann::json& j);

std::string family_name(const PhotonNumberModel& model);

}  // namespace lightstat
