#include "lightstat/photon_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lightstat/errors.hpp"

namespace lightstat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const Poisson* as_poisson(const PhotonNumberModel& m) { return std::get_if<Poisson>(&m); }

}  // namespace

void validate(const PhotonNumberModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                if (!(m.nbar > 0.0) || !std::isfinite(m.nbar))
                    throw ParameterError("poisson: nbar must be > 0");
            } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                if (!(m.nbar > 0.0) || !std::isfinite(m.nbar))
                    throw ParameterError("multimode_thermal: nbar must be > 0");
                if (!(m.mu >= 1.0) || !std::isfinite(m.mu))
                    throw ParameterError("multimode_thermal: mu must be >= 1");
            } else {
                if (m.max_photons < 1)
                    throw ParameterError("binomial: max_photons must be >= 1");
                if (!(m.p > 0.0 && m.p < 1.0))
                    throw ParameterError("binomial: p must be in (0,1)");
            }
        },
        model);
}

double log_pmf(const PhotonNumberModel& model, long n) {
    if (n < 0) return kNegInf;
    const double x = static_cast<double>(n);
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return x * std::log(m.nbar) - m.nbar - std::lgamma(x + 1.0);
            } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                // Negative-binomial form of the mu-mode thermal convolution:
                // Gamma(n+mu)/(n! Gamma(mu)) (mu/(mu+nbar))^mu (nbar/(mu+nbar))^n
                return std::lgamma(x + m.mu) - std::lgamma(x + 1.0) - std::lgamma(m.mu) +
                       m.mu * std::log(m.mu / (m.mu + m.nbar)) +
                       x * std::log(m.nbar / (m.mu + m.nbar));
            } else {
                if (n > m.max_photons) return kNegInf;
                const double N = static_cast<double>(m.max_photons);
                return std::lgamma(N + 1.0) - std::lgamma(x + 1.0) - std::lgamma(N - x + 1.0) +
                       x * std::log(m.p) + (N - x) * std::log1p(-m.p);
            }
        },
        model);
}

double pmf(const PhotonNumberModel& model, long n) {
    validate(model);
    const double lp = log_pmf(model, n);
    return lp == kNegInf ? 0.0 : std::exp(lp);
}

Moments moments(const PhotonNumberModel& model) {
    validate(model);
    return std::visit(
        [](const auto& m) -> Moments {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return {m.nbar, m.nbar};
            } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                return {m.nbar, m.nbar * (m.nbar / m.mu + 1.0)};
            } else {
                const double N = static_cast<double>(m.max_photons);
                return {N * m.p, N * m.p * (1.0 - m.p)};
            }
        },
        model);
}

double mandel_q(const PhotonNumberModel& model) {
    validate(model);
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                return m.nbar / m.mu;
            } else {
                return -m.p;
            }
        },
        model);
}

namespace {

// Upper bound on the successor ratio pmf(k+1)/pmf(k) for all k >= n.
// Both families have ratios that decrease toward a limit, so the value at
// k = n bounds the tail geometrically once it drops below 1.
double tail_ratio_bound(const PhotonNumberModel& model, long n) {
    const double x = static_cast<double>(n);
    if (const auto* p = as_poisson(model)) return p->nbar / (x + 1.0);
    if (const auto* t = std::get_if<MultimodeThermal>(&model))
        return (x + t->mu) / (x + 1.0) * (t->nbar / (t->nbar + t->mu));
    return 0.0;  // binomial support is handled by its hard upper end
}

}  // namespace

long support_size(const PhotonNumberModel& model, double tail_mass) {
    validate(model);
    if (!(tail_mass > 0.0 && tail_mass < 1.0))
        throw ParameterError("support_size: tail_mass must be in (0,1)");
    if (const auto* b = std::get_if<BinomialSource>(&model)) return b->max_photons;

    const double mean = moments(model).mean;
    long double cum = 0.0L;
    constexpr long kHardCap = 4'000'000;
    for (long n = 0; n < kHardCap; ++n) {
        const double p = std::exp(log_pmf(model, n));
        cum += p;
        if (cum >= 1.0L - static_cast<long double>(tail_mass)) return n;
        if (static_cast<double>(n) > mean) {
            const double r = tail_ratio_bound(model, n);
            if (r < 1.0 && p * r / (1.0 - r) < tail_mass) return n;
        }
    }
    throw ParameterError("support_size: support exceeds hard cap");
}

std::vector<double> pmf_vector(const PhotonNumberModel& model, double tail_mass) {
    const long n_max = support_size(model, tail_mass);
    std::vector<double> probs(static_cast<std::size_t>(n_max) + 1);
    for (long n = 0; n <= n_max; ++n) {
        const double lp = log_pmf(model, n);
        probs[static_cast<std::size_t>(n)] = (lp == kNegInf) ? 0.0 : std::exp(lp);
    }
    return probs;
}

PhotonNumberModel thinned(const PhotonNumberModel& model, double eta) {
    validate(model);
    if (!(eta > 0.0 && eta <= 1.0))
        throw ParameterError("thinned: eta must be in (0,1]");
    return std::visit(
        [&](const auto& m) -> PhotonNumberModel {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return Poisson{m.nbar * eta};
            } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                return MultimodeThermal{m.nbar * eta, m.mu};
            } else {
                return BinomialSource{m.max_photons, m.p * eta};
            }
        },
        model);
}

ModelSampler::ModelSampler(const PhotonNumberModel& model) : model_(model) {
    validate(model_);
    if (const auto* p = as_poisson(model_)) {
        poisson_ = std::poisson_distribution<int>(p->nbar);
    } else if (const auto* t = std::get_if<MultimodeThermal>(&model_)) {
        gamma_ = std::gamma_distribution<double>(t->mu, t->nbar / t->mu);
    }
}

int ModelSampler::operator()(RandomStream& rng) {
    if (std::holds_alternative<Poisson>(model_)) return poisson_(rng);
    if (std::holds_alternative<MultimodeThermal>(model_)) {
        const double rate = gamma_(rng);
        if (rate <= 0.0) return 0;
        std::poisson_distribution<int> mixed(rate);
        return mixed(rng);
    }
    const auto& b = std::get<BinomialSource>(model_);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int n = 0;
    for (int i = 0; i < b.max_photons; ++i)
        if (unit(rng) < b.p) ++n;
    return n;
}

std::vector<int> sample(const PhotonNumberModel& model, RandomStream& rng, std::size_t count) {
    ModelSampler draw(model);
    std::vector<int> counts(count);
    for (auto& n : counts) n = draw(rng);
    return counts;
}

nlohmann::json to_json(const PhotonNumberModel& model) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Poisson>) {
                return {{"type", "poisson"}, {"nbar", m.nbar}};
            } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                return {{"type", "multimode_thermal"}, {"nbar", m.nbar}, {"mu", m.mu}};
            } else {
                return {{"type", "binomial"}, {"N", m.max_photons}, {"p", m.p}};
            }
        },
        model);
}

PhotonNumberModel model_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    PhotonNumberModel model;
    if (type == "poisson") {
        model = Poisson{j.at("nbar").get<double>()};
    } else if (type == "multimode_thermal") {
        model = MultimodeThermal{j.at("nbar").get<double>(), j.at("mu").get<double>()};
    } else if (type == "binomial") {
        model = BinomialSource{j.at("N").get<int>(), j.at("p").get<double>()};
    } else {
        throw ParameterError("unknown model type: " + type);
    }
    validate(model);
    return model;
}

std::string family_name(const PhotonNumberModel& model) {
    return to_json(model).at("type").get<std::string>();
}

}  // namespace lightstat
