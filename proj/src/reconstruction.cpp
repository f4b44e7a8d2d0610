#include "lightstat/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "lightstat/errors.hpp"
#include "lightstat/estimation.hpp"

namespace lightstat {

std::vector<double> ElectronHistogram::probabilities() const {
    std::vector<double> p(counts.size(), 0.0);
    if (total <= 0) return p;
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t m = 0; m < counts.size(); ++m) {
        p[m] = static_cast<double>(counts[m]) * inv;
    }
    return p;
}

void ElectronHistogram::merge(const ElectronHistogram& other) {
    if (other.counts.size() > counts.size()) {
        counts.resize(other.counts.size(), 0);
    }
    for (std::size_t m = 0; m < other.counts.size(); ++m) {
        counts[m] += other.counts[m];
    }
    total += other.total;
    clamped += other.clamped;
}

ElectronHistogram rebin(const AttenuationRun& run, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ParameterError("rebin requires a positive finite gain");
    }
    ElectronHistogram h;
    for (double v : run.samples) {
        long long m = std::llround(v / alpha);
        if (m < 0) {
            m = 0;
            ++h.clamped;
        }
        const auto idx = static_cast<std::size_t>(m);
        if (idx >= h.counts.size()) h.counts.resize(idx + 1, 0);
        ++h.counts[idx];
        ++h.total;
    }
    return h;
}

namespace {

void check_normalized(std::span<const double> p, const char* which) {
    long double sum = 0.0L;
    for (double v : p) {
        if (v < 0.0) {
            throw NormalizationError(std::string(which) +
                                     " distribution has negative mass");
        }
        sum += v;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9) {
        throw NormalizationError(
            std::string(which) + " distribution sums to " +
            std::to_string(static_cast<double>(sum)) + ", not 1");
    }
}

}  // namespace

double fidelity(std::span<const double> p, std::span<const double> q,
                FidelityStart start) {
    check_normalized(p, "first");
    check_normalized(q, "second");
    const std::size_t m0 = (start == FidelityStart::from_one) ? 1 : 0;
    const std::size_t top = std::min(p.size(), q.size());
    long double sum = 0.0L;
    for (std::size_t m = m0; m < top; ++m) {
        sum += std::sqrt(static_cast<long double>(p[m]) * q[m]);
    }
    return std::min(static_cast<double>(sum), 1.0);
}

double fidelity(const ElectronHistogram& histogram, std::span<const double> q,
                FidelityStart start) {
    const std::vector<double> p = histogram.probabilities();
    return fidelity(p, q, start);
}

ReconstructionReport reconstruct_and_score(
    const AttenuationRun& run, const CalibrationResult& calib,
    std::optional<PhotonNumberModel> expected, FidelityStart start) {
    if (!(calib.alpha > 0.0)) {
        throw ParameterError("reconstruction requires a positive calibrated gain");
    }
    const SampleMoments mom = estimate_moments(run);
    if (!(mom.mean > 0.0)) {
        throw DegenerateRunError(
            "run \"" + run.label +
            "\" has non-positive mean voltage; nothing to reconstruct");
    }
    const double mean_e = mom.mean / calib.alpha;

    PhotonNumberModel theory;
    if (expected) {
        // Keep the caller's family and shape, pin the mean to the data.
        theory = std::visit(
            [mean_e](const auto& m) -> PhotonNumberModel {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, Poisson>) {
                    return Poisson{mean_e};
                } else if constexpr (std::is_same_v<T, MultimodeThermal>) {
                    return MultimodeThermal{mean_e, m.mu};
                } else {
                    const double n = static_cast<double>(m.max_photons);
                    if (!(mean_e < n)) {
                        throw DataError(
                            "measured mean exceeds the binomial photon cap");
                    }
                    return BinomialSource{m.max_photons, mean_e / n};
                }
            },
            *expected);
    } else {
        switch (calib.classification) {
            case LightClass::poissonian:
                theory = Poisson{mean_e};
                break;
            case LightClass::super_poissonian: {
                double mu;
                if (calib.mu) {
                    mu = *calib.mu;
                } else if (calib.fit.slope > 0.0) {
                    mu = 1.0 / calib.fit.slope;
                } else {
                    throw DataError(
                        "super-Poissonian classification with non-positive "
                        "slope; no mode number available");
                }
                theory = MultimodeThermal{mean_e, std::max(mu, 1.0)};
                break;
            }
            case LightClass::sub_poissonian: {
                // For a binomial source the Fano line slope is -1/N,
                // independent of attenuation.
                long long n = 0;
                if (calib.fit.slope < 0.0) {
                    n = std::llround(-1.0 / calib.fit.slope);
                }
                const long long floor_n =
                    static_cast<long long>(std::floor(mean_e)) + 1;
                n = std::max(n, floor_n);
                theory = BinomialSource{static_cast<int>(n),
                                        mean_e / static_cast<double>(n)};
                break;
            }
        }
    }
    validate(theory);

    ReconstructionReport report;
    report.histogram = rebin(run, calib.alpha);
    report.mean_electrons = mean_e;
    report.theory_model = theory;
    report.theory = pmf_vector(theory);
    if (report.theory.size() < report.histogram.counts.size()) {
        const std::size_t old = report.theory.size();
        report.theory.resize(report.histogram.counts.size(), 0.0);
        for (std::size_t m = old; m < report.theory.size(); ++m) {
            report.theory[m] = pmf(theory, static_cast<long>(m));
        }
    }
    report.fidelity_value = fidelity(report.histogram, report.theory, start);
    return report;
}

void write_histogram_csv(const ElectronHistogram& histogram,
                         std::span<const double> theory, std::ostream& out) {
    out << "m,count,probability,theory_probability\n";
    const std::vector<double> probs = histogram.probabilities();
    const std::size_t rows = std::max(probs.size(), theory.size());
    char buf[128];
    for (std::size_t m = 0; m < rows; ++m) {
        const std::int64_t c =
            m < histogram.counts.size() ? histogram.counts[m] : 0;
        const double p = m < probs.size() ? probs[m] : 0.0;
        const double q = m < theory.size() ? theory[m] : 0.0;
        std::snprintf(buf, sizeof(buf), "%zu,%lld,%.12g,%.12g\n", m,
                      static_cast<long long>(c), p, q);
        out << buf;
    }
}

}  // namespace lightstat
