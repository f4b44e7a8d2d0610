#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "lightstat/calibration.hpp"
#include "lightstat/detection.hpp"
#include "lightstat/photon_model.hpp"

namespace lightstat {

// Unit-bin photoelectron histogram: counts[m] is the number of shots whose
// voltage fell in [(m-0.5)*alpha, (m+0.5)*alpha).
struct ElectronHistogram {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
    std::int64_t clamped = 0;  // shots below -alpha/2, folded into bin 0

    double clamped_fraction() const {
        return total > 0 ? static_cast<double>(clamped) / static_cast<double>(total)
                         : 0.0;
    }
    // counts / total; sums to 1 by construction.
    std::vector<double> probabilities() const;
    // Counts add, so shards built in parallel combine deterministically.
    void merge(const ElectronHistogram& other);
};

// Converts voltages to electron numbers with the fitted gain. Bin centers
// sit at integer multiples of alpha; rounding to nearest keeps the peaks
// centered. Voltages below -alpha/2 clamp into bin 0 and are counted.
ElectronHistogram rebin(const AttenuationRun& run, double alpha);

// Lower limit of the fidelity sum. `from_one` drops the vacuum bin and
// bounds the score strictly below 1 whenever both distributions have mass
// at zero; it exists for comparison only.
enum class FidelityStart { from_zero, from_one };

// Bhattacharyya coefficient sum_m sqrt(p(m) q(m)). Both inputs must be
// normalized within 1e-9. Indices beyond either vector contribute zero.
double fidelity(std::span<const double> p, std::span<const double> q,
                FidelityStart start = FidelityStart::from_zero);
double fidelity(const ElectronHistogram& histogram, std::span<const double> q,
                FidelityStart start = FidelityStart::from_zero);

struct ReconstructionReport {
    ElectronHistogram histogram;
    std::vector<double> theory;  // theoretical electron pmf, unit bins
    double fidelity_value = 0.0;
    double mean_electrons = 0.0;  // vbar / alpha
    PhotonNumberModel theory_model;
};

// Rebins the run with the calibrated gain and scores it against the
// theoretical electron distribution of the classified family, with the
// mean pinned to the measured vbar/alpha and, for super-Poissonian light,
// mu taken from the fit. `expected` overrides the family (its mean is
// still retargeted to the measured value).
ReconstructionReport reconstruct_and_score(
    const AttenuationRun& run, const CalibrationResult& calib,
    std::optional<PhotonNumberModel> expected = std::nullopt,
    FidelityStart start = FidelityStart::from_zero);

// Plot-ready rows: m, count, probability, theory_probability.
void write_histogram_csv(const ElectronHistogram& histogram,
                         std::span<const double> theory, std::ostream& out);

}  // namespace lightstat
