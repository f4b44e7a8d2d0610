#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lightstat/detection.hpp"

namespace lightstat {

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased (n-1 denominator)
    std::size_t count = 0;
};

// Arithmetic mean and Bessel-corrected variance of the run's voltages.
// Throws InsufficientDataError below 2 samples.
SampleMoments estimate_moments(const AttenuationRun& run);

// One point on the calibration line: mean voltage and voltage Fano factor
// F_v = s^2 / vbar, with bootstrap standard errors. F_v carries volts.
struct FanoPoint {
    double vbar = 0.0;
    double fv = 0.0;
    double se_vbar = 0.0;
    double se_fv = 0.0;
    std::size_t count = 0;
};

// Computes the Fano point of a run. Standard errors come from a
// nonparametric bootstrap whose stream is seeded from the run content, so
// the same run always yields the same errors. Requires >= 100 samples and
// a positive mean voltage; a fully attenuated run carries no Fano
// information and is rejected.
FanoPoint fano_point(const AttenuationRun& run, int bootstrap_rounds = 200);

// A Fano point tagged with the filter setting it came from.
struct RunFano {
    double transmittance = 1.0;
    FanoPoint point;
};

// Plot-ready rows: transmittance, vbar, se_vbar, fv, se_fv, count.
void write_fano_csv(std::span<const RunFano> points, std::ostream& out);

}  // namespace lightstat
