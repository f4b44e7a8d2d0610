#include "lightstat/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include "lightstat/errors.hpp"
#include "lightstat/random.hpp"

namespace lightstat {

namespace {

// Two-pass moments in extended precision. Voltages from a long run are
// tightly clustered, so the naive sum-of-squares route loses digits.
SampleMoments moments_of(std::span<const double> values) {
    const std::size_t n = values.size();
    long double sum = 0.0L;
    for (double v : values) sum += v;
    const long double mean = sum / static_cast<long double>(n);
    long double ss = 0.0L;
    for (double v : values) {
        const long double d = static_cast<long double>(v) - mean;
        ss += d * d;
    }
    SampleMoments m;
    m.mean = static_cast<double>(mean);
    m.variance = static_cast<double>(ss / static_cast<long double>(n - 1));
    m.count = n;
    return m;
}

std::uint64_t bootstrap_seed(const AttenuationRun& run) {
    std::uint64_t h = fnv1a64(run.transmittance);
    const std::uint64_t n = run.samples.size();
    h = fnv1a64(&n, sizeof(n), h);
    h = fnv1a64(run.samples.data(), run.samples.size() * sizeof(double), h);
    return h;
}

struct DistinctTable {
    std::vector<double> values;
    std::vector<std::size_t> counts;
};

// Collapses the sample into (value, multiplicity) pairs. Simulated voltage
// data without detector noise lives on a small lattice of alpha multiples,
// which makes resampling by multiplicity far cheaper than by index.
DistinctTable tabulate(std::span<const double> samples) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    DistinctTable table;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        table.values.push_back(sorted[i]);
        table.counts.push_back(j - i);
        i = j;
    }
    return table;
}

struct BootStats {
    double mean = 0.0;
    double variance = 0.0;
};

// Multinomial resample over the distinct-value table: draw new
// multiplicities by sequential binomial splitting, then compute moments
// from the weighted table. Equivalent in distribution to resampling
// indices, at cost O(K) per round instead of O(n).
BootStats resample_table(const DistinctTable& table, std::size_t n,
                         double center, RandomStream& rng) {
    const std::size_t k = table.values.size();
    std::size_t remaining = n;
    double mass_left = 1.0;
    long double s1 = 0.0L;  // sum of (v - center) * weight
    long double s2 = 0.0L;  // sum of (v - center)^2 * weight
    for (std::size_t i = 0; i < k && remaining > 0; ++i) {
        std::size_t draw;
        if (i + 1 == k) {
            draw = remaining;
        } else {
            const double p = static_cast<double>(table.counts[i]) /
                             static_cast<double>(n) / mass_left;
            std::binomial_distribution<std::size_t> bin(
                remaining, std::clamp(p, 0.0, 1.0));
            draw = bin(rng);
            mass_left -= static_cast<double>(table.counts[i]) /
                         static_cast<double>(n);
            if (mass_left < 1e-15) mass_left = 1e-15;
        }
        const long double d =
            static_cast<long double>(table.values[i]) - center;
        const long double w = static_cast<long double>(draw);
        s1 += d * w;
        s2 += d * d * w;
        remaining -= draw;
    }
    BootStats out;
    const long double nn = static_cast<long double>(n);
    out.mean = static_cast<double>(center + s1 / nn);
    out.variance = static_cast<double>((s2 - s1 * s1 / nn) / (nn - 1.0L));
    return out;
}

BootStats resample_indices(std::span<const double> samples, double center,
                           RandomStream& rng) {
    const std::size_t n = samples.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    long double s1 = 0.0L;
    long double s2 = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double d =
            static_cast<long double>(samples[pick(rng)]) - center;
        s1 += d;
        s2 += d * d;
    }
    BootStats out;
    const long double nn = static_cast<long double>(n);
    out.mean = static_cast<double>(center + s1 / nn);
    out.variance = static_cast<double>((s2 - s1 * s1 / nn) / (nn - 1.0L));
    return out;
}

}  // namespace

SampleMoments estimate_moments(const AttenuationRun& run) {
    if (run.samples.size() < 2) {
        throw InsufficientDataError(
            "moment estimation needs at least 2 samples, got " +
            std::to_string(run.samples.size()));
    }
    return moments_of(run.samples);
}

FanoPoint fano_point(const AttenuationRun& run, int bootstrap_rounds) {
    if (run.samples.size() < 100) {
        throw InsufficientDataError(
            "Fano point needs at least 100 samples, got " +
            std::to_string(run.samples.size()));
    }
    if (bootstrap_rounds < 2) {
        throw ParameterError("bootstrap_rounds must be at least 2");
    }
    const SampleMoments base = moments_of(run.samples);
    if (!(base.mean > 0.0)) {
        throw DegenerateRunError(
            "run \"" + run.label +
            "\" has non-positive mean voltage; the Fano factor is undefined");
    }

    const std::size_t n = run.samples.size();
    RandomStream rng(bootstrap_seed(run));

    // Distinct-value fast path covers noiseless chains; the index path
    // handles continuous (noisy) voltages.
    constexpr std::size_t kMaxDistinct = 4096;
    DistinctTable table = tabulate(run.samples);
    const bool use_table = table.values.size() <= kMaxDistinct;

    const int rounds = bootstrap_rounds;
    std::vector<double> boot_mean(static_cast<std::size_t>(rounds));
    std::vector<double> boot_fv(static_cast<std::size_t>(rounds));
    for (int b = 0; b < rounds; ++b) {
        const BootStats s = use_table
                                ? resample_table(table, n, base.mean, rng)
                                : resample_indices(run.samples, base.mean, rng);
        boot_mean[static_cast<std::size_t>(b)] = s.mean;
        boot_fv[static_cast<std::size_t>(b)] =
            s.mean > 0.0 ? s.variance / s.mean : 0.0;
    }

    const SampleMoments mm = moments_of(boot_mean);
    const SampleMoments mf = moments_of(boot_fv);

    FanoPoint p;
    p.vbar = base.mean;
    p.fv = base.variance / base.mean;
    p.se_vbar = std::sqrt(mm.variance);
    p.se_fv = std::sqrt(mf.variance);
    p.count = n;
    return p;
}

void write_fano_csv(std::span<const RunFano> points, std::ostream& out) {
    out << "transmittance,vbar,se_vbar,fv,se_fv,count\n";
    char buf[192];
    for (const RunFano& r : points) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%zu\n",
                      r.transmittance, r.point.vbar, r.point.se_vbar,
                      r.point.fv, r.point.se_fv, r.point.count);
        out << buf;
    }
}

}  // namespace lightstat
