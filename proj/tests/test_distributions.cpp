#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "lightstat/errors.hpp"
#include "lightstat/photon_model.hpp"
#include "test_support.hpp"

using namespace lightstat;

TEST_SUITE_BEGIN("distributions");

TEST_CASE("parameter domains are enforced") {
    CHECK_THROWS_AS(validate(Poisson{0.0}), ParameterError);
    CHECK_THROWS_AS(validate(Poisson{-3.0}), ParameterError);
    CHECK_THROWS_AS(validate(MultimodeThermal{4.0, 0.5}), ParameterError);
    CHECK_THROWS_AS(validate(MultimodeThermal{-1.0, 2.0}), ParameterError);
    CHECK_THROWS_AS(validate(BinomialSource{0, 0.5}), ParameterError);
    CHECK_THROWS_AS(validate(BinomialSource{5, 0.0}), ParameterError);
    CHECK_THROWS_AS(validate(BinomialSource{5, 1.0}), ParameterError);
    CHECK_NOTHROW(validate(MultimodeThermal{4.0, 1.0}));
    CHECK_THROWS_AS(pmf(Poisson{0.0}, 1), ParameterError);
}

TEST_CASE("closed-form pmf spot values") {
    CHECK(pmf(Poisson{1.0}, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(pmf(MultimodeThermal{4.0, 2.0}, 0) ==
          doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    // Exact rational value of the mu-mode pmf at nbar=2, mu=3, n=5,
    // computed with integer arithmetic: 18144/390625.
    CHECK(pmf(MultimodeThermal{2.0, 3.0}, 5) ==
          doctest::Approx(18144.0 / 390625.0).epsilon(1e-13));
    CHECK(pmf(Poisson{2.0}, -1) == 0.0);
    CHECK(pmf(BinomialSource{5, 0.5}, 6) == 0.0);
}

TEST_CASE("analytic moments and Mandel Q") {
    const Moments p = moments(Poisson{10.0});
    CHECK(p.mean == 10.0);
    CHECK(p.variance == 10.0);

    const Moments t = moments(MultimodeThermal{4.0, 2.0});
    CHECK(t.mean == 4.0);
    CHECK(t.variance == 12.0);

    const Moments b = moments(BinomialSource{10, 0.5});
    CHECK(b.mean == 5.0);
    CHECK(b.variance == 2.5);

    CHECK(mandel_q(Poisson{3.0}) == 0.0);
    CHECK(mandel_q(MultimodeThermal{4.0, 2.0}) == 2.0);
    CHECK(mandel_q(BinomialSource{10, 0.3}) == -0.3);
}

TEST_CASE("normalization over the truncation support") {
    const std::vector<PhotonNumberModel> models = {
        Poisson{0.5},  Poisson{50.0},          MultimodeThermal{0.5, 1.0},
        MultimodeThermal{50.0, 5.2},           MultimodeThermal{5.0, 2.0},
        BinomialSource{100, 0.5},
    };
    for (const auto& model : models) {
        const std::vector<double> pmfv = pmf_vector(model);
        const double sum = std::accumulate(pmfv.begin(), pmfv.end(), 0.0);
        CHECK(sum >= 1.0 - 1e-10);
        CHECK(sum <= 1.0 + 1e-12);
        for (double p : pmfv) CHECK(p >= 0.0);
    }
}

TEST_CASE("pmf moments match the analytic moments") {
    const std::vector<PhotonNumberModel> models = {
        Poisson{0.5}, Poisson{50.0}, MultimodeThermal{50.0, 5.2},
        MultimodeThermal{4.0, 2.0}, BinomialSource{100, 0.5},
    };
    for (const auto& model : models) {
        const Moments want = moments(model);
        const Moments got = testsupport::pmf_moments(pmf_vector(model));
        CHECK(got.mean == doctest::Approx(want.mean).epsilon(1e-8));
        CHECK(got.variance == doctest::Approx(want.variance).epsilon(1e-8));
    }
}

TEST_CASE("single-mode limit equals the Bose-Einstein pmf") {
    for (double nbar : {0.5, 4.0, 20.0}) {
        const MultimodeThermal model{nbar, 1.0};
        const auto be = testsupport::bose_einstein_pmf(nbar, 61);
        for (long n = 0; n <= 60; ++n) {
            CHECK(std::abs(pmf(model, n) - be[static_cast<std::size_t>(n)]) <=
                  1e-12);
        }
    }
}

TEST_CASE("integer mode count equals the self-convolution") {
    const double nbar = 6.0;
    for (double mu : {1.0, 2.0, 3.0, 5.0}) {
        const std::vector<double> single =
            testsupport::bose_einstein_pmf(nbar / mu, 400);
        std::vector<double> conv = single;
        for (int k = 1; k < static_cast<int>(mu); ++k) {
            conv = testsupport::convolve(conv, single);
        }
        const MultimodeThermal model{nbar, mu};
        for (long n = 0; n <= 50; ++n) {
            CHECK(std::abs(pmf(model, n) - conv[static_cast<std::size_t>(n)]) <=
                  1e-10);
        }
    }
}

TEST_CASE("thinning closure stays in the family") {
    const PhotonNumberModel p = thinned(Poisson{5.0}, 0.24);
    CHECK(std::get<Poisson>(p).nbar == doctest::Approx(1.2).epsilon(1e-15));

    const PhotonNumberModel t = thinned(MultimodeThermal{10.0, 2.0}, 0.4);
    CHECK(std::get<MultimodeThermal>(t).nbar == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(std::get<MultimodeThermal>(t).mu == 2.0);

    const PhotonNumberModel b = thinned(BinomialSource{5, 0.8}, 0.6);
    CHECK(std::get<BinomialSource>(b).max_photons == 5);
    CHECK(std::get<BinomialSource>(b).p == doctest::Approx(0.48).epsilon(1e-15));

    CHECK_THROWS_AS(thinned(Poisson{5.0}, 0.0), ParameterError);
    CHECK_THROWS_AS(thinned(Poisson{5.0}, 1.5), ParameterError);
}

TEST_CASE("sampling is seed-deterministic") {
    const PhotonNumberModel model = MultimodeThermal{4.0, 2.0};
    RandomStream a(99), b(99);
    const std::vector<int> first = sample(model, a, 1000);
    const std::vector<int> second = sample(model, b, 1000);
    CHECK(first == second);

    RandomStream c(99);
    CHECK(sample(model, c, 0).empty());
}

TEST_CASE("empirical moments converge at one million draws") {
    constexpr std::size_t kCount = 1000000;

    RandomStream rng(7);
    const std::vector<int> pois = sample(Poisson{5.0}, rng, kCount);
    long double sum = 0.0L;
    for (int n : pois) sum += n;
    const double mean = static_cast<double>(sum / kCount);
    // 5 sigma / sqrt(count) with sigma^2 = 5.
    CHECK(std::abs(mean - 5.0) < 5.0 * std::sqrt(5.0 / kCount));

    RandomStream rng2(8);
    const std::vector<int> therm = sample(MultimodeThermal{4.0, 2.0}, rng2, kCount);
    long double s = 0.0L;
    for (int n : therm) s += n;
    const long double m = s / kCount;
    long double ss = 0.0L;
    for (int n : therm) {
        const long double d = n - m;
        ss += d * d;
    }
    const double var = static_cast<double>(ss / (kCount - 1));
    // Standard error of the sample variance from the fourth central moment
    // of the nbar=4, mu=2 distribution: mu4 = 876, se = 0.02705550.
    CHECK(std::abs(var - 12.0) < 5.0 * 0.0270555038);
}

TEST_CASE("samples pass a chi-square test against the pmf") {
    constexpr std::size_t kCount = 1000000;
    const std::vector<PhotonNumberModel> models = {
        Poisson{5.0}, MultimodeThermal{4.0, 2.0}, BinomialSource{10, 0.3}};
    std::uint64_t seed = 11;
    for (const auto& model : models) {
        const auto tally = testsupport::tally_samples(model, seed++, kCount);
        const double p = testsupport::gof_pvalue(tally, pmf_vector(model));
        CHECK(p > 1e-3);
    }
}

TEST_CASE("json serialization round-trips") {
    const PhotonNumberModel t = MultimodeThermal{30.0, 5.2};
    const PhotonNumberModel back = model_from_json(to_json(t));
    CHECK(std::get<MultimodeThermal>(back).nbar == 30.0);
    CHECK(std::get<MultimodeThermal>(back).mu == 5.2);

    const PhotonNumberModel b = BinomialSource{100, 0.5};
    CHECK(std::get<BinomialSource>(model_from_json(to_json(b))).max_photons == 100);

    CHECK(family_name(Poisson{1.0}) == "poisson");
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"type", "squeezed"}}),
                    ParameterError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"type", "poisson"},
                                                   {"nbar", -2.0}}),
                    ParameterError);
}

TEST_SUITE_END();
