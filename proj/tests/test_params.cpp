#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "microlaser/errors.hpp"
#include "microlaser/params.hpp"

using namespace microlaser;

TEST_CASE("from_dimensionless applies the g = 1 convention") {
    const auto p = from_dimensionless(100, 0.001, 0.1, 0.17);
    CHECK(p.g == 1.0);
    CHECK(p.kappa == 0.001);
    CHECK(p.gamma == 0.1);
    CHECK(p.tau == 0.17);
    CHECK(p.R == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p.R * p.tau == doctest::Approx(0.034).epsilon(1e-14));
    CHECK(validate(p).empty());
}

TEST_CASE("zero flight time is a valid boundary") {
    const auto p = from_dimensionless(100, 0.01, 0.1, 0.0);
    CHECK(p.tau == 0.0);
    CHECK(validate(p).empty());
    CHECK(pump_parameter(p) == 0.0);
}

TEST_CASE("overlapping transits are rejected with the offending product") {
    // R tau = 2 * 0.01 * 100 * 3.2 = 6.4
    try {
        from_dimensionless(100, 0.01, 0.1, 3.2);
        FAIL("expected SingleAtomRegimeViolation");
    } catch (const SingleAtomRegimeViolation& e) {
        CHECK(e.product() == doctest::Approx(6.4));
        CHECK(std::string(e.what()).find("6.4") != std::string::npos);
    }
    // On the kappa/g = 0.01 curve at N = 100 the guard trips from D = 5 upward.
    CHECK_NOTHROW(from_dimensionless(100, 0.01, 0.1, 0.49));
    CHECK_THROWS_AS(from_dimensionless(100, 0.01, 0.1, 0.5), SingleAtomRegimeViolation);
    // kappa/g = 0.001: from D = 50 upward.
    CHECK_NOTHROW(from_dimensionless(100, 0.001, 0.1, 4.99));
    CHECK_THROWS_AS(from_dimensionless(100, 0.001, 0.1, 5.0), SingleAtomRegimeViolation);
}

TEST_CASE("from_dimensionless rejects out-of-domain inputs") {
    CHECK_THROWS_AS(from_dimensionless(0, 0.01, 0.1, 0.1), InvalidParameter);
    CHECK_THROWS_AS(from_dimensionless(10, 0.0, 0.1, 0.1), InvalidParameter);
    CHECK_THROWS_AS(from_dimensionless(10, 0.01, -0.1, 0.1), InvalidParameter);
    CHECK_THROWS_AS(from_dimensionless(10, 0.01, 0.1, -0.1), InvalidParameter);
    CHECK_NOTHROW(from_dimensionless(10, 0.01, 0.0, 0.1));
}

TEST_CASE("pump_parameter") {
    CHECK(pump_parameter(from_dimensionless(100, 0.0001, 0.1, std::numbers::pi)) ==
          doctest::Approx(10 * std::numbers::pi).epsilon(1e-14));
    CHECK(pump_parameter(from_dimensionless(100, 0.001, 0.1, 0.16)) == doctest::Approx(1.6).epsilon(1e-14));
}

TEST_CASE("validate lists every violation") {
    MicrolaserParams p{1.0, 0.0, 0.1, 0.2, 0.17};
    auto v = validate(p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "kappa");
    CHECK(v[0].message() == "kappa must be > 0 (got 0)");

    p = {1.0, 0.001, 0.1, 1.0, 1.5};
    v = validate(p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "R*tau");
    CHECK_THROWS_AS(require_valid(p), SingleAtomRegimeViolation);

    p = {-1.0, -1.0, -1.0, -1.0, -1.0};
    // (-1) * (-1) = 1 also breaks the R*tau bound.
    CHECK(validate(p).size() == 6);
}

TEST_CASE("round trip and pump identity over random valid inputs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> logu(-4.0, 2.0);
    int checked = 0;
    while (checked < 500) {
        const double N = std::pow(10.0, logu(rng) + 1.0);
        const double k = std::pow(10.0, logu(rng) - 1.0);
        const double gam = std::pow(10.0, logu(rng) - 1.0);
        const double gt = std::pow(10.0, logu(rng));
        if (2.0 * k * N * gt >= 1.0) continue;
        const auto p = from_dimensionless(N, k, gam, gt);
        CHECK(validate(p).empty());
        const auto d = to_dimensionless(p);
        CHECK(std::abs(d.N - N) <= 1e-14 * N);
        CHECK(std::abs(d.kappa_over_g - k) <= 1e-14 * k);
        CHECK(std::abs(d.gamma_over_g - gam) <= 1e-14 * gam);
        CHECK(std::abs(d.g_tau - gt) <= 1e-14 * gt);
        const auto back = from_dimensionless(d);
        CHECK(std::abs(back.R - p.R) <= 1e-14 * p.R);
        CHECK(std::abs(pump_parameter(p) - std::sqrt(N) * gt) <= 1e-14 * std::sqrt(N) * gt);
        ++checked;
    }
}
