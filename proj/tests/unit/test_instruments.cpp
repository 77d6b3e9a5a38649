#include "erp/errors.hpp"
#include "erp/instruments.hpp"
#include "erp/random.hpp"
#include "erp/scenarios.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace erp;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Big big_cdf(const Big& x) { return boost::math::erfc(-x / boost::multiprecision::sqrt(Big(2))) / 2; }

Big big_put(double s, double vol, double t, double k, double r) {
    const Big S(s), V(vol), T(t), K(k), R(r);
    const Big sd = V * boost::multiprecision::sqrt(T);
    const Big d1 = (boost::multiprecision::log(S / K) + (R + V * V / 2) * T) / sd;
    const Big d2 = d1 - sd;
    return K * boost::multiprecision::exp(-R * T) * big_cdf(-d2) - S * big_cdf(-d1);
}

}  // namespace

TEST_CASE("normal cdf against a high precision erf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(std::abs(normal_cdf(1.96) - 0.9750021048517795) <= 1e-12);
    for (int i = 0; i <= 10000; ++i) {
        const double x = -10.0 + 20.0 * i / 10000.0;
        const double oracle = static_cast<double>(big_cdf(Big(x)));
        CHECK(std::abs(normal_cdf(x) - oracle) <= 1e-12);
        CHECK(std::abs(normal_cdf(x) + normal_cdf(-x) - 1.0) <= 1e-15);
    }
    double prev = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double v = normal_cdf(-8.0 + 16.0 * i / 20000.0);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("black scholes reference values") {
    const double put = bs_put(100.0, 0.15, 1.0, 100.0, 0.03);
    CHECK(std::abs(put - 4.5296) <= 5e-4);
    CHECK(std::abs(put - static_cast<double>(big_put(100.0, 0.15, 1.0, 100.0, 0.03))) <= 1e-12);
    const double otm = bs_put(100.0, 0.15, 0.25, 110.0, 0.03);
    CHECK(std::abs(otm - static_cast<double>(big_put(100.0, 0.15, 0.25, 110.0, 0.03))) <= 1e-12);
    const double call = bs_call(100.0, 0.15, 1.0, 100.0, 0.03);
    CHECK(std::abs(call - put - (100.0 - 100.0 * std::exp(-0.03))) <= 1e-10);
}

TEST_CASE("black scholes limits") {
    CHECK(std::abs(bs_call(1e6, 0.2, 0.5, 1.0, 0.03) - (1e6 - std::exp(-0.015))) <= 1e-9);
    CHECK(bs_put(100.0, 0.2, 0.5, 1e-8, 0.03) < 1e-12);
    CHECK_THROWS_AS(bs_call(0.0, 0.2, 1.0, 100.0, 0.0), DomainError);
    CHECK_THROWS_AS(bs_call(100.0, 0.0, 1.0, 100.0, 0.0), DomainError);
    CHECK_THROWS_AS(bs_put(100.0, 0.2, 0.0, 100.0, 0.0), DomainError);
    CHECK_THROWS_AS(bs_put(100.0, 0.2, 1.0, -1.0, 0.0), DomainError);
}

TEST_CASE("put call parity, bounds and monotonicity on random inputs") {
    PathStream rng(2024, 0, StreamTag::init);
    for (int i = 0; i < 10000; ++i) {
        const double s = 50.0 + 100.0 * rng.uniform();
        const double k = 50.0 + 100.0 * rng.uniform();
        const double v = 0.05 + 0.6 * rng.uniform();
        const double t = 0.01 + 2.0 * rng.uniform();
        const double r = -0.02 + 0.1 * rng.uniform();
        const double c = bs_call(s, v, t, k, r);
        const double p = bs_put(s, v, t, k, r);
        CHECK(std::abs(c - p - (s - k * std::exp(-r * t))) <= 1e-10);
        // Deep in the money the time value is below one ulp of the price.
        const double ulp = 1e-13 * (s + k);
        CHECK(p >= std::max(k * std::exp(-r * t) - s, 0.0) - ulp);
        CHECK(bs_call(s, v * 1.01, t, k, r) >= c - ulp);
        CHECK(bs_put(s, v * 1.01, t, k, r) >= p - ulp);
        CHECK(bs_call(s, v, t, k * 1.01, r) <= c + ulp);
        CHECK(bs_put(s, v, t, k * 1.01, r) >= p - ulp);
    }
}

TEST_CASE("put payoff") {
    CHECK(payoff_put(90.0, 90.0) == 0.0);
    CHECK(payoff_put(80.0, 90.0) == 10.0);
    CHECK(payoff_put(95.5, 110.0) == 14.5);
}

TEST_CASE("instrument menus") {
    CHECK(InstrumentSpec::stock().option_count() == 0);
    CHECK(InstrumentSpec::stock().traded_count() == 1);
    CHECK_FALSE(InstrumentSpec::stock().uses_options());
    CHECK(InstrumentSpec::options().option_count() == 2);
    CHECK(InstrumentSpec::options().traded_count() == 2);
}

TEST_CASE("stock instrument prices follow the spot grid") {
    const MarketGrid g = MarketGrid::make(1.0, 12, 21, 0.03);
    const PathBundle b = simulate_mjd(mjd_scenario(2), g, 5, 4);
    const PeriodInstruments pi = build_period_instruments(b, InstrumentSpec::stock(), g);
    REQUIRE(pi.begin.size() == 1);
    for (Eigen::Index p = 0; p < 5; ++p) {
        for (int n = 0; n < 12; ++n) {
            CHECK(pi.begin[0](p, n) == b.spot(p, n));
            CHECK(pi.end[0](p, n) == b.spot(p, n + 1));
            if (n + 1 < 12) CHECK(pi.end[0](p, n) == pi.begin[0](p, n + 1));
        }
    }
    CHECK_THROWS_AS(build_period_instruments(b, InstrumentSpec::options(), g), ConfigError);
}

TEST_CASE("option instrument prices") {
    SUBCASE("flat path at the money") {
        const MarketGrid g = MarketGrid::make(1.0, 4, 63, 0.0);
        PathBundle b;
        b.n_paths = 1;
        b.periods = 4;
        b.days_per_period = 63;
        b.spot = RowMatrix::Constant(1, 5, 100.0);
        b.period_log_returns = RowMatrix::Zero(1, 4);
        b.daily_log_returns = RowMatrix::Zero(1, 252);
        b.iv_state = RowMatrix::Constant(1, 4, 0.15);
        const PeriodInstruments pi = build_period_instruments(b, InstrumentSpec::options(), g);
        REQUIRE(pi.begin.size() == 2);
        for (int n = 0; n < 4; ++n) {
            CHECK(std::abs(pi.begin[0](0, n) - pi.begin[1](0, n)) <= 1e-12);
            CHECK(pi.end[0](0, n) == 0.0);
            CHECK(pi.end[1](0, n) == 0.0);
        }
    }
    SUBCASE("random paths satisfy parity and expire at intrinsic value") {
        const MarketGrid g = MarketGrid::make(1.0, 12, 21, 0.03);
        PathBundle b = simulate_garch(garch_scenario(20), g, 20, 6);
        b.iv_state = simulate_iv(iv_params(0.2), g, b.innovations, 7);
        const PeriodInstruments pi = build_period_instruments(b, InstrumentSpec::options(), g);
        const double dt = g.period_length();
        for (Eigen::Index p = 0; p < 20; ++p) {
            for (int n = 0; n < 12; ++n) {
                const double s = b.spot(p, n);
                const double s1 = b.spot(p, n + 1);
                CHECK(pi.begin[0](p, n) == bs_call(s, b.iv_state(p, n), dt, s, 0.03));
                CHECK(pi.begin[1](p, n) == bs_put(s, b.iv_state(p, n), dt, s, 0.03));
                CHECK(std::abs(pi.begin[0](p, n) - pi.begin[1](p, n) - (s - s * std::exp(-0.03 * dt))) <= 1e-10);
                CHECK(pi.end[0](p, n) == std::max(s1 - s, 0.0));
                CHECK(pi.end[1](p, n) == std::max(s - s1, 0.0));
            }
        }
    }
}
