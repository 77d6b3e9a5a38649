#include "erp/instruments.hpp"

#include "erp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace erp {

namespace {

void check_bs_inputs(double spot, double vol, double tenor, double strike, double rate) {
    if (!(spot > 0.0) || !(strike > 0.0) || !(vol > 0.0) || !(tenor > 0.0)) {
        throw DomainError("Black-Scholes inputs require spot, strike, vol and tenor > 0");
    }
    if (!std::isfinite(spot) || !std::isfinite(strike) || !std::isfinite(vol) || !std::isfinite(tenor) ||
        !std::isfinite(rate)) {
        throw DomainError("Black-Scholes inputs must be finite");
    }
}

struct D12 {
    double d1;
    double d2;
};

D12 d_terms(double spot, double vol, double tenor, double strike, double rate) {
    const double vs = vol * std::sqrt(tenor);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * tenor) / vs;
    return {d1, d1 - vs};
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bs_call(double spot, double vol, double tenor, double strike, double rate) {
    check_bs_inputs(spot, vol, tenor, strike, rate);
    const auto [d1, d2] = d_terms(spot, vol, tenor, strike, rate);
    return spot * normal_cdf(d1) - std::exp(-rate * tenor) * strike * normal_cdf(d2);
}

double bs_put(double spot, double vol, double tenor, double strike, double rate) {
    check_bs_inputs(spot, vol, tenor, strike, rate);
    const auto [d1, d2] = d_terms(spot, vol, tenor, strike, rate);
    return std::exp(-rate * tenor) * strike * normal_cdf(-d2) - spot * normal_cdf(-d1);
}

double payoff_put(double spot_at_expiry, double strike) { return std::max(strike - spot_at_expiry, 0.0); }

PeriodInstruments build_period_instruments(const PathBundle& bundle, const InstrumentSpec& spec,
                                           const MarketGrid& grid) {
    const Eigen::Index paths = bundle.n_paths;
    const int n_periods = bundle.periods;
    if (n_periods != grid.periods) throw ShapeError("path bundle and grid disagree on the number of periods");
    PeriodInstruments out;
    if (!spec.uses_options()) {
        out.begin.push_back(bundle.spot.leftCols(n_periods));
        out.end.push_back(bundle.spot.rightCols(n_periods));
        return out;
    }
    if (!bundle.has_iv()) throw ConfigError("option hedging requires simulated implied volatility");
    const double dt = grid.period_length();
    RowMatrix call_b(paths, n_periods), call_e(paths, n_periods), put_b(paths, n_periods), put_e(paths, n_periods);
    for (Eigen::Index p = 0; p < paths; ++p) {
        for (int n = 0; n < n_periods; ++n) {
            const double s = bundle.spot(p, n);
            const double s_next = bundle.spot(p, n + 1);
            const double iv = bundle.iv_state(p, n);
            call_b(p, n) = bs_call(s, iv, dt, s, grid.rate);
            put_b(p, n) = bs_put(s, iv, dt, s, grid.rate);
            call_e(p, n) = std::max(s_next - s, 0.0);
            put_e(p, n) = std::max(s - s_next, 0.0);
        }
    }
    out.begin = {std::move(call_b), std::move(put_b)};
    out.end = {std::move(call_e), std::move(put_e)};
    return out;
}

}  // namespace erp
