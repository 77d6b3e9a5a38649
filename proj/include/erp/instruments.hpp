#pragma once

#include "erp/market.hpp"

#include <vector>

namespace erp {

enum class InstrumentKind { stock_only, atm_options };

/// Hedging menu. Options are struck at the money and held for one period.
struct InstrumentSpec {
    InstrumentKind kind = InstrumentKind::stock_only;
    int option_tenor_periods = 1;

    static InstrumentSpec stock() { return {InstrumentKind::stock_only, 1}; }
    static InstrumentSpec options() { return {InstrumentKind::atm_options, 1}; }

    /// Number of risky non-stock instruments: 0 or 2 (call, put).
    int option_count() const { return kind == InstrumentKind::atm_options ? 2 : 0; }
    /// Number of instruments the policy trades (stock or the two options).
    int traded_count() const { return kind == InstrumentKind::atm_options ? 2 : 1; }
    bool uses_options() const { return kind == InstrumentKind::atm_options; }
};

/// European put on the stock, expiring at the end of the grid.
struct TargetOption {
    double strike = 100.0;
    double maturity = 1.0;
};

double normal_cdf(double x);

double bs_call(double spot, double vol, double tenor, double strike, double rate);
double bs_put(double spot, double vol, double tenor, double strike, double rate);

double payoff_put(double spot_at_expiry, double strike);

/// Prices of the traded instruments at the start and end of each period.
/// `begin[a]` and `end[a]` are [paths x N] for traded asset `a`: the stock
/// alone for stock hedging, call then put for option hedging.
struct PeriodInstruments {
    std::vector<RowMatrix> begin;
    std::vector<RowMatrix> end;
};

PeriodInstruments build_period_instruments(const PathBundle& bundle, const InstrumentSpec& spec,
                                           const MarketGrid& grid);

}  // namespace erp
