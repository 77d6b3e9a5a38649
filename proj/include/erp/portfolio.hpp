#pragma once

#include "erp/instruments.hpp"
#include "erp/market.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace erp {

enum class Side { long_position, short_position };

/// One self-financing step: V_n = g V_{n-1} + delta . (S_end - g S_begin)
/// with g = exp(r Delta_N).
double step_portfolio(double value_prev, std::span<const double> positions, std::span<const double> price_begin,
                      std::span<const double> price_end, const MarketGrid& grid);

/// Discounted gains G_0..G_N for one path. Row n-1 of each matrix holds the
/// positions and prices of period n (shape N x assets).
std::vector<double> discounted_gains(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& price_begin,
                                     const Eigen::MatrixXd& price_end, const MarketGrid& grid);

/// Error of a short put hedged with terminal wealth V_N: Phi(S_T) - V_N.
double hedging_error_short(double terminal_value, double spot_at_expiry, const TargetOption& target);
/// Error of a long put hedged with terminal wealth V_N: -Phi(S_T) - V_N.
double hedging_error_long(double terminal_value, double spot_at_expiry, const TargetOption& target);
double hedging_error(Side side, double terminal_value, double spot_at_expiry, const TargetOption& target);

/// Full accounting of one path.
struct PortfolioTrace {
    /// Row n: positions held over period n (row 0 is the initial all-cash
    /// allocation). Columns: stock, D options, risk-free units.
    Eigen::MatrixXd positions;
    std::vector<double> values;  // V_0..V_N
    std::vector<double> gains;   // G_0..G_N
    double hedging_error = 0.0;
};

/// Rebuilds the trace of one path from its traded positions.
/// `traded_positions`, `price_begin` and `price_end` are N x traded_count.
PortfolioTrace build_trace(double initial_value, const Eigen::MatrixXd& traded_positions,
                           const Eigen::MatrixXd& price_begin, const Eigen::MatrixXd& price_end,
                           const InstrumentSpec& spec, const MarketGrid& grid, Side side, double spot_at_expiry,
                           const TargetOption& target);

/// Debug dump: path_id,n,V_n,G_n,then one column per position.
void write_trace_csv(std::span<const PortfolioTrace> traces, std::ostream& out);

}  // namespace erp
