#include "erp/portfolio.hpp"

#include "erp/errors.hpp"

#include <cmath>
#include <ostream>

namespace erp {

double step_portfolio(double value_prev, std::span<const double> positions, std::span<const double> price_begin,
                      std::span<const double> price_end, const MarketGrid& grid) {
    if (positions.size() != price_begin.size() || positions.size() != price_end.size()) {
        throw ShapeError("step_portfolio: positions and price vectors differ in length");
    }
    const double g = grid.growth();
    double gain = 0.0;
    for (std::size_t a = 0; a < positions.size(); ++a) gain += positions[a] * (price_end[a] - g * price_begin[a]);
    return g * value_prev + gain;
}

std::vector<double> discounted_gains(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& price_begin,
                                     const Eigen::MatrixXd& price_end, const MarketGrid& grid) {
    if (positions.rows() != price_begin.rows() || positions.rows() != price_end.rows() ||
        positions.cols() != price_begin.cols() || positions.cols() != price_end.cols()) {
        throw ShapeError("discounted_gains: positions and prices differ in shape");
    }
    std::vector<double> gains(positions.rows() + 1, 0.0);
    for (Eigen::Index k = 1; k <= positions.rows(); ++k) {
        const double bk = grid.discount_factor(static_cast<int>(k));
        const double bk1 = grid.discount_factor(static_cast<int>(k - 1));
        double inc = 0.0;
        for (Eigen::Index a = 0; a < positions.cols(); ++a) {
            inc += positions(k - 1, a) * (price_end(k - 1, a) / bk - price_begin(k - 1, a) / bk1);
        }
        gains[k] = gains[k - 1] + inc;
    }
    return gains;
}

double hedging_error_short(double terminal_value, double spot_at_expiry, const TargetOption& target) {
    return payoff_put(spot_at_expiry, target.strike) - terminal_value;
}

double hedging_error_long(double terminal_value, double spot_at_expiry, const TargetOption& target) {
    return -payoff_put(spot_at_expiry, target.strike) - terminal_value;
}

double hedging_error(Side side, double terminal_value, double spot_at_expiry, const TargetOption& target) {
    return side == Side::short_position ? hedging_error_short(terminal_value, spot_at_expiry, target)
                                        : hedging_error_long(terminal_value, spot_at_expiry, target);
}

PortfolioTrace build_trace(double initial_value, const Eigen::MatrixXd& traded_positions,
                           const Eigen::MatrixXd& price_begin, const Eigen::MatrixXd& price_end,
                           const InstrumentSpec& spec, const MarketGrid& grid, Side side, double spot_at_expiry,
                           const TargetOption& target) {
    const Eigen::Index n_periods = traded_positions.rows();
    const Eigen::Index traded = spec.traded_count();
    if (n_periods != grid.periods || traded_positions.cols() != traded || price_begin.rows() != n_periods ||
        price_end.rows() != n_periods || price_begin.cols() != traded || price_end.cols() != traded) {
        throw ShapeError("build_trace: positions or prices do not match the grid and instrument menu");
    }
    const int d = spec.option_count();
    PortfolioTrace tr;
    tr.positions = Eigen::MatrixXd::Zero(n_periods + 1, d + 2);
    tr.values.assign(n_periods + 1, 0.0);
    tr.values[0] = initial_value;
    tr.positions(0, d + 1) = initial_value;
    const int first_col = spec.uses_options() ? 1 : 0;
    for (Eigen::Index n = 1; n <= n_periods; ++n) {
        const auto row = static_cast<std::size_t>(n - 1);
        std::vector<double> pos(traded), sb(traded), se(traded);
        double risky_cost = 0.0;
        for (Eigen::Index a = 0; a < traded; ++a) {
            pos[a] = traded_positions(n - 1, a);
            sb[a] = price_begin(n - 1, a);
            se[a] = price_end(n - 1, a);
            tr.positions(n, first_col + a) = pos[a];
            risky_cost += pos[a] * sb[a];
        }
        // Cash units that make the rebalance at t_{n-1} self-financing.
        tr.positions(n, d + 1) = (tr.values[row] - risky_cost) / grid.discount_factor(static_cast<int>(n - 1));
        tr.values[row + 1] = step_portfolio(tr.values[row], pos, sb, se, grid);
    }
    tr.gains = discounted_gains(traded_positions, price_begin, price_end, grid);
    tr.hedging_error = hedging_error(side, tr.values.back(), spot_at_expiry, target);
    return tr;
}

void write_trace_csv(std::span<const PortfolioTrace> traces, std::ostream& out) {
    out.precision(17);
    const Eigen::Index cols = traces.empty() ? 0 : traces.front().positions.cols();
    out << "path_id,n,V_n,G_n";
    for (Eigen::Index c = 0; c + 1 < cols; ++c) out << ",delta_" << c;
    out << ",delta_cash\n";
    for (std::size_t p = 0; p < traces.size(); ++p) {
        const auto& tr = traces[p];
        for (std::size_t n = 0; n < tr.values.size(); ++n) {
            out << p << ',' << n << ',' << tr.values[n] << ',' << tr.gains[n];
            for (Eigen::Index c = 0; c < tr.positions.cols(); ++c) out << ',' << tr.positions(n, c);
            out << '\n';
        }
    }
}

}  // namespace erp
