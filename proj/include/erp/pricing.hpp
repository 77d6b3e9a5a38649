#pragma once

#include "erp/market.hpp"

#include <optional>

namespace erp {

/// C0* = (eps_short - eps_long) / (2 B_N).
double equal_risk_price(double eps_long, double eps_short, const MarketGrid& grid);

struct IncompletenessMetric {
    double eps_star = 0.0;
    /// eps_star / C0*, absent when |C0*| < 1e-12.
    std::optional<double> ratio;
};

IncompletenessMetric epsilon_star(double eps_long, double eps_short, double price);

struct PricingResult {
    double eps_long = 0.0;
    double eps_short = 0.0;
    double price = 0.0;
    double eps_star = 0.0;
    std::optional<double> eps_ratio;
    std::optional<double> vo_price;
};

/// Builds the result from the two exposures and checks
/// eps_short = eps* + B_N C0* and eps_long = eps* - B_N C0*.
PricingResult make_pricing_result(double eps_long, double eps_short, const MarketGrid& grid,
                                  std::optional<double> vo_price = std::nullopt);

}  // namespace erp
