#include "erp/pricing.hpp"

#include "erp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace erp {

double equal_risk_price(double eps_long, double eps_short, const MarketGrid& grid) {
    if (!std::isfinite(eps_long) || !std::isfinite(eps_short)) throw NumericError("non-finite risk exposure");
    return (eps_short - eps_long) / (2.0 * grid.discount_factor(grid.periods));
}

IncompletenessMetric epsilon_star(double eps_long, double eps_short, double price) {
    IncompletenessMetric m;
    m.eps_star = 0.5 * (eps_long + eps_short);
    if (std::abs(price) >= 1e-12) m.ratio = m.eps_star / price;
    return m;
}

PricingResult make_pricing_result(double eps_long, double eps_short, const MarketGrid& grid,
                                  std::optional<double> vo_price) {
    PricingResult r;
    r.eps_long = eps_long;
    r.eps_short = eps_short;
    r.price = equal_risk_price(eps_long, eps_short, grid);
    const IncompletenessMetric m = epsilon_star(eps_long, eps_short, r.price);
    r.eps_star = m.eps_star;
    r.eps_ratio = m.ratio;
    r.vo_price = vo_price;
    const double bn = grid.discount_factor(grid.periods);
    const double tol = 1e-12 * std::max({1.0, std::abs(eps_long), std::abs(eps_short)});
    if (std::abs(r.eps_star + bn * r.price - eps_short) > tol || std::abs(r.eps_star - bn * r.price - eps_long) > tol) {
        throw NumericError("equal risk price identities violated");
    }
    return r;
}

}  // namespace erp
