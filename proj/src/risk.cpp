#include "erp/risk.hpp"

#include "erp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace erp {

void RiskSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1), got " + std::to_string(alpha));
}

std::size_t var_rank(std::size_t n, double alpha) {
    const double x = alpha * static_cast<double>(n);
    const auto rank = static_cast<std::size_t>(std::ceil(x - 1e-12 * static_cast<double>(n)));
    return std::clamp<std::size_t>(rank, 1, n);
}

VarCvar empirical_var_cvar(std::span<const double> losses, double alpha) {
    if (losses.empty()) throw DomainError("empirical CVaR of an empty batch");
    RiskSpec{RiskMeasure::cvar, alpha}.validate();
    for (double x : losses) {
        if (!std::isfinite(x)) throw NumericError("non-finite loss in CVaR batch");
    }
    const std::size_t n = losses.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    VarCvar out;
    out.var_index = order[var_rank(n, alpha) - 1];
    out.var = losses[out.var_index];
    double excess = 0.0;
    for (double x : losses) excess += std::max(x - out.var, 0.0);
    out.cvar = out.var + excess / ((1.0 - alpha) * static_cast<double>(n));
    return out;
}

}  // namespace erp
