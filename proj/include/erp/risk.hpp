#pragma once

#include <cstddef>
#include <span>

namespace erp {

enum class RiskMeasure { cvar };

struct RiskSpec {
    RiskMeasure measure = RiskMeasure::cvar;
    double alpha = 0.95;

    void validate() const;
};

struct VarCvar {
    double var = 0.0;
    double cvar = 0.0;
    /// Position in the input batch of the element selected as VaR.
    std::size_t var_index = 0;
};

/// 1-based rank of the VaR order statistic: ceil(alpha * n), guarded against
/// products that land a rounding error above an integer.
std::size_t var_rank(std::size_t n, double alpha);

/// Empirical VaR and CVaR of a batch of losses: VaR is the var_rank-th
/// smallest loss (ties broken by batch order) and
/// CVaR = VaR + sum(max(loss - VaR, 0)) / ((1 - alpha) n).
VarCvar empirical_var_cvar(std::span<const double> losses, double alpha);

}  // namespace erp
