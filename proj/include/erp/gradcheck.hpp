#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace erp {

struct GradcheckInstance {
    std::string description;
    std::size_t checked = 0;
    /// Coordinates skipped because a perturbation crossed a max/VaR kink.
    std::size_t excluded = 0;
    double max_rel_error = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckInstance> instances;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t excluded = 0;

    bool passed(double tolerance) const { return checked > 0 && max_rel_error < tolerance; }
};

/// Compares tape gradients of hedging losses with central differences on
/// random small problems (N <= 4, M = 1, batch <= 8, one cell of width <= 4).
/// Instances cycle through long CVaR, short CVaR and variance-optimal losses,
/// stock and option hedges, and the three return models. The relative error
/// of a partial is |ad - fd| / max(|ad|, |fd|, floor).
GradcheckReport run_gradcheck(int instances, std::uint64_t seed, double step = 1e-6, double floor = 1e-3);

}  // namespace erp
