#pragma once

#include "erp/market.hpp"

#include <string>
#include <vector>

namespace erp {

enum class ModelKind { mjd, garch, bsm };

std::string to_string(ModelKind m);
ModelKind parse_model(const std::string& name);

/// Jump risk scenarios 1..3.
MjdParams mjd_scenario(int id);
/// Stationary yearly volatility 10, 15 or 20 (percent).
GarchParams garch_scenario(int vol_percent);
/// Yearly volatility 10, 15 or 20 (percent), drift 0.1.
BsmParams bsm_scenario(int vol_percent);
/// Implied-volatility dynamics with the long-run level set to log(long_run_vol).
IvParams iv_params(double long_run_vol = 0.15);

/// Scenario ids valid for a model: {1,2,3} for MJD, {10,15,20} otherwise.
std::vector<int> scenario_ids(ModelKind model);

/// Long-run implied volatility paired with a scenario when options are traded:
/// 15% for MJD, the stationary volatility for GARCH and BSM.
double default_iv_level(ModelKind model, int scenario);

/// Annualized volatility used to price the initial capital guess for stock hedges.
double stationary_volatility(ModelKind model, int scenario);

}  // namespace erp
