#include "erp/scenarios.hpp"

#include "erp/errors.hpp"

#include <cmath>

namespace erp {

std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::mjd: return "mjd";
        case ModelKind::garch: return "garch";
        case ModelKind::bsm: return "bsm";
    }
    return "?";
}

ModelKind parse_model(const std::string& name) {
    if (name == "mjd") return ModelKind::mjd;
    if (name == "garch") return ModelKind::garch;
    if (name == "bsm") return ModelKind::bsm;
    throw ConfigError("unknown model '" + name + "' (expected mjd, garch or bsm)");
}

MjdParams mjd_scenario(int id) {
    switch (id) {
        case 1: return {0.1112, 0.1323, 1.0, -0.05, 0.05};
        case 2: return {0.1111, 0.1323, 0.25, -0.10, 0.10};
        case 3: return {0.1110, 0.1323, 0.08, -0.20, 0.15};
        default: throw ConfigError("MJD scenario must be 1, 2 or 3, got " + std::to_string(id));
    }
}

GarchParams garch_scenario(int vol_percent) {
    GarchParams p;
    p.mu = 3.968e-04;
    p.upsilon = 0.05;
    p.gamma = 0.6;
    p.beta = 0.91;
    switch (vol_percent) {
        case 10: p.omega = 8.730e-07; break;
        case 15: p.omega = 1.964e-06; break;
        case 20: p.omega = 3.492e-06; break;
        default: throw ConfigError("GARCH scenario must be 10, 15 or 20, got " + std::to_string(vol_percent));
    }
    return p;
}

BsmParams bsm_scenario(int vol_percent) {
    if (vol_percent != 10 && vol_percent != 15 && vol_percent != 20) {
        throw ConfigError("BSM scenario must be 10, 15 or 20, got " + std::to_string(vol_percent));
    }
    return {0.1, vol_percent / 100.0};
}

IvParams iv_params(double long_run_vol) {
    if (!(long_run_vol > 0.0)) throw ParameterError("long-run implied volatility must be positive");
    return {0.15, std::log(long_run_vol), 0.06, -0.6};
}

std::vector<int> scenario_ids(ModelKind model) {
    if (model == ModelKind::mjd) return {1, 2, 3};
    return {10, 15, 20};
}

double default_iv_level(ModelKind model, int scenario) {
    if (model == ModelKind::mjd) {
        mjd_scenario(scenario);
        return 0.15;
    }
    if (model == ModelKind::garch) garch_scenario(scenario);
    if (model == ModelKind::bsm) bsm_scenario(scenario);
    return scenario / 100.0;
}

double stationary_volatility(ModelKind model, int scenario) {
    switch (model) {
        case ModelKind::mjd: return mjd_scenario(scenario).annual_volatility();
        case ModelKind::garch: return garch_scenario(scenario).annual_volatility();
        case ModelKind::bsm: return bsm_scenario(scenario).sigma;
    }
    return 0.0;
}

}  // namespace erp
