#include "erp/market.hpp"

#include "erp/errors.hpp"
#include "erp/parallel.hpp"
#include "erp/random.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace erp {

namespace {

void require_finite(double x, const char* name) {
    if (!std::isfinite(x)) throw ParameterError(std::string(name) + " must be finite");
}

PathBundle make_bundle(const MarketGrid& grid, int n_paths, const SimulationOptions& options) {
    grid.validate();
    if (n_paths < 1) throw ConfigError("number of paths must be positive");
    if (!(options.spot0 > 0.0) || !std::isfinite(options.spot0)) throw ParameterError("spot0 must be positive");
    PathBundle b;
    b.n_paths = n_paths;
    b.periods = grid.periods;
    b.days_per_period = grid.days_per_period;
    b.spot0 = options.spot0;
    b.daily_log_returns.resize(n_paths, grid.total_days());
    b.period_log_returns.resize(n_paths, grid.periods);
    b.spot.resize(n_paths, grid.periods + 1);
    if (options.keep_innovations) b.innovations.resize(n_paths, grid.total_days());
    return b;
}

// Fills period returns and spot prices of row p from its daily returns.
void finish_row(PathBundle& b, Eigen::Index p) {
    const int m = b.days_per_period;
    b.spot(p, 0) = b.spot0;
    for (int n = 0; n < b.periods; ++n) {
        double sum = 0.0;
        for (int d = 0; d < m; ++d) sum += b.daily_log_returns(p, n * m + d);
        b.period_log_returns(p, n) = sum;
        b.spot(p, n + 1) = b.spot(p, n) * std::exp(sum);
    }
}

}  // namespace

MarketGrid MarketGrid::make(double maturity, int periods, int days_per_period, double rate) {
    MarketGrid g{maturity, periods, days_per_period, rate};
    g.validate();
    return g;
}

void MarketGrid::validate() const {
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw ConfigError("maturity must be positive");
    if (periods < 1 || days_per_period < 1) throw ConfigError("periods and days per period must be >= 1");
    if (!std::isfinite(rate)) throw ConfigError("rate must be finite");
    const double days = kTradingDaysPerYear * maturity;
    if (std::abs(days - static_cast<double>(periods) * days_per_period) > 1e-9) {
        throw ConfigError("periods * days_per_period (" + std::to_string(periods * days_per_period) +
                          ") must equal 252 * maturity (" + std::to_string(days) + ")");
    }
}

double MarketGrid::discount_factor(int n) const { return std::exp(rate * time(n)); }

double MarketGrid::growth() const { return std::exp(rate * period_length()); }

void MjdParams::validate() const {
    require_finite(nu, "nu");
    require_finite(sigma, "sigma");
    require_finite(lambda, "lambda");
    require_finite(mu_j, "mu_j");
    require_finite(sigma_j, "sigma_j");
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
    if (lambda < 0.0) throw ParameterError("lambda must be non-negative");
    if (sigma_j < 0.0) throw ParameterError("sigma_j must be non-negative");
}

double MjdParams::daily_drift() const {
    const double compensator = lambda * (std::exp(mu_j + 0.5 * sigma_j * sigma_j) - 1.0);
    return (nu - compensator - 0.5 * sigma * sigma) / 252.0;
}

double MjdParams::annual_volatility() const {
    return std::sqrt(sigma * sigma + lambda * (mu_j * mu_j + sigma_j * sigma_j));
}

void GarchParams::validate() const {
    require_finite(mu, "mu");
    require_finite(omega, "omega");
    require_finite(upsilon, "upsilon");
    require_finite(gamma, "gamma");
    require_finite(beta, "beta");
    if (!(omega > 0.0)) throw ParameterError("omega must be positive");
    if (!(upsilon > 0.0) || !(beta > 0.0)) throw ParameterError("upsilon and beta must be positive");
    if (!(persistence() < 1.0)) {
        throw ParameterError("GARCH persistence upsilon*(1+gamma^2)+beta = " + std::to_string(persistence()) +
                             " must be < 1");
    }
}

double GarchParams::stationary_variance() const {
    validate();
    return omega / (1.0 - persistence());
}

double GarchParams::annual_volatility() const { return std::sqrt(kTradingDaysPerYear * stationary_variance()); }

void BsmParams::validate() const {
    require_finite(mu, "mu");
    require_finite(sigma, "sigma");
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
}

void IvParams::validate() const {
    require_finite(kappa, "kappa");
    require_finite(theta, "theta");
    require_finite(sigma_iv, "sigma_iv");
    require_finite(rho, "rho");
    if (!(kappa > 0.0 && kappa < 2.0)) throw ParameterError("kappa must lie in (0, 2)");
    if (sigma_iv < 0.0) throw ParameterError("sigma_iv must be non-negative");
    if (rho < -1.0 || rho > 1.0) throw ParameterError("rho must lie in [-1, 1]");
}

double IvParams::stationary_variance() const {
    validate();
    return sigma_iv * sigma_iv / (kappa * (2.0 - kappa));
}

PathBundle simulate_mjd(const MjdParams& params, const MarketGrid& grid, int n_paths, std::uint64_t seed,
                        const SimulationOptions& options) {
    params.validate();
    PathBundle b = make_bundle(grid, n_paths, options);
    const double drift = params.daily_drift();
    const double diffusion = params.sigma * std::sqrt(kDailyStep);
    const double jump_rate = params.lambda * kDailyStep;
    const int days = grid.total_days();
    parallel_for(static_cast<std::size_t>(n_paths), options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t ip = begin; ip < end; ++ip) {
            const auto p = static_cast<Eigen::Index>(ip);
            PathStream eq(seed, ip, StreamTag::equity);
            PathStream jumps(seed, ip, StreamTag::jumps);
            for (int t = 0; t < days; ++t) {
                const double eps = eq.normal();
                double jump_sum = 0.0;
                if (jump_rate > 0.0) {
                    const unsigned count = jumps.poisson(jump_rate);
                    for (unsigned j = 0; j < count; ++j) jump_sum += params.mu_j + params.sigma_j * jumps.normal();
                }
                b.daily_log_returns(p, t) = drift + diffusion * eps + jump_sum;
                if (options.keep_innovations) b.innovations(p, t) = eps;
            }
            finish_row(b, p);
        }
    });
    return b;
}

void garch_recursion(const GarchParams& params, std::span<const double> innovations, double initial_variance,
                     std::span<double> returns, std::span<double> variances) {
    if (returns.size() != innovations.size() || variances.size() != innovations.size() + 1) {
        throw ShapeError("garch_recursion: returns must match innovations and variances must have one more entry");
    }
    if (!(initial_variance > 0.0)) throw DomainError("garch_recursion: initial variance must be positive");
    double var = initial_variance;
    for (std::size_t t = 0; t < innovations.size(); ++t) {
        const double eps = innovations[t];
        variances[t] = var;
        returns[t] = params.mu + std::sqrt(var) * eps;
        const double shock = std::abs(eps) - params.gamma * eps;
        var = params.omega + params.upsilon * var * shock * shock + params.beta * var;
    }
    variances[innovations.size()] = var;
}

PathBundle simulate_garch(const GarchParams& params, const MarketGrid& grid, int n_paths, std::uint64_t seed,
                          const SimulationOptions& options) {
    params.validate();
    PathBundle b = make_bundle(grid, n_paths, options);
    b.aux_state.resize(n_paths, grid.periods);
    const double v0 = params.stationary_variance();
    const int days = grid.total_days();
    const int m = grid.days_per_period;
    parallel_for(static_cast<std::size_t>(n_paths), options.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> eps(days), ret(days), var(days + 1);
        for (std::size_t ip = begin; ip < end; ++ip) {
            const auto p = static_cast<Eigen::Index>(ip);
            PathStream eq(seed, ip, StreamTag::equity);
            for (int t = 0; t < days; ++t) eps[t] = eq.normal();
            garch_recursion(params, eps, v0, ret, var);
            for (int t = 0; t < days; ++t) {
                b.daily_log_returns(p, t) = ret[t];
                if (options.keep_innovations) b.innovations(p, t) = eps[t];
            }
            for (int n = 0; n < grid.periods; ++n) b.aux_state(p, n) = std::sqrt(var[n * m]);
            finish_row(b, p);
        }
    });
    return b;
}

PathBundle simulate_bsm(const BsmParams& params, const MarketGrid& grid, int n_paths, std::uint64_t seed,
                        const SimulationOptions& options) {
    params.validate();
    PathBundle b = make_bundle(grid, n_paths, options);
    const double drift = (params.mu - 0.5 * params.sigma * params.sigma) / 252.0;
    const double diffusion = params.sigma * std::sqrt(kDailyStep);
    const int days = grid.total_days();
    parallel_for(static_cast<std::size_t>(n_paths), options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t ip = begin; ip < end; ++ip) {
            const auto p = static_cast<Eigen::Index>(ip);
            PathStream eq(seed, ip, StreamTag::equity);
            for (int t = 0; t < days; ++t) {
                const double eps = eq.normal();
                b.daily_log_returns(p, t) = drift + diffusion * eps;
                if (options.keep_innovations) b.innovations(p, t) = eps;
            }
            finish_row(b, p);
        }
    });
    return b;
}

double correlated_shock(double rho, double eps, double z_perp) {
    return rho * eps + std::sqrt(1.0 - rho * rho) * z_perp;
}

void iv_log_recursion(const IvParams& params, std::span<const double> shocks, double log_iv0,
                      std::span<double> log_iv) {
    if (log_iv.size() != shocks.size() + 1) throw ShapeError("iv_log_recursion: output needs one more entry");
    double x = log_iv0;
    log_iv[0] = x;
    for (std::size_t t = 0; t < shocks.size(); ++t) {
        x = x + params.kappa * (params.theta - x) + params.sigma_iv * shocks[t];
        log_iv[t + 1] = x;
    }
}

RowMatrix simulate_iv(const IvParams& params, const MarketGrid& grid, const RowMatrix& stock_innovations,
                      std::uint64_t seed, int threads) {
    params.validate();
    grid.validate();
    const int days = grid.total_days();
    if (stock_innovations.cols() != days || stock_innovations.rows() < 1) {
        throw ShapeError("simulate_iv: expected innovations with " + std::to_string(days) + " columns, got " +
                         std::to_string(stock_innovations.cols()));
    }
    const Eigen::Index n_paths = stock_innovations.rows();
    const int m = grid.days_per_period;
    RowMatrix iv(n_paths, grid.periods);
    parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> z(days), log_iv(days + 1);
        for (std::size_t ip = begin; ip < end; ++ip) {
            const auto p = static_cast<Eigen::Index>(ip);
            PathStream perp(seed, ip, StreamTag::implied_vol);
            for (int t = 0; t < days; ++t) z[t] = correlated_shock(params.rho, stock_innovations(p, t), perp.normal());
            iv_log_recursion(params, z, params.theta, log_iv);
            for (int n = 0; n < grid.periods; ++n) iv(p, n) = std::exp(log_iv[n * m]);
        }
    });
    return iv;
}

std::vector<double> aggregate_daily_to_period(std::span<const double> daily, int days_per_period) {
    if (days_per_period < 1) throw ConfigError("days per period must be >= 1");
    if (daily.size() % static_cast<std::size_t>(days_per_period) != 0) {
        throw ShapeError("daily series length is not a multiple of days per period");
    }
    std::vector<double> out(daily.size() / days_per_period, 0.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
        double sum = 0.0;
        for (int d = 0; d < days_per_period; ++d) sum += daily[n * days_per_period + d];
        out[n] = sum;
    }
    return out;
}

void write_paths_csv(const PathBundle& b, std::ostream& out) {
    out << "path_id,n,S_n,y_n,phi_n,IV_n\n";
    out.precision(17);
    for (int p = 0; p < b.n_paths; ++p) {
        for (int n = 0; n <= b.periods; ++n) {
            out << p << ',' << n << ',' << b.spot(p, n) << ',';
            if (n < b.periods) out << b.period_log_returns(p, n);
            out << ',';
            if (n < b.periods && b.has_aux()) out << b.aux_state(p, n);
            out << ',';
            if (n < b.periods && b.has_iv()) out << b.iv_state(p, n);
            out << '\n';
        }
    }
}

}  // namespace erp
