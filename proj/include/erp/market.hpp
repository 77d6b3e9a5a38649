#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace erp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kTradingDaysPerYear = 252;
inline constexpr double kDailyStep = 1.0 / kTradingDaysPerYear;

/// Trading calendar: N rebalancing periods of M trading days over T years.
struct MarketGrid {
    double maturity = 1.0;    // T, years
    int periods = 252;        // N
    int days_per_period = 1;  // M
    double rate = 0.03;       // r, annualized continuous compounding

    static MarketGrid make(double maturity, int periods, int days_per_period, double rate);

    /// Throws ConfigError unless N, M >= 1 and N * M == 252 * T.
    void validate() const;

    double period_length() const { return maturity / periods; }
    double time(int n) const { return n * period_length(); }
    /// Risk-free account value B_n = exp(r t_n).
    double discount_factor(int n) const;
    /// One-period growth of the risk-free account, exp(r Delta_N).
    double growth() const;
    int total_days() const { return periods * days_per_period; }
};

/// Merton jump-diffusion, annual parameters except the jump size moments.
struct MjdParams {
    double nu = 0.1;
    double sigma = 0.15;
    double lambda = 0.0;
    double mu_j = 0.0;
    double sigma_j = 0.0;

    void validate() const;
    /// Drift of a single day, jump compensator and Ito term included.
    double daily_drift() const;
    /// Annualized standard deviation of log-returns.
    double annual_volatility() const;
};

/// GJR-GARCH(1,1) on daily log-returns.
struct GarchParams {
    double mu = 0.0;
    double omega = 1e-6;
    double upsilon = 0.05;
    double gamma = 0.0;
    double beta = 0.9;

    void validate() const;
    double persistence() const { return upsilon * (1.0 + gamma * gamma) + beta; }
    double stationary_variance() const;
    double annual_volatility() const;
};

/// Black-Scholes with i.i.d. Gaussian daily log-returns.
struct BsmParams {
    double mu = 0.1;
    double sigma = 0.15;

    void validate() const;
};

/// Log-AR(1) dynamics of the at-the-money implied volatility.
struct IvParams {
    double kappa = 0.15;
    double theta = -1.8971199848858813;  // log(0.15)
    double sigma_iv = 0.06;
    double rho = -0.6;

    void validate() const;
    double stationary_variance() const;
};

/// Simulated paths. Row p of every matrix belongs to path p.
struct PathBundle {
    int n_paths = 0;
    int periods = 0;
    int days_per_period = 0;
    double spot0 = 100.0;

    RowMatrix daily_log_returns;   // paths x (N*M), period-major
    RowMatrix period_log_returns;  // paths x N
    RowMatrix spot;                // paths x (N+1), S_n at the start of period n
    RowMatrix aux_state;           // paths x N (GARCH daily vol at period start) or empty
    RowMatrix iv_state;            // paths x N (implied vol at period start) or empty
    RowMatrix innovations;         // paths x (N*M) standardized equity shocks, or empty

    bool has_aux() const { return aux_state.size() > 0; }
    bool has_iv() const { return iv_state.size() > 0; }
};

struct SimulationOptions {
    double spot0 = 100.0;
    int threads = 1;
    /// Keep the equity shocks so that implied volatility can be simulated later.
    bool keep_innovations = true;
};

PathBundle simulate_mjd(const MjdParams& params, const MarketGrid& grid, int n_paths, std::uint64_t seed,
                        const SimulationOptions& options = {});
PathBundle simulate_garch(const GarchParams& params, const MarketGrid& grid, int n_paths, std::uint64_t seed,
                          const SimulationOptions& options = {});
PathBundle simulate_bsm(const BsmParams& params, const MarketGrid& grid, int n_paths, std::uint64_t seed,
                        const SimulationOptions& options = {});

/// Period-start implied volatilities [paths x N] driven by shocks correlated
/// with `stock_innovations` [paths x (N*M)].
RowMatrix simulate_iv(const IvParams& params, const MarketGrid& grid, const RowMatrix& stock_innovations,
                      std::uint64_t seed, int threads = 1);

/// Sums each block of M consecutive daily values, left to right.
std::vector<double> aggregate_daily_to_period(std::span<const double> daily, int days_per_period);

/// Deterministic GJR-GARCH recursion. `variances` receives one more entry than
/// `innovations`: the conditional variance before each day plus the one after.
void garch_recursion(const GarchParams& params, std::span<const double> innovations, double initial_variance,
                     std::span<double> returns, std::span<double> variances);

/// Deterministic log-AR(1) recursion. `log_iv` receives one more entry than
/// `shocks` (the starting value first).
void iv_log_recursion(const IvParams& params, std::span<const double> shocks, double log_iv0,
                      std::span<double> log_iv);

/// Builds Z = rho * eps + sqrt(1 - rho^2) * z_perp.
double correlated_shock(double rho, double eps, double z_perp);

/// One row per path and date: path_id,n,S_n,y_n,phi_n,IV_n (blank when undefined).
void write_paths_csv(const PathBundle& bundle, std::ostream& out);

}  // namespace erp
