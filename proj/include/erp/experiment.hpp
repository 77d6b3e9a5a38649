#pragma once

#include "erp/lstm.hpp"
#include "erp/pricing.hpp"
#include "erp/scenarios.hpp"
#include "erp/training.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace erp {

enum class HedgeMenu { daily_stock, monthly_stock, one_month_options, three_month_options };

std::string to_string(HedgeMenu h);
HedgeMenu parse_hedge(const std::string& name);
MarketGrid hedge_grid(HedgeMenu h, double rate = 0.03);
InstrumentSpec hedge_instruments(HedgeMenu h);

/// Named training sizes. `smoke` is a tiny preset for quick checks.
TrainConfig scale_preset(const std::string& name);

struct ExperimentConfig {
    ModelKind model = ModelKind::bsm;
    int scenario = 15;
    HedgeMenu hedge = HedgeMenu::daily_stock;
    double strike = 100.0;
    double alpha = 0.95;
    std::string scale = "desk";
    std::uint64_t seed = 1;
    /// Long-run implied volatility; the model default when unset.
    std::optional<double> iv_level;
    bool with_vo = true;
    std::vector<int> hidden{24, 24};
    double rate = 0.03;
    double spot0 = 100.0;
    int threads = 1;
    /// Overrides of the scale preset.
    std::optional<int> n_train;
    std::optional<int> n_epochs;
    std::optional<int> batch_size;
    std::optional<int> n_test;
    std::optional<double> learning_rate;

    void validate() const;
    TrainConfig train_config() const;
    double effective_iv_level() const;
    /// Canonical key=value text of every field that affects results.
    std::string canonical() const;
    /// 16 hex digits of FNV-1a over canonical().
    std::string hash() const;
};

/// Applies `key=value` lines (blank lines and # comments ignored) to `cfg`.
void apply_config_text(const std::string& text, ExperimentConfig& cfg);
void apply_config_file(const std::string& path, ExperimentConfig& cfg);
void apply_config_value(const std::string& key, const std::string& value, ExperimentConfig& cfg);

struct ExperimentResult {
    ExperimentConfig config;
    PricingResult pricing;
    TrainResult long_run;
    TrainResult short_run;
    std::optional<TrainResult> vo_run;
    double wall_seconds = 0.0;
};

using ProgressLog = std::function<void(const std::string&)>;

/// Simulates, trains both sides (and the variance-optimal benchmark when
/// enabled), and prices on the held-out test paths.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressLog& progress = {});

/// Simulated training and test paths of an experiment.
PathBundle simulate_model(const ExperimentConfig& cfg, const MarketGrid& grid, int n_paths, std::uint64_t seed);

/// Initial capital guess of the variance-optimal run: Black-Scholes put at the
/// time-0 implied volatility (options) or the model's stationary volatility.
double vo_initial_guess(const ExperimentConfig& cfg);

void write_pricing_header(std::ostream& out);
void write_pricing_row(const ExperimentResult& r, std::ostream& out);

/// Table templates: T3, T5, T6, T7, T8, SM1..SM8.
struct TableCell {
    ExperimentConfig config;
    /// Label of the swept dimensions (scenario, iv level, alpha).
    std::string column;
};

std::vector<std::string> table_ids();
std::vector<TableCell> table_cells(const std::string& table_id, const std::string& scale, std::uint64_t seed);

struct TableOptions {
    bool relative = false;
    int threads = 1;
    /// Overrides applied to every cell (key=value pairs).
    std::map<std::string, std::string> overrides;
};

/// Runs every cell and writes one CSV. Variance-optimal prices are trained
/// only for tables that report them and shared across alpha levels.
void run_table(const std::string& table_id, const std::string& scale, std::uint64_t seed, const TableOptions& options,
               std::ostream& out, const ProgressLog& progress = {});

}  // namespace erp
