#pragma once

#include "erp/adam.hpp"
#include "erp/hedging.hpp"
#include "erp/lstm.hpp"
#include "erp/risk.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace erp {

struct TrainConfig {
    int n_train_paths = 40000;
    int n_epochs = 10;
    int batch_size = 1000;
    int n_test_paths = 20000;
    AdamConfig adam;
    std::uint64_t seed = 1;
    /// Share of the training paths held out for the per-epoch validation loss.
    double validation_fraction = 0.1;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;       // mean batch loss over the epoch
    double validation_loss = 0.0;  // loss on the held-out paths after the epoch
    double grad_norm = 0.0;        // mean Euclidean norm of the batch gradients
    double wall_seconds = 0.0;
};

struct TrainResult {
    LstmParams params;
    /// Trained initial capital (variance-optimal training only).
    double initial_value = 0.0;
    std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// CVaR-minimizing policy for the long or short put, zero initial capital.
TrainResult train_policy(Side side, const HedgingData& data, const LstmDims& dims, const RiskSpec& risk,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Joint training of a policy and the initial capital minimizing the mean
/// squared replication error.
TrainResult train_variance_optimal(const HedgingData& data, const LstmDims& dims, double initial_value_guess,
                                   const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct Exposures {
    double eps_long = 0.0;
    double eps_short = 0.0;
};

/// CVaR of the long and short hedging errors on a test set, zero initial capital.
Exposures measured_exposures(const LstmParams& long_policy, const LstmParams& short_policy, const HedgingData& test,
                             const RiskSpec& risk);

/// Empirical risk of one policy on a data set.
double policy_risk(const LstmParams& policy, Side side, const HedgingData& data, const RiskSpec& risk);

void write_training_log_csv(std::span<const EpochLog> log, std::ostream& out);

}  // namespace erp
