#include "erp/training.hpp"

#include "erp/errors.hpp"
#include "erp/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace erp {

namespace {

enum class Objective { cvar_long, cvar_short, variance };

Side side_of(Objective o) { return o == Objective::cvar_long ? Side::long_position : Side::short_position; }

// Seed labels keep the two sides, the variance-optimal run and each epoch's
// shuffle on distinct substreams.
constexpr std::uint64_t kInitLabel = 101;
constexpr std::uint64_t kShuffleLabel = 202;

std::uint64_t objective_label(Objective o) {
    switch (o) {
        case Objective::cvar_long: return 1;
        case Objective::cvar_short: return 2;
        case Objective::variance: return 3;
    }
    return 0;
}

double evaluate_loss(Objective objective, const HedgingData& data, const LstmParams& params, double v0,
                     const RiskSpec& risk, Eigen::Index begin, Eigen::Index end) {
    if (end <= begin) return std::nan("");
    PlainBackend be;
    const auto net = plain_handles(params);
    Eigen::RowVectorXd errors(end - begin);
    for (Eigen::Index b = begin; b < end; b += 2000) {
        const Eigen::Index e = std::min(end, b + 2000);
        const BatchInputs in = gather_range(data, b, e);
        const Eigen::MatrixXd start = Eigen::MatrixXd::Constant(1, e - b, objective == Objective::variance ? v0 : 0.0);
        const Eigen::MatrixXd vn = rollout(be, net, in, start);
        const Eigen::MatrixXd err = objective == Objective::variance
                                        ? Eigen::MatrixXd(in.payoff - vn)
                                        : hedging_errors(be, side_of(objective), in, vn);
        errors.segment(b - begin, e - b) = err.row(0);
    }
    if (objective == Objective::variance) return errors.squaredNorm() / static_cast<double>(errors.size());
    return empirical_var_cvar(std::span<const double>(errors.data(), errors.size()), risk.alpha).cvar;
}

TrainResult train(Objective objective, const HedgingData& data, const LstmDims& dims, const RiskSpec& risk,
                  double v0_init, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    risk.validate();
    if (dims.input != data.layout.size() || dims.output != data.spec.traded_count()) {
        throw ShapeError("network dimensions do not match the features or instruments");
    }
    const Eigen::Index total = data.paths();
    const auto n_val = static_cast<Eigen::Index>(std::floor(cfg.validation_fraction * static_cast<double>(total)));
    const Eigen::Index n_fit = total - n_val;
    if (n_fit < cfg.batch_size) {
        throw ConfigError("training set of " + std::to_string(n_fit) + " paths is smaller than one batch of " +
                          std::to_string(cfg.batch_size));
    }

    const std::uint64_t run_seed = derive_seed(cfg.seed, objective_label(objective));
    TrainResult result;
    result.params = glorot_init(dims, derive_seed(run_seed, kInitLabel));
    const bool with_v0 = objective == Objective::variance;
    result.initial_value = with_v0 ? v0_init : 0.0;

    Eigen::VectorXd theta(result.params.size() + (with_v0 ? 1 : 0));
    theta.head(result.params.size()) = result.params.flatten();
    if (with_v0) theta[theta.size() - 1] = result.initial_value;
    Adam adam(theta.size(), cfg.adam);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_fit));
    std::vector<ad::Var> leaves;
    Eigen::VectorXd grad(theta.size());
    ad::Tape tape;
    const Eigen::Index batches = n_fit / cfg.batch_size;

    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::mt19937_64 shuffle_rng(derive_seed(derive_seed(run_seed, kShuffleLabel), static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        double norm_sum = 0.0;
        for (Eigen::Index b = 0; b < batches; ++b) {
            const BatchInputs in = gather_batch(
                data, std::span<const Eigen::Index>(order.data() + b * cfg.batch_size, cfg.batch_size));
            tape.clear();
            TapeBackend be{tape};
            const auto net = tape_leaves(tape, result.params, leaves);
            ad::Var loss;
            if (with_v0) {
                const ad::Var v0 = tape.leaf(Eigen::MatrixXd::Constant(1, 1, result.initial_value));
                leaves.push_back(v0);
                const ad::Var vn = rollout(be, net, in, tape.broadcast(v0, in.batch()));
                loss = squared_error(be, in, vn);
            } else {
                const ad::Var vn = rollout(be, net, in, tape.constant(Eigen::MatrixXd::Zero(1, in.batch())));
                loss = cvar_of(be, hedging_errors(be, side_of(objective), in, vn), risk.alpha);
            }
            const double loss_value = tape.scalar(loss);
            tape.backward(loss);
            Eigen::Index k = 0;
            for (ad::Var v : leaves) {
                const Eigen::MatrixXd& g = tape.grad(v);
                for (Eigen::Index r = 0; r < g.rows(); ++r)
                    for (Eigen::Index c = 0; c < g.cols(); ++c) grad[k++] = g(r, c);
            }
            if (!std::isfinite(loss_value) || !grad.allFinite()) {
                throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b) + " (parameter norm " + std::to_string(theta.norm()) + ")");
            }
            adam.step(theta, grad);
            result.params.assign(theta.head(result.params.size()));
            if (with_v0) result.initial_value = theta[theta.size() - 1];
            loss_sum += loss_value;
            norm_sum += grad.norm();
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(batches);
        log.grad_norm = norm_sum / static_cast<double>(batches);
        log.validation_loss = evaluate_loss(objective, data, result.params, result.initial_value, risk, n_fit, total);
        log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return result;
}

}  // namespace

void TrainConfig::validate() const {
    if (n_train_paths < 1 || n_epochs < 0 || batch_size < 1 || n_test_paths < 1) {
        throw ConfigError("training sizes must be positive");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in [0, 1)");
    }
}

TrainResult train_policy(Side side, const HedgingData& data, const LstmDims& dims, const RiskSpec& risk,
                         const TrainConfig& cfg, const EpochCallback& on_epoch) {
    const Objective o = side == Side::long_position ? Objective::cvar_long : Objective::cvar_short;
    return train(o, data, dims, risk, 0.0, cfg, on_epoch);
}

TrainResult train_variance_optimal(const HedgingData& data, const LstmDims& dims, double initial_value_guess,
                                   const TrainConfig& cfg, const EpochCallback& on_epoch) {
    if (!std::isfinite(initial_value_guess)) throw ParameterError("initial capital guess must be finite");
    return train(Objective::variance, data, dims, RiskSpec{}, initial_value_guess, cfg, on_epoch);
}

double policy_risk(const LstmParams& policy, Side side, const HedgingData& data, const RiskSpec& risk) {
    risk.validate();
    const Eigen::RowVectorXd errors = evaluate_errors(data, policy, side);
    return empirical_var_cvar(std::span<const double>(errors.data(), errors.size()), risk.alpha).cvar;
}

Exposures measured_exposures(const LstmParams& long_policy, const LstmParams& short_policy, const HedgingData& test,
                             const RiskSpec& risk) {
    return {policy_risk(long_policy, Side::long_position, test, risk),
            policy_risk(short_policy, Side::short_position, test, risk)};
}

void write_training_log_csv(std::span<const EpochLog> log, std::ostream& out) {
    out.precision(17);
    out << "epoch,train_loss,validation_loss,grad_norm,wall_seconds\n";
    for (const auto& e : log) {
        out << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << ',' << e.grad_norm << ','
            << e.wall_seconds << '\n';
    }
}

}  // namespace erp
