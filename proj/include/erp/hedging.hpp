#pragma once

#include "erp/autodiff.hpp"
#include "erp/instruments.hpp"
#include "erp/kernels.hpp"
#include "erp/lstm.hpp"
#include "erp/market.hpp"
#include "erp/portfolio.hpp"
#include "erp/risk.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace erp {

/// Policy-independent inputs of the hedging problem for a set of paths.
/// Per-period matrices are N x paths so a batch is a column gather.
struct HedgingData {
    InstrumentSpec spec;
    FeatureLayout layout;
    TargetOption target;
    int periods = 0;
    double growth = 1.0;          // exp(r Delta_N)
    double terminal_account = 1.0;  // B_N

    Eigen::MatrixXd log_moneyness;            // N x paths
    Eigen::MatrixXd aux;                      // N x paths or empty
    Eigen::MatrixXd iv;                       // N x paths or empty
    std::vector<Eigen::MatrixXd> price_diff;  // per traded asset, N x paths: S_end - growth * S_begin
    Eigen::RowVectorXd payoff;                // paths
    Eigen::RowVectorXd terminal_spot;         // paths

    Eigen::Index paths() const { return payoff.size(); }
};

HedgingData make_hedging_data(const PathBundle& bundle, const InstrumentSpec& spec, const MarketGrid& grid,
                              const TargetOption& target, const FeatureLayout& layout);

/// Inputs of a batch, laid out units x batch per period.
struct BatchInputs {
    std::vector<Eigen::MatrixXd> log_moneyness;  // 1 x B
    std::vector<Eigen::MatrixXd> extra;          // (aux, iv rows) x B, or empty matrices
    std::vector<Eigen::MatrixXd> price_diff;     // traded x B
    Eigen::MatrixXd payoff;                      // 1 x B
    double growth = 1.0;

    Eigen::Index batch() const { return payoff.cols(); }
};

BatchInputs gather_batch(const HedgingData& data, std::span<const Eigen::Index> paths);
BatchInputs gather_range(const HedgingData& data, Eigen::Index begin, Eigen::Index end);

/// Records every operation on a tape.
struct TapeBackend {
    using V = ad::Var;
    ad::Tape& tape;

    V constant(const Eigen::MatrixXd& m) { return tape.constant(m); }
    V add(V a, V b) { return tape.add(a, b); }
    V sub(V a, V b) { return tape.sub(a, b); }
    V mul(V a, V b) { return tape.mul(a, b); }
    V scale(V a, double s) { return tape.scale(a, s); }
    V tanh(V a) { return tape.tanh(a); }
    V relu(V a) { return tape.relu(a); }
    V sum_rows(V a) { return tape.sum_rows(a); }
    V sum(V a) { return tape.sum(a); }
    V broadcast(V a, Eigen::Index cols) { return tape.broadcast(a, cols); }
    V gather(V a, Eigen::Index r, Eigen::Index c) { return tape.gather(a, r, c); }
    V vstack(std::span<const V> parts) { return tape.vstack(parts); }
    V affine(std::span<const V> terms, V bias, kernels::Activation act) { return tape.affine(terms, bias, act); }
    const Eigen::MatrixXd& value(V v) const { return tape.value(v); }
};

/// Evaluates with the same kernels as the tape, keeping only values.
struct PlainBackend {
    using V = Eigen::MatrixXd;

    V constant(const Eigen::MatrixXd& m) { return m; }
    V add(const V& a, const V& b) { V o; kernels::add(a, b, o); return o; }
    V sub(const V& a, const V& b) { V o; kernels::sub(a, b, o); return o; }
    V mul(const V& a, const V& b) { V o; kernels::mul(a, b, o); return o; }
    V scale(const V& a, double s) { V o; kernels::scale(a, s, o); return o; }
    V tanh(const V& a) { V o; kernels::tanh(a, o); return o; }
    V relu(const V& a) { V o; kernels::relu(a, o); return o; }
    V sum_rows(const V& a) { V o; kernels::sum_rows(a, o); return o; }
    V sum(const V& a) { V o(1, 1); o(0, 0) = kernels::sum(a); return o; }
    V broadcast(const V& a, Eigen::Index cols) { V o; kernels::broadcast(a, cols, o); return o; }
    V gather(const V& a, Eigen::Index r, Eigen::Index c) { V o(1, 1); o(0, 0) = a(r, c); return o; }
    V vstack(std::span<const V> parts) {
        std::vector<const V*> ptrs;
        for (const auto& p : parts) ptrs.push_back(&p);
        V o;
        kernels::vstack(ptrs, o);
        return o;
    }
    V affine(std::span<const V> terms, const V& bias, kernels::Activation act) {
        std::vector<const V*> ws, xs;
        for (std::size_t k = 0; k + 1 < terms.size(); k += 2) {
            ws.push_back(&terms[k]);
            xs.push_back(&terms[k + 1]);
        }
        V o;
        kernels::affine(ws, xs, bias.size() ? &bias : nullptr, act, o);
        return o;
    }
    const Eigen::MatrixXd& value(const V& v) const { return v; }
};

/// Network parameters as backend handles.
template <class Be>
struct NetHandles {
    struct Cell {
        std::array<typename Be::V, 4> U, W, b;
    };
    std::vector<Cell> cells;
    typename Be::V Wy, by;
};

/// Leaves on the tape in LstmParams::tensors() order.
NetHandles<TapeBackend> tape_leaves(ad::Tape& tape, const LstmParams& params, std::vector<ad::Var>& leaves);
NetHandles<PlainBackend> plain_handles(const LstmParams& params);

/// Called after each period with the policy output (traded x B) and the
/// portfolio value at the end of the period (1 x B).
template <class Be>
using RolloutObserver = std::function<void(int, const typename Be::V&, const typename Be::V&)>;

/// Runs the policy over all periods, feeding the portfolio value back into
/// the features, and returns the terminal value V_N (1 x B).
template <class Be>
typename Be::V rollout(Be& be, const NetHandles<Be>& net, const BatchInputs& in, typename Be::V value,
                       const RolloutObserver<Be>& observer = {}) {
    using V = typename Be::V;
    using kernels::Activation;
    const std::size_t n_cells = net.cells.size();
    std::vector<V> h(n_cells), c(n_cells);
    const int periods = static_cast<int>(in.log_moneyness.size());
    for (int n = 0; n < periods; ++n) {
        const bool first = n == 0;
        std::vector<V> parts{be.constant(in.log_moneyness[n]), value};
        if (in.extra[n].size() > 0) parts.push_back(be.constant(in.extra[n]));
        V x = be.vstack(parts);
        for (std::size_t j = 0; j < n_cells; ++j) {
            const auto& cell = net.cells[j];
            std::array<V, 4> gate;
            for (int g = 0; g < 4; ++g) {
                const Activation act = g == gate_candidate ? Activation::tanh : Activation::sigmoid;
                if (first) {
                    // Zero initial state: the recurrent term vanishes exactly.
                    const std::array<V, 2> terms{cell.U[g], x};
                    gate[g] = be.affine(terms, cell.b[g], act);
                } else {
                    const std::array<V, 4> terms{cell.U[g], x, cell.W[g], h[j]};
                    gate[g] = be.affine(terms, cell.b[g], act);
                }
            }
            V ig = be.mul(gate[gate_input], gate[gate_candidate]);
            c[j] = first ? ig : be.add(be.mul(gate[gate_forget], c[j]), ig);
            h[j] = be.mul(gate[gate_output], be.tanh(c[j]));
            x = h[j];
        }
        const std::array<V, 2> out_terms{net.Wy, x};
        V y = be.affine(out_terms, net.by, Activation::identity);
        V gain = be.sum_rows(be.mul(y, be.constant(in.price_diff[n])));
        value = be.add(be.scale(value, in.growth), gain);
        if (observer) observer(n, y, value);
    }
    return value;
}

/// Empirical CVaR of a 1 x B row of losses, VaR element fixed by value.
template <class Be>
typename Be::V cvar_of(Be& be, const typename Be::V& losses, double alpha) {
    const Eigen::MatrixXd& vals = be.value(losses);
    const VarCvar vc = empirical_var_cvar(std::span<const double>(vals.data(), vals.size()), alpha);
    auto var = be.gather(losses, 0, static_cast<Eigen::Index>(vc.var_index));
    auto excess = be.relu(be.sub(losses, be.broadcast(var, vals.cols())));
    const double w = 1.0 / ((1.0 - alpha) * static_cast<double>(vals.cols()));
    return be.add(var, be.scale(be.sum(excess), w));
}

/// Hedging errors (1 x B): Phi - V_N for the short side, -Phi - V_N for the long side.
template <class Be>
typename Be::V hedging_errors(Be& be, Side side, const BatchInputs& in, const typename Be::V& terminal) {
    const Eigen::MatrixXd target = side == Side::short_position ? in.payoff : Eigen::MatrixXd(-in.payoff);
    return be.sub(be.constant(target), terminal);
}

/// Mean squared replication error mean((Phi - V_N)^2).
template <class Be>
typename Be::V squared_error(Be& be, const BatchInputs& in, const typename Be::V& terminal) {
    auto diff = be.sub(be.constant(in.payoff), terminal);
    return be.scale(be.sum(be.mul(diff, diff)), 1.0 / static_cast<double>(in.batch()));
}

/// Terminal values for every path of `data`, evaluated in chunks.
Eigen::RowVectorXd evaluate_terminal_values(const HedgingData& data, const LstmParams& params, double initial_value,
                                            Eigen::Index chunk = 2000);

/// Hedging errors for every path of `data` with the given side.
Eigen::RowVectorXd evaluate_errors(const HedgingData& data, const LstmParams& params, Side side,
                                   double initial_value = 0.0);

/// Per-period positions and values of each path in [begin, end), for audits.
struct RolloutRecord {
    std::vector<Eigen::MatrixXd> outputs;  // per period, traded x B
    std::vector<Eigen::MatrixXd> values;   // V_0..V_N, each 1 x B
};
RolloutRecord record_rollout(const HedgingData& data, const LstmParams& params, double initial_value,
                             Eigen::Index begin, Eigen::Index end);

}  // namespace erp
