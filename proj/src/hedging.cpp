#include "erp/hedging.hpp"

#include "erp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace erp {

HedgingData make_hedging_data(const PathBundle& bundle, const InstrumentSpec& spec, const MarketGrid& grid,
                              const TargetOption& target, const FeatureLayout& layout) {
    grid.validate();
    if (bundle.periods != grid.periods) throw ShapeError("path bundle and grid disagree on the number of periods");
    if (layout.aux && !bundle.has_aux()) throw ConfigError("feature layout needs an auxiliary state the model lacks");
    if (layout.iv && !bundle.has_iv()) throw ConfigError("feature layout needs implied volatility");
    if (!(target.strike > 0.0)) throw ParameterError("strike must be positive");

    const PeriodInstruments inst = build_period_instruments(bundle, spec, grid);
    HedgingData d;
    d.spec = spec;
    d.layout = layout;
    d.target = target;
    d.periods = grid.periods;
    d.growth = grid.growth();
    d.terminal_account = grid.discount_factor(grid.periods);
    const Eigen::Index paths = bundle.n_paths;
    const int n_periods = grid.periods;

    d.log_moneyness.resize(n_periods, paths);
    for (Eigen::Index p = 0; p < paths; ++p)
        for (int n = 0; n < n_periods; ++n) d.log_moneyness(n, p) = std::log(bundle.spot(p, n) / target.strike);
    if (layout.aux) d.aux = bundle.aux_state.transpose();
    if (layout.iv) d.iv = bundle.iv_state.transpose();
    for (std::size_t a = 0; a < inst.begin.size(); ++a) {
        Eigen::MatrixXd diff(n_periods, paths);
        for (Eigen::Index p = 0; p < paths; ++p)
            for (int n = 0; n < n_periods; ++n) diff(n, p) = inst.end[a](p, n) - d.growth * inst.begin[a](p, n);
        d.price_diff.push_back(std::move(diff));
    }
    d.terminal_spot = bundle.spot.col(n_periods).transpose();
    d.payoff.resize(paths);
    for (Eigen::Index p = 0; p < paths; ++p) d.payoff[p] = payoff_put(d.terminal_spot[p], target.strike);
    return d;
}

BatchInputs gather_batch(const HedgingData& data, std::span<const Eigen::Index> paths) {
    const auto b = static_cast<Eigen::Index>(paths.size());
    if (b < 1) throw ShapeError("empty batch");
    const int extra_rows = (data.layout.aux ? 1 : 0) + (data.layout.iv ? 1 : 0);
    const auto traded = static_cast<Eigen::Index>(data.price_diff.size());
    BatchInputs in;
    in.growth = data.growth;
    in.log_moneyness.assign(data.periods, Eigen::MatrixXd(1, b));
    in.extra.assign(data.periods, Eigen::MatrixXd(extra_rows, b));
    in.price_diff.assign(data.periods, Eigen::MatrixXd(traded, b));
    in.payoff.resize(1, b);
    for (Eigen::Index k = 0; k < b; ++k) {
        const Eigen::Index p = paths[k];
        if (p < 0 || p >= data.paths()) throw ShapeError("batch index out of range");
        for (int n = 0; n < data.periods; ++n) {
            in.log_moneyness[n](0, k) = data.log_moneyness(n, p);
            int r = 0;
            if (data.layout.aux) in.extra[n](r++, k) = data.aux(n, p);
            if (data.layout.iv) in.extra[n](r++, k) = data.iv(n, p);
            for (Eigen::Index a = 0; a < traded; ++a) in.price_diff[n](a, k) = data.price_diff[a](n, p);
        }
        in.payoff(0, k) = data.payoff[p];
    }
    return in;
}

BatchInputs gather_range(const HedgingData& data, Eigen::Index begin, Eigen::Index end) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(end - begin));
    std::iota(idx.begin(), idx.end(), begin);
    return gather_batch(data, idx);
}

NetHandles<TapeBackend> tape_leaves(ad::Tape& tape, const LstmParams& params, std::vector<ad::Var>& leaves) {
    NetHandles<TapeBackend> net;
    leaves.clear();
    auto leaf = [&](const Eigen::MatrixXd& m) {
        ad::Var v = tape.leaf(m);
        leaves.push_back(v);
        return v;
    };
    for (const auto& cell : params.cells) {
        NetHandles<TapeBackend>::Cell c;
        for (int g = 0; g < 4; ++g) c.U[g] = leaf(cell.U[g]);
        for (int g = 0; g < 4; ++g) c.W[g] = leaf(cell.W[g]);
        for (int g = 0; g < 4; ++g) c.b[g] = leaf(cell.b[g]);
        net.cells.push_back(c);
    }
    net.Wy = leaf(params.Wy);
    net.by = leaf(params.by);
    return net;
}

NetHandles<PlainBackend> plain_handles(const LstmParams& params) {
    NetHandles<PlainBackend> net;
    for (const auto& cell : params.cells) net.cells.push_back({cell.U, cell.W, cell.b});
    net.Wy = params.Wy;
    net.by = params.by;
    return net;
}

namespace {

void check_dims(const HedgingData& data, const LstmParams& params) {
    if (params.dims.input != data.layout.size() || params.dims.output != data.spec.traded_count()) {
        throw ShapeError("network dimensions do not match the features or instruments");
    }
}

}  // namespace

Eigen::RowVectorXd evaluate_terminal_values(const HedgingData& data, const LstmParams& params, double initial_value,
                                            Eigen::Index chunk) {
    check_dims(data, params);
    PlainBackend be;
    const auto net = plain_handles(params);
    Eigen::RowVectorXd out(data.paths());
    for (Eigen::Index begin = 0; begin < data.paths(); begin += chunk) {
        const Eigen::Index end = std::min(data.paths(), begin + chunk);
        const BatchInputs in = gather_range(data, begin, end);
        const Eigen::MatrixXd v0 = Eigen::MatrixXd::Constant(1, end - begin, initial_value);
        const Eigen::MatrixXd vn = rollout(be, net, in, v0);
        out.segment(begin, end - begin) = vn.row(0);
    }
    return out;
}

Eigen::RowVectorXd evaluate_errors(const HedgingData& data, const LstmParams& params, Side side,
                                   double initial_value) {
    const Eigen::RowVectorXd vn = evaluate_terminal_values(data, params, initial_value);
    const Eigen::RowVectorXd target = side == Side::short_position ? data.payoff : Eigen::RowVectorXd(-data.payoff);
    return target - vn;
}

RolloutRecord record_rollout(const HedgingData& data, const LstmParams& params, double initial_value,
                             Eigen::Index begin, Eigen::Index end) {
    check_dims(data, params);
    PlainBackend be;
    const auto net = plain_handles(params);
    const BatchInputs in = gather_range(data, begin, end);
    RolloutRecord rec;
    rec.values.push_back(Eigen::MatrixXd::Constant(1, end - begin, initial_value));
    rollout<PlainBackend>(be, net, in, rec.values.front(),
                          [&](int, const Eigen::MatrixXd& y, const Eigen::MatrixXd& v) {
                              rec.outputs.push_back(y);
                              rec.values.push_back(v);
                          });
    return rec;
}

}  // namespace erp
