#include "erp/gradcheck.hpp"

#include "erp/hedging.hpp"
#include "erp/random.hpp"
#include "erp/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace erp {

namespace {

enum class Loss { cvar_long, cvar_short, variance };

const char* loss_name(Loss l) {
    switch (l) {
        case Loss::cvar_long: return "long-cvar";
        case Loss::cvar_short: return "short-cvar";
        case Loss::variance: return "variance";
    }
    return "?";
}

struct Problem {
    BatchInputs in;
    LstmDims dims;
    Loss loss;
    double alpha;
};

struct Evaluation {
    double loss = 0.0;
    std::size_t var_index = 0;
    std::vector<char> above;  // error strictly above VaR, per path
};

Evaluation evaluate(const Problem& pb, const LstmParams& params, double v0) {
    PlainBackend be;
    const auto net = plain_handles(params);
    const Eigen::MatrixXd start = Eigen::MatrixXd::Constant(1, pb.in.batch(), pb.loss == Loss::variance ? v0 : 0.0);
    const Eigen::MatrixXd vn = rollout(be, net, pb.in, start);
    Evaluation ev;
    if (pb.loss == Loss::variance) {
        ev.loss = squared_error(be, pb.in, vn)(0, 0);
        return ev;
    }
    const Side side = pb.loss == Loss::cvar_long ? Side::long_position : Side::short_position;
    const Eigen::MatrixXd err = hedging_errors(be, side, pb.in, vn);
    const VarCvar vc = empirical_var_cvar(std::span<const double>(err.data(), err.size()), pb.alpha);
    ev.loss = cvar_of(be, err, pb.alpha)(0, 0);
    ev.var_index = vc.var_index;
    for (Eigen::Index i = 0; i < err.size(); ++i) ev.above.push_back(err(0, i) > vc.var ? 1 : 0);
    return ev;
}

Eigen::VectorXd tape_gradient(const Problem& pb, const LstmParams& params, double v0) {
    ad::Tape tape;
    TapeBackend be{tape};
    std::vector<ad::Var> leaves;
    const auto net = tape_leaves(tape, params, leaves);
    ad::Var loss;
    if (pb.loss == Loss::variance) {
        const ad::Var v = tape.leaf(Eigen::MatrixXd::Constant(1, 1, v0));
        leaves.push_back(v);
        loss = squared_error(be, pb.in, rollout(be, net, pb.in, tape.broadcast(v, pb.in.batch())));
    } else {
        const Side side = pb.loss == Loss::cvar_long ? Side::long_position : Side::short_position;
        const ad::Var vn = rollout(be, net, pb.in, tape.constant(Eigen::MatrixXd::Zero(1, pb.in.batch())));
        loss = cvar_of(be, hedging_errors(be, side, pb.in, vn), pb.alpha);
    }
    tape.backward(loss);
    std::vector<double> flat;
    for (ad::Var v : leaves) {
        const auto& g = tape.grad(v);
        for (Eigen::Index r = 0; r < g.rows(); ++r)
            for (Eigen::Index c = 0; c < g.cols(); ++c) flat.push_back(g(r, c));
    }
    return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

}  // namespace

GradcheckReport run_gradcheck(int instances, std::uint64_t seed, double step, double floor) {
    GradcheckReport report;
    const ModelKind models[] = {ModelKind::bsm, ModelKind::mjd, ModelKind::garch};
    const Loss losses[] = {Loss::cvar_long, Loss::cvar_short, Loss::variance};
    const double alphas[] = {0.5, 0.75, 0.9};
    for (int k = 0; k < instances; ++k) {
        PathStream rng(seed, static_cast<std::uint64_t>(k), StreamTag::init);
        const Loss loss = losses[k % 3];
        const bool options = (k / 3) % 2 == 1;
        const ModelKind model = models[(k / 6) % 3];
        const int periods = 1 + static_cast<int>(rng.uniform() * 4.0);
        const int batch = 2 + static_cast<int>(rng.uniform() * 7.0);
        const int width = 1 + static_cast<int>(rng.uniform() * 4.0);
        const double strike = 95.0 + 10.0 * rng.uniform();
        const double alpha = alphas[k % 3];

        const MarketGrid grid = MarketGrid::make(periods / 252.0, periods, 1, 0.03);
        SimulationOptions opt;
        PathBundle bundle;
        const std::uint64_t path_seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(k));
        switch (model) {
            case ModelKind::bsm: bundle = simulate_bsm(bsm_scenario(20), grid, batch, path_seed, opt); break;
            case ModelKind::mjd: bundle = simulate_mjd(mjd_scenario(3), grid, batch, path_seed, opt); break;
            case ModelKind::garch: bundle = simulate_garch(garch_scenario(20), grid, batch, path_seed, opt); break;
        }
        const InstrumentSpec spec = options ? InstrumentSpec::options() : InstrumentSpec::stock();
        if (options) bundle.iv_state = simulate_iv(iv_params(0.2), grid, bundle.innovations, path_seed + 1);
        const FeatureLayout layout{model == ModelKind::garch, options};
        const HedgingData data = make_hedging_data(bundle, spec, grid, TargetOption{strike, grid.maturity}, layout);

        Problem pb{gather_range(data, 0, batch), LstmDims{layout.size(), {width}, spec.traded_count()}, loss, alpha};
        LstmParams params = glorot_init(pb.dims, derive_seed(seed, 2000 + static_cast<std::uint64_t>(k)));
        for (auto* m : params.tensors()) {
            for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] += 0.5 * (rng.uniform() - 0.5);
        }
        const double v0 = 5.0 * rng.uniform();

        const Eigen::VectorXd grad = tape_gradient(pb, params, v0);
        const Eigen::VectorXd theta = params.flatten();
        const Evaluation base = evaluate(pb, params, v0);

        GradcheckInstance inst;
        std::ostringstream desc;
        desc << loss_name(loss) << ' ' << (options ? "options" : "stock") << ' ' << to_string(model)
             << " N=" << periods << " batch=" << batch << " width=" << width << " d0=" << layout.size();
        inst.description = desc.str();

        const Eigen::Index n = grad.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool is_v0 = loss == Loss::variance && i == n - 1;
            auto eval_at = [&](double delta) {
                LstmParams p = params;
                double v = v0;
                if (is_v0) {
                    v += delta;
                } else {
                    Eigen::VectorXd t = theta;
                    t[i] += delta;
                    p.assign(t);
                }
                return evaluate(pb, p, v);
            };
            const Evaluation up = eval_at(step);
            const Evaluation down = eval_at(-step);
            if (up.var_index != base.var_index || down.var_index != base.var_index || up.above != base.above ||
                down.above != base.above) {
                ++inst.excluded;
                continue;
            }
            const double fd = (up.loss - down.loss) / (2.0 * step);
            const double rel = std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), floor});
            inst.max_rel_error = std::max(inst.max_rel_error, rel);
            ++inst.checked;
        }
        report.checked += inst.checked;
        report.excluded += inst.excluded;
        report.max_rel_error = std::max(report.max_rel_error, inst.max_rel_error);
        report.instances.push_back(inst);
    }
    return report;
}

}  // namespace erp
