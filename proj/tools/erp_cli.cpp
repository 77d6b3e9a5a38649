#include "erp/errors.hpp"
#include "erp/experiment.hpp"
#include "erp/gradcheck.hpp"
#include "erp/market.hpp"
#include "erp/random.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string model = "bsm";
    int scenario = 15;
    std::string hedge = "daily-stock";
    double strike = 100.0;
    double alpha = 0.95;
    std::string scale = "desk";
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string config;
    int threads = 1;
    bool verbose = false;
};

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--model", f.model, "Return model")->check(CLI::IsMember({"mjd", "garch", "bsm"}));
    cmd->add_option("--scenario", f.scenario, "Scenario id: 1-3 for mjd, 10/15/20 for garch and bsm");
    cmd->add_option("--hedge", f.hedge, "Hedging instruments")
        ->check(CLI::IsMember({"daily-stock", "monthly-stock", "1m-options", "3m-options"}));
    cmd->add_option("--seed", f.seed, "Run seed");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--threads", f.threads, "Simulation threads");
}

std::ofstream open_output(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw erp::IoError("cannot write '" + path.string() + "'");
    return out;
}

erp::ExperimentConfig config_from(const CommonFlags& f) {
    erp::ExperimentConfig cfg;
    cfg.model = erp::parse_model(f.model);
    cfg.scenario = f.scenario;
    cfg.hedge = erp::parse_hedge(f.hedge);
    cfg.strike = f.strike;
    cfg.alpha = f.alpha;
    cfg.scale = f.scale;
    cfg.seed = f.seed;
    cfg.threads = f.threads;
    if (!f.config.empty()) erp::apply_config_file(f.config, cfg);
    cfg.validate();
    return cfg;
}

erp::ProgressLog progress_for(bool verbose) {
    if (!verbose) return {};
    return [](const std::string& line) { std::cerr << line << '\n'; };
}

int run_price(const CommonFlags& f) {
    const erp::ExperimentConfig cfg = config_from(f);
    const erp::ExperimentResult r = erp::run_experiment(cfg, progress_for(f.verbose));
    const fs::path dir(f.out);
    const std::string stem = "price_" + cfg.hash();
    {
        auto out = open_output(dir / (stem + ".csv"));
        erp::write_pricing_header(out);
        erp::write_pricing_row(r, out);
    }
    {
        auto out = open_output(dir / (stem + "_long.ckpt"));
        erp::write_checkpoint(r.long_run.params, out);
    }
    {
        auto out = open_output(dir / (stem + "_short.ckpt"));
        erp::write_checkpoint(r.short_run.params, out);
    }
    {
        auto out = open_output(dir / (stem + "_long_log.csv"));
        erp::write_training_log_csv(r.long_run.log, out);
    }
    {
        auto out = open_output(dir / (stem + "_short_log.csv"));
        erp::write_training_log_csv(r.short_run.log, out);
    }
    if (r.vo_run) {
        auto out = open_output(dir / (stem + "_vo_log.csv"));
        erp::write_training_log_csv(r.vo_run->log, out);
    }
    erp::write_pricing_header(std::cout);
    erp::write_pricing_row(r, std::cout);
    return 0;
}

int run_table(const std::string& id, const CommonFlags& f, bool relative) {
    erp::TableOptions opt;
    opt.relative = relative;
    opt.threads = f.threads;
    if (!f.config.empty()) {
        // Reuse the experiment parser to validate keys, then keep the raw pairs.
        erp::ExperimentConfig probe;
        erp::apply_config_file(f.config, probe);
        std::ifstream in(f.config);
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto key = line.substr(0, eq);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            opt.overrides[key] = line.substr(eq + 1);
        }
    }
    const fs::path path = fs::path(f.out) / ("table_" + id + "_" + f.scale + "_" + std::to_string(f.seed) + ".csv");
    auto out = open_output(path);
    erp::run_table(id, f.scale, f.seed, opt, out, progress_for(f.verbose));
    std::cout << path.string() << '\n';
    return 0;
}

int run_simulate(const CommonFlags& f, int paths) {
    // Same seeds as the training paths of `price`.
    erp::ExperimentConfig cfg = config_from(f);
    const erp::MarketGrid grid = erp::hedge_grid(cfg.hedge, cfg.rate);
    erp::PathBundle b = erp::simulate_model(cfg, grid, paths, erp::derive_seed(cfg.seed, 11));
    if (erp::hedge_instruments(cfg.hedge).uses_options()) {
        b.iv_state = erp::simulate_iv(erp::iv_params(cfg.effective_iv_level()), grid, b.innovations,
                                      erp::derive_seed(cfg.seed, 13), cfg.threads);
    }
    const fs::path path = fs::path(f.out) / ("paths_" + cfg.hash() + ".csv");
    auto out = open_output(path);
    erp::write_paths_csv(b, out);
    std::cout << path.string() << '\n';
    return 0;
}

int run_gradcheck(int instances, std::uint64_t seed) {
    const erp::GradcheckReport rep = erp::run_gradcheck(instances, seed);
    for (const auto& inst : rep.instances) {
        std::cout << inst.description << ": checked " << inst.checked << ", excluded " << inst.excluded
                  << ", max rel error " << inst.max_rel_error << '\n';
    }
    const bool ok = rep.passed(1e-5);
    std::cout << (ok ? "PASS" : "FAIL") << ": " << rep.checked << " partials, " << rep.excluded
              << " excluded, max rel error " << rep.max_rel_error << '\n';
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equal risk pricing with deep hedging"};
    app.require_subcommand(1);
    CommonFlags f;

    auto* price = app.add_subcommand("price", "Price one configuration");
    add_model_flags(price, f);
    price->add_option("--strike", f.strike, "Strike of the put");
    price->add_option("--alpha", f.alpha, "CVaR confidence level");
    price->add_option("--scale", f.scale, "Training scale")->check(CLI::IsMember({"desk", "paper", "smoke"}));
    price->add_option("--config", f.config, "key=value file overriding flags");
    price->add_flag("--verbose", f.verbose, "Print training progress");

    std::string table_id;
    bool relative = false;
    auto* table = app.add_subcommand("table", "Reproduce a results table");
    table->add_option("id", table_id, "Table id")->required()->check(CLI::IsMember(erp::table_ids()));
    table->add_option("--scale", f.scale, "Training scale")->check(CLI::IsMember({"desk", "paper", "smoke"}));
    table->add_option("--seed", f.seed, "Run seed");
    table->add_option("--out", f.out, "Output directory");
    table->add_option("--threads", f.threads, "Simulation threads");
    table->add_option("--config", f.config, "key=value overrides applied to every cell");
    table->add_flag("--relative", relative, "Add relative-change columns");
    table->add_flag("--verbose", f.verbose, "Print progress");

    int paths = 10;
    auto* simulate = app.add_subcommand("simulate", "Dump simulated paths");
    add_model_flags(simulate, f);
    simulate->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
    simulate->add_option("--config", f.config, "key=value file overriding flags");

    int instances = 50;
    auto* gradcheck = app.add_subcommand("gradcheck", "Check gradients against finite differences");
    gradcheck->add_option("--instances", instances, "Random instances")->check(CLI::PositiveNumber);
    gradcheck->add_option("--seed", f.seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[usage]: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*price) return run_price(f);
        if (*table) return run_table(table_id, f, relative);
        if (*simulate) return run_simulate(f, paths);
        if (*gradcheck) return run_gradcheck(instances, f.seed);
    } catch (const erp::Error& e) {
        std::cerr << "error[" << e.category() << "]: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
