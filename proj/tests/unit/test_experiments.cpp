#include "erp/errors.hpp"
#include "erp/experiment.hpp"
#include "erp/instruments.hpp"
#include "erp/scenarios.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace erp;

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

// Tiny training sizes so a whole table runs in seconds.
const std::map<std::string, std::string> kTiny{
    {"n_train", "200"}, {"n_test", "200"}, {"batch_size", "50"}, {"n_epochs", "1"}, {"hidden", "3"}};

}  // namespace

TEST_CASE("scenario catalog") {
    const double mjd[3][5] = {{0.1112, 0.1323, 1.0, -0.05, 0.05},
                              {0.1111, 0.1323, 0.25, -0.10, 0.10},
                              {0.1110, 0.1323, 0.08, -0.20, 0.15}};
    for (int s = 1; s <= 3; ++s) {
        const MjdParams p = mjd_scenario(s);
        CHECK(p.nu == mjd[s - 1][0]);
        CHECK(p.sigma == mjd[s - 1][1]);
        CHECK(p.lambda == mjd[s - 1][2]);
        CHECK(p.mu_j == mjd[s - 1][3]);
        CHECK(p.sigma_j == mjd[s - 1][4]);
    }
    const std::pair<int, double> garch[3] = {{10, 8.730e-07}, {15, 1.964e-06}, {20, 3.492e-06}};
    for (const auto& [vol, omega] : garch) {
        const GarchParams p = garch_scenario(vol);
        CHECK(p.mu == 3.968e-04);
        CHECK(p.omega == omega);
        CHECK(p.upsilon == 0.05);
        CHECK(p.gamma == 0.6);
        CHECK(p.beta == 0.91);
    }
    const IvParams iv = iv_params();
    CHECK(iv.kappa == 0.15);
    CHECK(iv.theta == std::log(0.15));
    CHECK(iv.sigma_iv == 0.06);
    CHECK(iv.rho == -0.6);
    for (double level : {0.10, 0.14, 0.16, 0.20}) CHECK(iv_params(level).theta == std::log(level));
    for (int vol : {10, 15, 20}) {
        CHECK(bsm_scenario(vol).mu == 0.1);
        CHECK(bsm_scenario(vol).sigma == vol / 100.0);
        CHECK(default_iv_level(ModelKind::garch, vol) == vol / 100.0);
        CHECK(default_iv_level(ModelKind::bsm, vol) == vol / 100.0);
    }
    CHECK(default_iv_level(ModelKind::mjd, 2) == 0.15);
    CHECK_THROWS_AS(mjd_scenario(4), ConfigError);
    CHECK_THROWS_AS(garch_scenario(12), ConfigError);
    CHECK_THROWS_AS(bsm_scenario(0), ConfigError);
    CHECK(parse_model("garch") == ModelKind::garch);
    CHECK_THROWS_AS(parse_model("heston"), ConfigError);
}

TEST_CASE("hedge menus map to trading grids") {
    const std::tuple<HedgeMenu, const char*, int, int, bool> menus[] = {
        {HedgeMenu::daily_stock, "daily-stock", 252, 1, false},
        {HedgeMenu::monthly_stock, "monthly-stock", 12, 21, false},
        {HedgeMenu::one_month_options, "1m-options", 12, 21, true},
        {HedgeMenu::three_month_options, "3m-options", 4, 63, true},
    };
    for (const auto& [h, name, n, m, options] : menus) {
        CHECK(to_string(h) == name);
        CHECK(parse_hedge(name) == h);
        const MarketGrid g = hedge_grid(h);
        CHECK(g.periods == n);
        CHECK(g.days_per_period == m);
        CHECK(g.maturity == 1.0);
        CHECK(hedge_instruments(h).uses_options() == options);
    }
    CHECK_THROWS_AS(parse_hedge("weekly-stock"), ConfigError);
}

TEST_CASE("scale presets") {
    const TrainConfig desk = scale_preset("desk");
    CHECK(desk.n_train_paths == 40000);
    CHECK(desk.n_epochs == 10);
    CHECK(desk.batch_size == 1000);
    CHECK(desk.n_test_paths == 20000);
    CHECK(desk.adam.learning_rate == 0.005);
    const TrainConfig paper = scale_preset("paper");
    CHECK(paper.n_train_paths == 400000);
    CHECK(paper.n_epochs == 50);
    CHECK(paper.batch_size == 1000);
    CHECK(paper.n_test_paths == 100000);
    CHECK(paper.adam.learning_rate == 0.01 / 6.0);
    CHECK_THROWS_AS(scale_preset("huge"), ConfigError);
}

TEST_CASE("configuration text") {
    ExperimentConfig c;
    apply_config_text("# comment\nmodel = garch\nscenario=20\n\nhedge=3m-options\nK=110\nalpha=0.99\n"
                      "seed=7\nhidden=8, 4\nn_epochs=3\nlearning_rate=0.001\niv_level=0.16\n",
                      c);
    CHECK(c.model == ModelKind::garch);
    CHECK(c.scenario == 20);
    CHECK(c.hedge == HedgeMenu::three_month_options);
    CHECK(c.strike == 110.0);
    CHECK(c.alpha == 0.99);
    CHECK(c.seed == 7);
    CHECK(c.hidden == std::vector<int>{8, 4});
    CHECK(c.effective_iv_level() == 0.16);
    const TrainConfig tc = c.train_config();
    CHECK(tc.n_epochs == 3);
    CHECK(tc.n_train_paths == 40000);
    CHECK(tc.adam.learning_rate == 0.001);
    CHECK_NOTHROW(c.validate());

    ExperimentConfig d;
    CHECK_THROWS_AS(apply_config_text("colour=blue\n", d), ConfigError);
    CHECK_THROWS_AS(apply_config_text("alpha=high\n", d), ConfigError);
    CHECK_THROWS_AS(apply_config_text("scenario=1.5\n", d), ConfigError);
    CHECK_THROWS_AS(apply_config_text("just words\n", d), ConfigError);
    CHECK_THROWS_AS(apply_config_file("/nonexistent/erp.cfg", d), IoError);
    ExperimentConfig bad;
    bad.model = ModelKind::mjd;
    bad.scenario = 15;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    ExperimentConfig bad_alpha;
    bad_alpha.alpha = 1.0;
    CHECK_THROWS_AS(bad_alpha.validate(), ParameterError);
}

TEST_CASE("configuration hash") {
    ExperimentConfig a;
    ExperimentConfig b = a;
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    std::set<std::string> seen{a.hash()};
    b.seed = 2;
    seen.insert(b.hash());
    b = a;
    b.strike = 90.0;
    seen.insert(b.hash());
    b = a;
    b.alpha = 0.9;
    seen.insert(b.hash());
    b = a;
    b.scale = "paper";
    seen.insert(b.hash());
    b = a;
    b.hedge = HedgeMenu::monthly_stock;
    seen.insert(b.hash());
    CHECK(seen.size() == 6);
    b = a;
    b.threads = 4;
    CHECK(b.hash() == a.hash());
}

TEST_CASE("initial capital guess of the variance-optimal run") {
    ExperimentConfig c;
    c.model = ModelKind::bsm;
    c.scenario = 15;
    CHECK(vo_initial_guess(c) == bs_put(100.0, 0.15, 1.0, 100.0, 0.03));
    c.model = ModelKind::mjd;
    c.scenario = 2;
    c.hedge = HedgeMenu::one_month_options;
    CHECK(vo_initial_guess(c) == bs_put(100.0, 0.15, 1.0, 100.0, 0.03));
    c.hedge = HedgeMenu::daily_stock;
    const MjdParams p = mjd_scenario(2);
    const double vol = std::sqrt(p.sigma * p.sigma + p.lambda * (p.mu_j * p.mu_j + p.sigma_j * p.sigma_j));
    CHECK(stationary_volatility(ModelKind::mjd, 2) == doctest::Approx(vol).epsilon(1e-12));
    CHECK(vo_initial_guess(c) == bs_put(100.0, stationary_volatility(ModelKind::mjd, 2), 1.0, 100.0, 0.03));
}

TEST_CASE("table templates") {
    const std::vector<std::string> ids = table_ids();
    for (const char* id : {"T3", "T5", "T6", "T7", "T8", "SM1", "SM2", "SM3", "SM4", "SM5", "SM6", "SM7", "SM8"}) {
        CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
    }
    const auto t3 = table_cells("T3", "desk", 1);
    CHECK(t3.size() == 4 * 3 * 3);
    std::set<std::string> hashes;
    for (const auto& c : t3) {
        CHECK(c.config.model == ModelKind::mjd);
        CHECK(c.config.alpha == 0.95);
        CHECK_FALSE(c.config.with_vo);
        hashes.insert(c.config.hash());
    }
    CHECK(hashes.size() == t3.size());
    const auto t6 = table_cells("T6", "desk", 1);
    CHECK(t6.size() == 3 * 3);
    for (const auto& c : t6) {
        CHECK(c.config.scenario == 2);
        CHECK(c.config.hedge == HedgeMenu::three_month_options);
    }
    for (const auto& c : table_cells("T7", "desk", 1)) CHECK(c.config.with_vo);
    CHECK(table_cells("SM2", "desk", 1).size() == 2 * 3 * 3);
    CHECK_THROWS_AS(table_cells("T9", "desk", 1), ConfigError);
}

TEST_CASE("feature wiring of experiments") {
    ExperimentConfig c;
    c.model = ModelKind::mjd;
    c.scenario = 1;
    c.hedge = HedgeMenu::monthly_stock;
    const MarketGrid g = hedge_grid(c.hedge);
    const PathBundle mjd = simulate_model(c, g, 3, 1);
    CHECK_FALSE(mjd.has_aux());
    c.model = ModelKind::garch;
    c.scenario = 15;
    const PathBundle garch = simulate_model(c, g, 3, 1);
    CHECK(garch.has_aux());
}

TEST_CASE("single experiment at tiny scale") {
    ExperimentConfig c;
    c.model = ModelKind::garch;
    c.scenario = 10;
    c.hedge = HedgeMenu::three_month_options;
    c.strike = 90.0;
    apply_config_text("n_train=300\nn_test=300\nbatch_size=100\nn_epochs=1\nhidden=4\n", c);
    std::vector<std::string> progress;
    const ExperimentResult r = run_experiment(c, [&](const std::string& s) { progress.push_back(s); });
    CHECK_FALSE(progress.empty());
    CHECK(r.long_run.params.dims.input == 4);
    CHECK(r.long_run.params.dims.output == 2);
    REQUIRE(r.vo_run);
    REQUIRE(r.pricing.vo_price);
    CHECK(*r.pricing.vo_price == r.vo_run->initial_value);
    const double bn = std::exp(0.03);
    CHECK(std::abs(r.pricing.eps_short - (r.pricing.eps_star + bn * r.pricing.price)) <=
          1e-12 * (1.0 + std::abs(r.pricing.eps_short)));

    std::ostringstream out;
    write_pricing_header(out);
    write_pricing_row(r, out);
    const auto rows = lines(out.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] ==
          "config_hash,model,scenario,hedge,K,alpha,eps_long,eps_short,c0_star,eps_star,eps_ratio,c0_vo,seed,n_train,"
          "n_epochs,wall_seconds");
    const auto fields = split(rows[1]);
    REQUIRE(fields.size() == 16);
    CHECK(fields[0] == c.hash());
    CHECK(fields[1] == "garch");
    CHECK(fields[3] == "3m-options");
    CHECK(fields[4] == "90");
    CHECK(fields[5] == "0.95");
    CHECK(std::stod(fields[8]) == r.pricing.price);
    CHECK(fields[13] == "300");

    ExperimentConfig d = c;
    d.with_vo = false;
    d.model = ModelKind::mjd;
    d.scenario = 1;
    d.hedge = HedgeMenu::monthly_stock;
    const ExperimentResult s = run_experiment(d);
    CHECK(s.long_run.params.dims.input == 2);
    CHECK_FALSE(s.pricing.vo_price);
}

TEST_CASE("table output is deterministic and has a relative form") {
    TableOptions opt;
    opt.overrides = kTiny;
    std::ostringstream a, b;
    run_table("T6", "smoke", 3, opt, a);
    run_table("T6", "smoke", 3, opt, b);
    CHECK(a.str() == b.str());
    const auto rows = lines(a.str());
    REQUIRE(rows.size() == 1 + 9);
    CHECK(rows[0] ==
          "table,config_hash,model,scenario,hedge,K,alpha,iv_level,eps_long,eps_short,c0_star,eps_star,eps_ratio,c0_vo");

    opt.relative = true;
    std::ostringstream rel;
    run_table("T6", "smoke", 3, opt, rel);
    const auto rrows = lines(rel.str());
    REQUIRE(rrows.size() == 10);
    CHECK(rrows[0].find(",c0_star_rel_pct,eps_star_rel_pct,eps_ratio_rel_pct") != std::string::npos);
    // The lowest alpha of each strike is the reference and has blank relative cells.
    for (std::size_t i = 1; i < rrows.size(); ++i) {
        const auto f = split(rrows[i]);
        REQUIRE(f.size() == 17);
        CHECK((f[6] == "0.9") == f[14].empty());
        CHECK((f[6] == "0.9") == f[15].empty());
        // Absolute columns match the plain run.
        CHECK(f[10] == split(rows[i])[10]);
    }
    CHECK_THROWS_AS(run_table("T42", "smoke", 3, opt, rel), ConfigError);
}

TEST_CASE("variance-optimal relative table") {
    TableOptions opt;
    opt.overrides = kTiny;
    opt.overrides["model"] = "bsm";
    opt.relative = true;
    std::ostringstream out;
    run_table("SM7", "smoke", 2, opt, out);
    const auto rows = lines(out.str());
    REQUIRE(rows.size() == 1 + 3 * 3 * 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i]);
        REQUIRE(f.size() == 17);
        const double c0 = std::stod(f[10]);
        const double vo = std::stod(f[13]);
        CHECK(std::stod(f[14]) == doctest::Approx(100.0 * (c0 / vo - 1.0)).epsilon(1e-12));
    }
}
