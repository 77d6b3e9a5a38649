#include "erp/experiment.hpp"

#include "erp/errors.hpp"
#include "erp/hedging.hpp"
#include "erp/instruments.hpp"
#include "erp/random.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace erp {

namespace {

// Seed labels for the independent random inputs of one experiment.
constexpr std::uint64_t kTrainPathsLabel = 11;
constexpr std::uint64_t kTestPathsLabel = 12;
constexpr std::uint64_t kTrainIvLabel = 13;
constexpr std::uint64_t kTestIvLabel = 14;
constexpr std::uint64_t kNetworkLabel = 21;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct PreparedData {
    MarketGrid grid;
    HedgingData train;
    HedgingData test;
    LstmDims dims;
};

PathBundle simulate_with_iv(const ExperimentConfig& cfg, const MarketGrid& grid, int n_paths,
                            std::uint64_t path_seed, std::uint64_t iv_seed) {
    PathBundle b = simulate_model(cfg, grid, n_paths, path_seed);
    if (hedge_instruments(cfg.hedge).uses_options()) {
        b.iv_state = simulate_iv(iv_params(cfg.effective_iv_level()), grid, b.innovations, iv_seed, cfg.threads);
    }
    b.innovations.resize(0, 0);
    return b;
}

PreparedData prepare(const ExperimentConfig& cfg) {
    const TrainConfig tc = cfg.train_config();
    PreparedData d;
    d.grid = hedge_grid(cfg.hedge, cfg.rate);
    const InstrumentSpec spec = hedge_instruments(cfg.hedge);
    const FeatureLayout layout{cfg.model == ModelKind::garch, spec.uses_options()};
    const TargetOption target{cfg.strike, d.grid.maturity};
    {
        const PathBundle b = simulate_with_iv(cfg, d.grid, tc.n_train_paths, derive_seed(cfg.seed, kTrainPathsLabel),
                                              derive_seed(cfg.seed, kTrainIvLabel));
        d.train = make_hedging_data(b, spec, d.grid, target, layout);
    }
    {
        const PathBundle b = simulate_with_iv(cfg, d.grid, tc.n_test_paths, derive_seed(cfg.seed, kTestPathsLabel),
                                              derive_seed(cfg.seed, kTestIvLabel));
        d.test = make_hedging_data(b, spec, d.grid, target, layout);
    }
    d.dims.input = layout.size();
    d.dims.hidden = cfg.hidden;
    d.dims.output = spec.traded_count();
    return d;
}

EpochCallback epoch_logger(const ProgressLog& progress, const std::string& label) {
    if (!progress) return {};
    return [progress, label](const EpochLog& e) {
        std::ostringstream os;
        os << label << " epoch " << e.epoch << " train " << e.train_loss << " valid " << e.validation_loss
           << " grad " << e.grad_norm << " (" << e.wall_seconds << " s)";
        progress(os.str());
    };
}

}  // namespace

std::string to_string(HedgeMenu h) {
    switch (h) {
        case HedgeMenu::daily_stock: return "daily-stock";
        case HedgeMenu::monthly_stock: return "monthly-stock";
        case HedgeMenu::one_month_options: return "1m-options";
        case HedgeMenu::three_month_options: return "3m-options";
    }
    return "?";
}

HedgeMenu parse_hedge(const std::string& name) {
    if (name == "daily-stock") return HedgeMenu::daily_stock;
    if (name == "monthly-stock") return HedgeMenu::monthly_stock;
    if (name == "1m-options") return HedgeMenu::one_month_options;
    if (name == "3m-options") return HedgeMenu::three_month_options;
    throw ConfigError("unknown hedge '" + name + "' (expected daily-stock, monthly-stock, 1m-options or 3m-options)");
}

MarketGrid hedge_grid(HedgeMenu h, double rate) {
    switch (h) {
        case HedgeMenu::daily_stock: return MarketGrid::make(1.0, 252, 1, rate);
        case HedgeMenu::monthly_stock: return MarketGrid::make(1.0, 12, 21, rate);
        case HedgeMenu::one_month_options: return MarketGrid::make(1.0, 12, 21, rate);
        case HedgeMenu::three_month_options: return MarketGrid::make(1.0, 4, 63, rate);
    }
    throw ConfigError("unknown hedge menu");
}

InstrumentSpec hedge_instruments(HedgeMenu h) {
    return h == HedgeMenu::one_month_options || h == HedgeMenu::three_month_options ? InstrumentSpec::options()
                                                                                     : InstrumentSpec::stock();
}

TrainConfig scale_preset(const std::string& name) {
    TrainConfig c;
    if (name == "desk") {
        c.n_train_paths = 40000;
        c.n_epochs = 10;
        c.batch_size = 1000;
        c.n_test_paths = 20000;
        // Far fewer steps than the paper scale, so a larger step.
        c.adam.learning_rate = 0.005;
    } else if (name == "paper") {
        c.n_train_paths = 400000;
        c.n_epochs = 50;
        c.batch_size = 1000;
        c.n_test_paths = 100000;
    } else if (name == "smoke") {
        c.n_train_paths = 4000;
        c.n_epochs = 2;
        c.batch_size = 500;
        c.n_test_paths = 2000;
        c.adam.learning_rate = 0.005;
    } else {
        throw ConfigError("unknown scale '" + name + "' (expected desk, paper or smoke)");
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (model == ModelKind::mjd) mjd_scenario(scenario);
    if (model == ModelKind::garch) garch_scenario(scenario);
    if (model == ModelKind::bsm) bsm_scenario(scenario);
    if (!(strike > 0.0) || !std::isfinite(strike)) throw ConfigError("strike must be positive");
    RiskSpec{RiskMeasure::cvar, alpha}.validate();
    if (iv_level && !(*iv_level > 0.0)) throw ConfigError("iv_level must be positive");
    if (hidden.empty()) throw ConfigError("at least one LSTM cell is required");
    for (int h : hidden) {
        if (h < 1) throw ConfigError("LSTM cell width must be positive");
    }
    if (!(spot0 > 0.0)) throw ConfigError("spot0 must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    train_config().validate();
    hedge_grid(hedge, rate);
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig c = scale_preset(scale);
    if (n_train) c.n_train_paths = *n_train;
    if (n_epochs) c.n_epochs = *n_epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (n_test) c.n_test_paths = *n_test;
    if (learning_rate) c.adam.learning_rate = *learning_rate;
    c.seed = derive_seed(seed, kNetworkLabel);
    return c;
}

double ExperimentConfig::effective_iv_level() const {
    return iv_level ? *iv_level : default_iv_level(model, scenario);
}

std::string ExperimentConfig::canonical() const {
    const TrainConfig tc = train_config();
    std::ostringstream os;
    os << "model=" << to_string(model) << ";scenario=" << scenario << ";hedge=" << to_string(hedge)
       << ";K=" << fmt(strike) << ";alpha=" << fmt(alpha) << ";scale=" << scale << ";seed=" << seed
       << ";iv=" << fmt(effective_iv_level()) << ";vo=" << with_vo << ";hidden=";
    for (std::size_t i = 0; i < hidden.size(); ++i) os << (i ? "," : "") << hidden[i];
    os << ";r=" << fmt(rate) << ";s0=" << fmt(spot0) << ";n_train=" << tc.n_train_paths << ";epochs=" << tc.n_epochs
       << ";batch=" << tc.batch_size << ";n_test=" << tc.n_test_paths << ";lr=" << fmt(tc.adam.learning_rate);
    return os.str();
}

std::string ExperimentConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

void apply_config_value(const std::string& key, const std::string& value, ExperimentConfig& cfg) {
    const std::string v = trim(value);
    if (key == "model") cfg.model = parse_model(v);
    else if (key == "scenario") cfg.scenario = static_cast<int>(parse_int(key, v));
    else if (key == "hedge") cfg.hedge = parse_hedge(v);
    else if (key == "strike" || key == "K") cfg.strike = parse_double(key, v);
    else if (key == "alpha") cfg.alpha = parse_double(key, v);
    else if (key == "scale") {
        scale_preset(v);
        cfg.scale = v;
    } else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "iv_level") cfg.iv_level = parse_double(key, v);
    else if (key == "with_vo") cfg.with_vo = parse_bool(key, v);
    else if (key == "rate") cfg.rate = parse_double(key, v);
    else if (key == "spot0") cfg.spot0 = parse_double(key, v);
    else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, v));
    else if (key == "n_train") cfg.n_train = static_cast<int>(parse_int(key, v));
    else if (key == "n_epochs") cfg.n_epochs = static_cast<int>(parse_int(key, v));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, v));
    else if (key == "n_test") cfg.n_test = static_cast<int>(parse_int(key, v));
    else if (key == "learning_rate") cfg.learning_rate = parse_double(key, v);
    else if (key == "hidden") {
        std::vector<int> widths;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) widths.push_back(static_cast<int>(parse_int(key, trim(item))));
        cfg.hidden = widths;
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

void apply_config_text(const std::string& text, ExperimentConfig& cfg) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
        }
        apply_config_value(trim(line.substr(0, eq)), line.substr(eq + 1), cfg);
    }
}

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(ss.str(), cfg);
}

PathBundle simulate_model(const ExperimentConfig& cfg, const MarketGrid& grid, int n_paths, std::uint64_t seed) {
    SimulationOptions opt;
    opt.spot0 = cfg.spot0;
    opt.threads = cfg.threads;
    opt.keep_innovations = hedge_instruments(cfg.hedge).uses_options();
    switch (cfg.model) {
        case ModelKind::mjd: return simulate_mjd(mjd_scenario(cfg.scenario), grid, n_paths, seed, opt);
        case ModelKind::garch: return simulate_garch(garch_scenario(cfg.scenario), grid, n_paths, seed, opt);
        case ModelKind::bsm: return simulate_bsm(bsm_scenario(cfg.scenario), grid, n_paths, seed, opt);
    }
    throw ConfigError("unknown model");
}

double vo_initial_guess(const ExperimentConfig& cfg) {
    const double vol = hedge_instruments(cfg.hedge).uses_options() ? cfg.effective_iv_level()
                                                                    : stationary_volatility(cfg.model, cfg.scenario);
    return bs_put(cfg.spot0, vol, 1.0, cfg.strike, cfg.rate);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressLog& progress) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const TrainConfig tc = cfg.train_config();
    const PreparedData d = prepare(cfg);
    const RiskSpec risk{RiskMeasure::cvar, cfg.alpha};

    ExperimentResult r;
    r.config = cfg;
    r.long_run = train_policy(Side::long_position, d.train, d.dims, risk, tc, epoch_logger(progress, "long"));
    r.short_run = train_policy(Side::short_position, d.train, d.dims, risk, tc, epoch_logger(progress, "short"));
    const Exposures ex = measured_exposures(r.long_run.params, r.short_run.params, d.test, risk);
    std::optional<double> vo;
    if (cfg.with_vo) {
        r.vo_run = train_variance_optimal(d.train, d.dims, vo_initial_guess(cfg), tc, epoch_logger(progress, "vo"));
        vo = r.vo_run->initial_value;
    }
    r.pricing = make_pricing_result(ex.eps_long, ex.eps_short, d.grid, vo);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

void write_pricing_header(std::ostream& out) {
    out << "config_hash,model,scenario,hedge,K,alpha,eps_long,eps_short,c0_star,eps_star,eps_ratio,c0_vo,seed,"
           "n_train,n_epochs,wall_seconds\n";
}

void write_pricing_row(const ExperimentResult& r, std::ostream& out) {
    const auto& c = r.config;
    const auto& p = r.pricing;
    const TrainConfig tc = c.train_config();
    out << c.hash() << ',' << to_string(c.model) << ',' << c.scenario << ',' << to_string(c.hedge) << ','
        << fmt(c.strike) << ',' << fmt(c.alpha) << ',' << fmt(p.eps_long) << ',' << fmt(p.eps_short) << ','
        << fmt(p.price) << ',' << fmt(p.eps_star) << ',' << fmt(p.eps_ratio) << ',' << fmt(p.vo_price) << ','
        << c.seed << ',' << tc.n_train_paths << ',' << tc.n_epochs << ',' << fmt(r.wall_seconds) << '\n';
}

namespace {

enum class Relative { none, to_lowest_alpha, to_vo };

struct TableTemplate {
    std::string id;
    ModelKind model;
    std::vector<int> scenarios;
    std::vector<HedgeMenu> hedges;
    std::vector<double> alphas;
    std::vector<double> iv_levels;  // empty: model default
    bool vo = false;
    Relative relative = Relative::none;
};

const std::vector<HedgeMenu> kAllHedges{HedgeMenu::daily_stock, HedgeMenu::monthly_stock,
                                        HedgeMenu::one_month_options, HedgeMenu::three_month_options};
const std::vector<double> kStrikes{90.0, 100.0, 110.0};

std::vector<TableTemplate> templates() {
    const std::vector<HedgeMenu> three_m{HedgeMenu::three_month_options};
    const std::vector<HedgeMenu> options{HedgeMenu::one_month_options, HedgeMenu::three_month_options};
    const std::vector<double> a95{0.95};
    const std::vector<double> alphas{0.90, 0.95, 0.99};
    return {
        {"T3", ModelKind::mjd, {1, 2, 3}, kAllHedges, a95, {}, false, Relative::none},
        {"T5", ModelKind::garch, {10, 15, 20}, kAllHedges, a95, {}, false, Relative::none},
        {"T6", ModelKind::mjd, {2}, three_m, alphas, {}, false, Relative::to_lowest_alpha},
        {"T7", ModelKind::mjd, {1, 2, 3}, kAllHedges, a95, {}, true, Relative::to_vo},
        {"T8", ModelKind::mjd, {1, 2, 3}, three_m, alphas, {}, true, Relative::to_vo},
        {"SM1", ModelKind::bsm, {10, 15, 20}, kAllHedges, a95, {}, false, Relative::none},
        {"SM2", ModelKind::garch, {15}, options, a95, {0.14, 0.15, 0.16}, false, Relative::none},
        {"SM3", ModelKind::mjd, {1, 3}, three_m, alphas, {}, false, Relative::to_lowest_alpha},
        {"SM4", ModelKind::garch, {10, 15, 20}, three_m, alphas, {}, false, Relative::to_lowest_alpha},
        {"SM5", ModelKind::bsm, {10, 15, 20}, kAllHedges, a95, {}, true, Relative::to_vo},
        {"SM6", ModelKind::garch, {10, 15, 20}, kAllHedges, a95, {}, true, Relative::to_vo},
        {"SM7", ModelKind::bsm, {10, 15, 20}, three_m, alphas, {}, true, Relative::to_vo},
        {"SM8", ModelKind::garch, {10, 15, 20}, three_m, alphas, {}, true, Relative::to_vo},
    };
}

const TableTemplate& find_template(const std::string& id) {
    static const std::vector<TableTemplate> all = templates();
    for (const auto& t : all) {
        if (t.id == id) return t;
    }
    throw ConfigError("unknown table id '" + id + "'");
}

double pct_increase(double value, double base) { return 100.0 * (value / base - 1.0); }

}  // namespace

std::vector<std::string> table_ids() {
    std::vector<std::string> ids;
    for (const auto& t : templates()) ids.push_back(t.id);
    return ids;
}

std::vector<TableCell> table_cells(const std::string& table_id, const std::string& scale, std::uint64_t seed) {
    const TableTemplate& t = find_template(table_id);
    std::vector<TableCell> cells;
    const std::vector<std::optional<double>> ivs =
        t.iv_levels.empty() ? std::vector<std::optional<double>>{std::nullopt}
                            : std::vector<std::optional<double>>(t.iv_levels.begin(), t.iv_levels.end());
    for (HedgeMenu h : t.hedges) {
        for (double k : kStrikes) {
            for (int s : t.scenarios) {
                for (const auto& iv : ivs) {
                    for (double a : t.alphas) {
                        TableCell c;
                        c.config.model = t.model;
                        c.config.scenario = s;
                        c.config.hedge = h;
                        c.config.strike = k;
                        c.config.alpha = a;
                        c.config.scale = scale;
                        c.config.seed = seed;
                        c.config.iv_level = iv;
                        c.config.with_vo = t.vo;
                        std::ostringstream col;
                        col << "scenario=" << s;
                        if (iv) col << ";iv=" << fmt(*iv);
                        col << ";alpha=" << fmt(a);
                        c.column = col.str();
                        cells.push_back(c);
                    }
                }
            }
        }
    }
    return cells;
}

void run_table(const std::string& table_id, const std::string& scale, std::uint64_t seed, const TableOptions& options,
               std::ostream& out, const ProgressLog& progress) {
    const TableTemplate& t = find_template(table_id);
    std::vector<TableCell> cells = table_cells(table_id, scale, seed);
    for (auto& c : cells) {
        for (const auto& [k, v] : options.overrides) apply_config_value(k, v, c.config);
        c.config.threads = options.threads;
        c.config.validate();
    }

    struct Row {
        ExperimentConfig cfg;
        PricingResult pricing;
    };
    std::vector<Row> rows;
    std::map<std::string, double> vo_cache;  // keyed by the cell without alpha
    for (std::size_t i = 0; i < cells.size(); ++i) {
        ExperimentConfig cfg = cells[i].config;
        if (progress) progress(table_id + " cell " + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + " " +
                               cfg.canonical());
        ExperimentConfig no_alpha = cfg;
        no_alpha.alpha = 0.5;
        const std::string vo_key = no_alpha.canonical();
        const bool need_vo = cfg.with_vo && !vo_cache.count(vo_key);
        cfg.with_vo = need_vo;
        ExperimentResult r = run_experiment(cfg, progress);
        if (need_vo) vo_cache[vo_key] = *r.pricing.vo_price;
        if (cells[i].config.with_vo) r.pricing.vo_price = vo_cache.at(vo_key);
        rows.push_back({cells[i].config, r.pricing});
    }

    out << "table,config_hash,model,scenario,hedge,K,alpha,iv_level,eps_long,eps_short,c0_star,eps_star,eps_ratio,c0_vo";
    if (options.relative) out << ",c0_star_rel_pct,eps_star_rel_pct,eps_ratio_rel_pct";
    out << '\n';
    for (const auto& row : rows) {
        const auto& c = row.cfg;
        const auto& p = row.pricing;
        out << table_id << ',' << c.hash() << ',' << to_string(c.model) << ',' << c.scenario << ','
            << to_string(c.hedge) << ',' << fmt(c.strike) << ',' << fmt(c.alpha) << ','
            << fmt(c.effective_iv_level()) << ',' << fmt(p.eps_long) << ',' << fmt(p.eps_short) << ','
            << fmt(p.price) << ',' << fmt(p.eps_star) << ',' << fmt(p.eps_ratio) << ',' << fmt(p.vo_price);
        if (options.relative) {
            std::optional<double> c0_rel, eps_rel, ratio_rel;
            if (t.relative == Relative::to_vo && p.vo_price) {
                c0_rel = pct_increase(p.price, *p.vo_price);
            } else if (t.relative == Relative::to_lowest_alpha) {
                for (const auto& base : rows) {
                    const auto& b = base.cfg;
                    if (b.alpha == t.alphas.front() && b.scenario == c.scenario && b.hedge == c.hedge &&
                        b.strike == c.strike && b.effective_iv_level() == c.effective_iv_level() &&
                        c.alpha != b.alpha) {
                        c0_rel = pct_increase(p.price, base.pricing.price);
                        eps_rel = pct_increase(p.eps_star, base.pricing.eps_star);
                        if (p.eps_ratio && base.pricing.eps_ratio) {
                            ratio_rel = pct_increase(*p.eps_ratio, *base.pricing.eps_ratio);
                        }
                    }
                }
            }
            out << ',' << fmt(c0_rel) << ',' << fmt(eps_rel) << ',' << fmt(ratio_rel);
        }
        out << '\n';
    }
}

}  // namespace erp
