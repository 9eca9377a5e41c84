#include "qmc/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "qmc/experiments.hpp"

namespace qmc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

bool timing_enabled(const Config& cfg) { return cfg.get_bool("timing", false); }

void write_rows(std::ostream& out, const std::vector<ResultRow>& rows, const char* x_name,
                bool timing) {
  out << "experiment,method," << x_name << ",mean,stddev";
  if (timing) out << ",elapsed_seconds";
  out << "\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.method << ',' << format_double(r.x) << ','
        << format_double(r.mean) << ',' << format_double(r.stddev);
    if (timing) out << ',' << format_double(r.elapsed_seconds);
    out << "\n";
  }
}

Payoff payoff_from_config(const Config& cfg) {
  const std::string name = cfg.get_string("payoff", "european-call");
  const double strike = cfg.get_double("strike", 100.0);
  const double cash = cfg.get_double("cash", 1.0);
  if (name == "european-call") return EuropeanCall{strike};
  if (name == "european-put") return EuropeanPut{strike};
  if (name == "digital-call") return DigitalCall{strike, cash};
  if (name == "digital-put") return DigitalPut{strike, cash};
  if (name == "asian-fixed") return AsianFixed{strike};
  if (name == "asian-float") return AsianFloat{};
  if (name == "ratchet") return Ratchet{};
  throw std::invalid_argument("unknown payoff: " + name);
}

BsMarket bs_market_from_config(const Config& cfg) {
  return BsMarket{cfg.get_double("r", 0.04), cfg.get_double("sigma", 0.3),
                  cfg.get_double("s0", 100.0), cfg.get_double("maturity", 1.0)};
}

HestonParams heston_from_config(const Config& cfg) {
  HestonParams p{cfg.get_double("r", 0.03),     cfg.get_double("kappa", 2.0),
                 cfg.get_double("theta", 0.3),  cfg.get_double("xi", 0.5),
                 cfg.get_double("rho", 0.2),    cfg.get_double("s0", 100.0),
                 cfg.get_double("v0", 0.3)};
  if (cfg.get_string("truncation", "full") == "absorption")
    p.truncation = HestonParams::Truncation::absorption;
  if (!p.feller_ok())
    std::cerr << "warning: Feller condition 2*kappa*theta >= xi^2 is violated\n";
  return p;
}

std::vector<ConstructionName> constructions_from_config(const Config& cfg,
                                                        std::vector<ConstructionName> fallback) {
  if (!cfg.has("construction")) return fallback;
  std::vector<ConstructionName> out;
  for (const std::string& name : cfg.get_list("construction", {})) {
    const auto c = construction_from_string(name);
    if (!c) throw std::invalid_argument("unknown construction: " + name);
    out.push_back(*c);
  }
  if (out.empty()) throw std::invalid_argument("empty construction list");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line is not key=value: " + line);
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t pos = 0;
  const double v = std::stod(it->second, &pos);
  if (pos != it->second.size()) throw std::invalid_argument("bad number for " + key);
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t pos = 0;
  const long long v = std::stoll(it->second, &pos);
  if (pos != it->second.size()) throw std::invalid_argument("bad integer for " + key);
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "1" || it->second == "true" || it->second == "yes") return true;
  if (it->second == "0" || it->second == "false" || it->second == "no") return false;
  throw std::invalid_argument("bad boolean for " + key);
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : split_list(it->second);
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key,
                                               const std::vector<std::int64_t>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& s : split_list(it->second)) out.push_back(std::stoll(s));
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& s : split_list(it->second)) out.push_back(std::stod(s));
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void run_price(const Config& cfg, std::ostream& out) {
  const std::string model = cfg.get_string("model", "bs");
  const Payoff payoff = payoff_from_config(cfg);

  QmcConfig qcfg;
  qcfg.points = cfg.get_int("points", 1 << 14);
  qcfg.shifts = static_cast<int>(cfg.get_int("shifts", 16));
  qcfg.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  qcfg.skip_zero_point = cfg.get_bool("skip_zero_point", false);

  const auto constructions = constructions_from_config(cfg, {ConstructionName::forward});
  if (constructions.size() != 1)
    throw std::invalid_argument("price: exactly one construction expected");

  PriceEstimate est;
  std::string experiment;
  if (model == "bs") {
    const BsMarket market = bs_market_from_config(cfg);
    const Eigen::Index steps = cfg.get_int("steps", 1);
    BsPathIntegrand f(market, payoff, steps);
    std::shared_ptr<const NormalTransform> transform;
    if (constructions[0] == ConstructionName::regression) {
      const auto reg = regression_transform_for(
          f, std::max<std::int64_t>(cfg.get_int("regression_pilot", 512), steps + 1), qcfg.seed);
      transform = std::make_shared<HouseholderTransform>(reg.transform);
    } else {
      transform = named_transform(constructions[0], steps);
    }
    est = qmc_mean(f, *transform, qcfg);
    experiment = "bs-" + cfg.get_string("payoff", "european-call");
  } else if (model == "heston") {
    const HestonParams params = heston_from_config(cfg);
    const int steps = static_cast<int>(cfg.get_int("steps", 32));
    const double maturity = cfg.get_double("maturity", 1.0);
    HestonPathIntegrand f(params, payoff, steps, maturity);
    std::shared_ptr<const NormalTransform> transform;
    if (constructions[0] == ConstructionName::regression) {
      const auto reg = regression_transform_for(
          f, std::max<std::int64_t>(cfg.get_int("regression_pilot", 512), 2 * steps + 1),
          qcfg.seed);
      transform = std::make_shared<HouseholderTransform>(reg.transform);
    } else {
      transform = heston_transform(constructions[0], steps);
    }
    est = qmc_mean(f, *transform, qcfg);
    experiment = "heston-" + cfg.get_string("payoff", "european-call");
  } else {
    throw std::invalid_argument("unknown model: " + model);
  }

  std::vector<ResultRow> rows{{experiment, to_string(constructions[0]),
                               std::log2(static_cast<double>(qcfg.points)), est.mean, est.stddev,
                               est.elapsed_seconds}};
  write_rows(out, rows, "log2_points", timing_enabled(cfg));
}

void run_converge(const Config& cfg, std::ostream& out) {
  const std::string experiment = cfg.get_string("experiment", "heston-asian");

  ConvergeSettings settings;
  settings.m_min = static_cast<int>(cfg.get_int("m_min", 2));
  settings.m_max = static_cast<int>(cfg.get_int("m_max", 10));
  settings.shifts = static_cast<int>(cfg.get_int("shifts", 64));
  settings.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  settings.skip_zero_point = cfg.get_bool("skip_zero_point", false);
  settings.regression_pilot = cfg.get_int("regression_pilot", 512);
  settings.constructions = constructions_from_config(
      cfg, {ConstructionName::forward, ConstructionName::bb, ConstructionName::bb2,
            ConstructionName::pca});

  std::vector<ResultRow> rows;
  if (experiment == "heston-asian") {
    HestonAsianExperiment e;
    e.params = heston_from_config(cfg);
    e.strike = cfg.get_double("strike", 100.0);
    e.maturity = cfg.get_double("maturity", 1.0);
    e.steps = static_cast<int>(cfg.get_int("steps", 32));
    rows = converge_heston_asian(e, settings);
  } else if (experiment == "ratchet") {
    RatchetExperiment e;
    e.market = bs_market_from_config(cfg);
    e.steps = static_cast<int>(cfg.get_int("steps", 32));
    rows = converge_ratchet(e, settings);
  } else {
    throw std::invalid_argument("unknown experiment: " + experiment);
  }
  write_rows(out, rows, "log2_points", timing_enabled(cfg));
}

void run_mlmc(const Config& cfg, std::ostream& out) {
  MlmcExperiment e;
  e.market = bs_market_from_config(cfg);
  e.strike = cfg.get_double("strike", 100.0);
  e.levels = static_cast<int>(cfg.get_int("levels", 10));
  e.refinement = static_cast<int>(cfg.get_int("refinement", 2));
  e.n_finest = cfg.get_int_list("nl", {2, 4, 8, 16, 32, 64});
  e.runs = static_cast<int>(cfg.get_int("runs", 100));
  e.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  e.skip_zero_point = cfg.get_bool("skip_zero_point", false);
  e.regression_pilot = cfg.get_int("regression_pilot", 512);

  if (cfg.has("methods")) {
    e.methods.clear();
    for (const std::string& name : cfg.get_list("methods", {})) {
      const auto m = ml_method_from_string(name);
      if (!m) throw std::invalid_argument("unknown mlmc method: " + name);
      e.methods.push_back(*m);
    }
    if (e.methods.empty()) throw std::invalid_argument("empty methods list");
  }

  if (e.runs == 1) {
    std::cerr << "warning: runs=1 reports stddev 0\n";
  }

  const auto rows = mlmc_table(e);
  write_rows(out, rows, "N_L", timing_enabled(cfg));
}

void run_demo_rejection(const Config& cfg, std::ostream& out) {
  RejectionDemoSettings s;
  s.n_terms = static_cast<int>(cfg.get_int("n_terms", 5));
  s.points = cfg.get_int("points", 1024);
  s.lambda_bar = cfg.get_double("lambda_bar", 2.0);
  s.epsilon = cfg.get_double("epsilon", 0.2);
  s.lambda_step = cfg.get_double("lambda_step", 0.001);
  s.proposal_rate = cfg.get_double("proposal_rate", 0.85);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

  const auto rows = rejection_noise_demo(s);
  out << "lambda,ar_mc,qmc_inversion\n";
  for (const auto& r : rows) {
    out << format_double(r.lambda) << ',' << format_double(r.ar_mc) << ','
        << format_double(r.qmc_inversion) << "\n";
  }
}

void run_paths(const Config& cfg, std::ostream& out) {
  PathSweepSettings s;
  const auto c = construction_from_string(cfg.get_string("construction", "bb"));
  if (!c) throw std::invalid_argument("unknown construction");
  if (*c == ConstructionName::regression)
    throw std::invalid_argument("paths: regression has no fixed transform without a payoff");
  s.construction = *c;
  s.dimension = static_cast<int>(cfg.get_int("dimension", 16));
  s.vary_coordinate = static_cast<int>(cfg.get_int("vary_coordinate", 7));
  s.sweep_values = cfg.get_double_list("sweep", s.sweep_values);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  s.nig_process = cfg.get_string("process", "brownian") == "nig";
  s.nig.alpha = cfg.get_double("alpha", 2.0);
  s.nig.beta = cfg.get_double("beta", 0.0);
  s.nig.delta = cfg.get_double("delta", 1.0);

  const auto rows = path_sweep(s);
  out << "sweep,t,value\n";
  for (const auto& r : rows) {
    out << format_double(r.sweep) << ',' << format_double(r.t) << ',' << format_double(r.value)
        << "\n";
  }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run_main(int argc, const char* const* argv) {
  CLI::App app{"quasi-Monte Carlo option pricing harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> runs;
  bool skip_zero = false;
  bool timing = false;

  for (const char* name : {"price", "converge", "mlmc", "demo-rejection", "paths"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--out", out_path, "output CSV path (default: stdout)");
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--runs", runs, "replication count override");
    sub->add_flag("--skip-zero-point", skip_zero, "skip the all-zeros Sobol point");
    sub->add_flag("--timing", timing, "include elapsed_seconds in the CSV");
    sub->add_option("--set", overrides, "extra key=value overrides")->take_all();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::from_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got: " + kv);
      cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (runs) cfg.set("runs", std::to_string(*runs));
    if (skip_zero) cfg.set("skip_zero_point", "1");
    if (timing) cfg.set("timing", "1");

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw std::invalid_argument("cannot open output file: " + out_path);
      out = &file;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "price") run_price(cfg, *out);
    else if (sub == "converge") run_converge(cfg, *out);
    else if (sub == "mlmc") run_mlmc(cfg, *out);
    else if (sub == "demo-rejection") run_demo_rejection(cfg, *out);
    else if (sub == "paths") run_paths(cfg, *out);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qmc::cli
