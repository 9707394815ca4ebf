#include "sysrisk/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "sysrisk/error.hpp"
#include "sysrisk/monte_carlo.hpp"
#include "sysrisk/report.hpp"
#include "sysrisk/systemic.hpp"

namespace sysrisk::cli {

namespace {

enum class OutputFormat { Csv, Json, Pretty };

struct Options {
  // market
  int market_size = 10;
  double chi = 1.6;
  std::optional<double> sigma;
  double horizon = 1.0;
  double mu = 0.0;
  // strategy / scenario
  double f = 0.25;
  int n = 5;
  std::optional<double> f2;
  std::optional<int> n2;
  double f_normal = 0.10;
  double f_abnormal = 0.25;
  // analysis
  CdfMethod method = CdfMethod::Oracle;
  std::optional<int> grid_cells;
  std::vector<double> grid_range;
  double epsilon = 1e-6;
  unsigned threads = 0;
  // sweep
  std::vector<int> market_sizes{10, 20, 30, 40};
  double chi_min = 0.001;
  double chi_max = 9.0;
  int chi_count = 100;
  int n_min = 1;
  std::optional<int> n_max;
  std::string thresholds_out;
  // mu scan
  std::vector<double> mu_values{-0.05, 0.0, 0.05};
  // simulation
  std::int64_t paths = 10000;
  int steps = 250;
  std::uint64_t seed = 0;
  std::string overlap = "fixed:0";
  std::string dump_paths;
  // output
  OutputFormat format = OutputFormat::Pretty;
  std::string out_path;
};

MarketParams make_market(const Options& o, int market_size) {
  if (o.sigma) return MarketParams::from_sigma(market_size, *o.sigma, o.horizon, o.mu);
  return MarketParams::from_chi(market_size, o.chi, o.mu);
}

AnalysisOptions make_analysis(const Options& o) {
  AnalysisOptions a;
  a.method = o.method;
  a.epsilon_safe = o.epsilon;
  a.threads = o.threads;
  if (o.grid_cells) a.grid.cells_per_axis = *o.grid_cells;
  if (!o.grid_range.empty()) {
    a.grid.z_min = o.grid_range.at(0);
    a.grid.z_max = o.grid_range.at(1);
  }
  if (a.method == CdfMethod::Grid) a.grid.validate();
  if (!std::isfinite(a.epsilon_safe) || a.epsilon_safe < 0.0) {
    throw ConfigError("--epsilon must be >= 0");
  }
  return a;
}

OverlapMode parse_overlap(const std::string& text) {
  if (text == "random") return RandomSelection{};
  constexpr std::string_view prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string count = text.substr(prefix.size());
    try {
      std::size_t used = 0;
      const int shared = std::stoi(count, &used);
      if (used == count.size()) return FixedOverlap{shared};
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("--overlap must be 'random' or 'fixed:K', got '" + text + "'");
}

// Ordered key/value record for the single-result commands.
using Record = std::vector<std::pair<std::string, nlohmann::json>>;

std::string json_scalar_text(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return "none";
  if (value.is_number_float()) return format_real(value.get<double>());
  return value.dump();
}

void emit_record(std::ostream& out, const Record& record, OutputFormat format) {
  switch (format) {
    case OutputFormat::Json: {
      nlohmann::ordered_json object;
      for (const auto& [key, value] : record) object[key] = value;
      out << object.dump(2) << '\n';
      break;
    }
    case OutputFormat::Csv: {
      CsvWriter csv(out);
      for (const auto& entry : record) csv.field(entry.first);
      csv.end_row();
      for (const auto& entry : record) csv.field(json_scalar_text(entry.second));
      csv.end_row();
      break;
    }
    case OutputFormat::Pretty:
      for (const auto& [key, value] : record) {
        out << key << ": " << json_scalar_text(value) << '\n';
      }
      break;
  }
}

nlohmann::json level_json(const CriticalLevel& level) {
  return level ? nlohmann::json(*level) : nlohmann::json(nullptr);
}

// Primary output sink: --out file or the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback)
      : fallback_(&fallback), stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw IoError("cannot open output file '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& stream() { return *stream_; }
  std::ostream& fallback() { return *fallback_; }
  bool to_file() const { return file_.is_open(); }
  void close(const std::string& path) {
    if (!file_.is_open()) return;
    file_.close();
    if (file_.fail()) throw IoError("failed writing '" + path + "'");
  }

 private:
  std::ofstream file_;
  std::ostream* fallback_;
  std::ostream* stream_;
};

void add_market_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--N", o.market_size, "market size (number of projects)")
      ->check(CLI::PositiveNumber);
  auto* chi = cmd.add_option("--chi", o.chi, "market risk chi = sigma^2 T / 2");
  auto* sigma = cmd.add_option("--sigma", o.sigma, "project volatility");
  cmd.add_option("--T", o.horizon, "debt maturity (with --sigma)")->needs(sigma);
  chi->excludes(sigma);
  cmd.add_option("--mu", o.mu, "project drift");
}

void add_analysis_options(CLI::App& cmd, Options& o) {
  const std::map<std::string, CdfMethod> methods{{"grid", CdfMethod::Grid},
                                                 {"oracle", CdfMethod::Oracle}};
  cmd.add_option("--method", o.method, "bivariate CDF method")
      ->transform(CLI::CheckedTransformer(methods, CLI::ignore_case));
  cmd.add_option("--grid-cells", o.grid_cells, "grid cells per axis");
  cmd.add_option("--grid-range", o.grid_range, "grid z range: LO HI")
      ->expected(2);
  cmd.add_option("--epsilon", o.epsilon, "safe threshold on delta Phi2");
  cmd.add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

void add_output_options(CLI::App& cmd, Options& o) {
  const std::map<std::string, OutputFormat> formats{
      {"csv", OutputFormat::Csv}, {"json", OutputFormat::Json},
      {"pretty", OutputFormat::Pretty}};
  cmd.add_option("--output", o.format, "csv | json | pretty")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  cmd.add_option("--out", o.out_path, "write primary output to PATH");
}

void add_scenario_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--f-normal", o.f_normal, "normal leverage f_n");
  cmd.add_option("--f-abnormal", o.f_abnormal, "abnormal leverage f_a");
}

int run_pd(const Options& o, std::ostream& out) {
  const auto market = make_market(o, o.market_size);
  const BankStrategy strategy(o.f, o.n);
  const double z = z_score(strategy, market);
  emit_record(out,
              {{"f", o.f}, {"n", o.n}, {"N", o.market_size}, {"chi", market.chi()},
               {"mu", o.mu}, {"z", z}, {"pd", phi1(z)}},
              o.format);
  return kSuccess;
}

int run_spd(const Options& o, std::ostream& out) {
  const auto market = make_market(o, o.market_size);
  const auto analysis = make_analysis(o);
  const BankStrategy strategy(o.f, o.n);
  emit_record(out,
              {{"f", o.f}, {"n", o.n}, {"N", o.market_size}, {"chi", market.chi()},
               {"mu", o.mu}, {"rho", asset_correlation(o.n, market).value()},
               {"z", z_score(strategy, market)},
               {"individual_pd", individual_pd(strategy, market)},
               {"systemic_pd", systemic_pd(strategy, market, analysis)},
               {"method", to_string(analysis.method)}},
              o.format);
  return kSuccess;
}

int run_delta(const Options& o, std::ostream& out) {
  const auto market = make_market(o, o.market_size);
  const auto analysis = make_analysis(o);
  const LeverageScenario scenario(o.f_normal, o.f_abnormal);
  const double delta = delta_phi2(scenario, o.n, market, analysis);
  emit_record(out,
              {{"f_normal", o.f_normal}, {"f_abnormal", o.f_abnormal}, {"n", o.n},
               {"N", o.market_size}, {"chi", market.chi()}, {"mu", o.mu},
               {"delta_phi2", delta},
               {"regime", to_string(classify(delta, analysis.epsilon_safe))},
               {"method", to_string(analysis.method)}},
              o.format);
  return kSuccess;
}

int run_critical(const Options& o, std::ostream& out) {
  const auto market = make_market(o, o.market_size);
  const auto analysis = make_analysis(o);
  const LeverageScenario scenario(o.f_normal, o.f_abnormal);
  emit_record(out,
              {{"f_normal", o.f_normal}, {"f_abnormal", o.f_abnormal},
               {"N", o.market_size}, {"chi", market.chi()}, {"mu", o.mu},
               {"n_star", level_json(critical_diversification(scenario, market, analysis))},
               {"method", to_string(analysis.method)}},
              o.format);
  return kSuccess;
}

int run_mu_scan(const Options& o, std::ostream& out) {
  const auto market = make_market(o, o.market_size);
  const auto analysis = make_analysis(o);
  const LeverageScenario scenario(o.f_normal, o.f_abnormal);
  const auto scan = mu_sensitivity(scenario, market, o.mu_values, analysis);
  switch (o.format) {
    case OutputFormat::Json: {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& entry : scan) {
        rows.push_back({{"mu", entry.mu}, {"n_star", level_json(entry.critical_n)}});
      }
      out << nlohmann::json{{"N", o.market_size}, {"chi", market.chi()},
                            {"f_normal", o.f_normal}, {"f_abnormal", o.f_abnormal},
                            {"scan", rows}}
                 .dump(2)
          << '\n';
      break;
    }
    case OutputFormat::Csv: {
      CsvWriter csv(out);
      csv.field("mu").field("n_star");
      csv.end_row();
      for (const auto& entry : scan) {
        csv.field(entry.mu).field(format_level(entry.critical_n));
        csv.end_row();
      }
      break;
    }
    case OutputFormat::Pretty:
      for (const auto& entry : scan) {
        out << "mu=" << format_real(entry.mu)
            << " n*=" << format_level(entry.critical_n) << '\n';
      }
      break;
  }
  return kSuccess;
}

int run_table1(const Options& o, std::ostream& out) {
  const auto analysis = make_analysis(o);
  const ReferenceTableReport table{compute_reference_table(analysis)};
  switch (o.format) {
    case OutputFormat::Csv:
      write_reference_table_csv(out, table);
      break;
    case OutputFormat::Json:
      out << reference_table_to_json(table).dump(2) << '\n';
      break;
    case OutputFormat::Pretty:
      write_reference_table_pretty(out, table);
      break;
  }
  return kSuccess;
}

int run_sweep(const Options& o, Sink& sink, std::ostream& err) {
  const auto analysis = make_analysis(o);
  const LeverageScenario scenario(o.f_normal, o.f_abnormal);
  SweepBox box;
  box.market_sizes = o.market_sizes;
  box.chis = log_spaced(o.chi_min, o.chi_max, o.chi_count);
  box.n_min = o.n_min;
  box.n_max = o.n_max;
  const auto market = make_market(o, o.market_sizes.empty() ? 1 : o.market_sizes.front());
  const auto sweep = regime_sweep(scenario, market, box, analysis);

  std::ostream& out = sink.stream();
  switch (o.format) {
    case OutputFormat::Json:
      out << sweep_to_json(sweep, analysis).dump(2) << '\n';
      break;
    case OutputFormat::Csv:
    case OutputFormat::Pretty:
      write_sweep_csv(out, sweep);
      break;
  }
  if (!o.thresholds_out.empty()) {
    std::ofstream file(o.thresholds_out, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + o.thresholds_out + "'");
    write_thresholds_csv(file, sweep);
    if (!file) throw IoError("failed writing '" + o.thresholds_out + "'");
  }
  std::ostream& summary = sink.to_file() ? sink.fallback() : err;
  for (int market_size : o.market_sizes) {
    summary << "N=" << market_size
            << " risky_fraction=" << format_real(sweep.risky_fraction(market_size))
            << '\n';
  }
  return kSuccess;
}

int run_simulate(const Options& o, Sink& sink) {
  const auto market = make_market(o, o.market_size);
  SimConfig config{market,
                   {BankStrategy(o.f, o.n),
                    BankStrategy(o.f2.value_or(o.f), o.n2.value_or(o.n))}};
  config.overlap = parse_overlap(o.overlap);
  config.paths = o.paths;
  config.steps_per_horizon = o.steps;
  config.seed = o.seed;
  config.threads = o.threads;
  config.keep_terminal_values = !o.dump_paths.empty();
  const SimResult result = estimate_default_probs(config);
  const SimComparison cmp = compare_to_analytic(config, result);

  std::ostream& out = sink.stream();
  switch (o.format) {
    case OutputFormat::Json:
      out << sim_to_json(config, result, cmp).dump(2) << '\n';
      break;
    case OutputFormat::Csv:
      write_sim_csv(out, result, cmp);
      break;
    case OutputFormat::Pretty:
      write_sim_pretty(out, config, result, cmp);
      break;
  }
  if (!o.dump_paths.empty()) {
    std::ofstream file(o.dump_paths, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + o.dump_paths + "'");
    write_terminal_values_csv(file, result);
    if (!file) throw IoError("failed writing '" + o.dump_paths + "'");
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"Leverage, diversification and systemic default probability", "sysrisk"};
  app.set_config("--config", "", "key = value config file (INI/TOML)");
  app.require_subcommand(1);

  auto* pd = app.add_subcommand("pd", "individual default probability");
  auto* spd = app.add_subcommand("spd", "systemic (joint) default probability");
  auto* delta = app.add_subcommand("delta", "excessive-leverage differential");
  auto* critical = app.add_subcommand("critical-n", "critical diversification n*");
  auto* sweep = app.add_subcommand("sweep", "regime map over (N, n, chi)");
  auto* table1 = app.add_subcommand("table1", "reference n* table");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo default frequencies");
  auto* mu_scan = app.add_subcommand("mu-scan", "n* as a function of drift");

  for (auto* cmd : {pd, spd, simulate}) {
    cmd->add_option("--f", o.f, "leverage f in (0,1)");
    cmd->add_option("--n", o.n, "projects held per bank")->check(CLI::PositiveNumber);
  }
  delta->add_option("--n", o.n, "projects held per bank")->check(CLI::PositiveNumber);
  for (auto* cmd : {pd, spd, delta, critical, simulate, mu_scan}) {
    add_market_options(*cmd, o);
  }
  for (auto* cmd : {delta, critical, sweep, mu_scan}) add_scenario_options(*cmd, o);
  for (auto* cmd : {spd, delta, critical, sweep, table1, mu_scan}) {
    add_analysis_options(*cmd, o);
  }
  for (auto* cmd : {pd, spd, delta, critical, sweep, table1, simulate, mu_scan}) {
    add_output_options(*cmd, o);
  }

  sweep->add_option("--N", o.market_sizes, "market sizes")->delimiter(',');
  sweep->add_option("--chi-min", o.chi_min);
  sweep->add_option("--chi-max", o.chi_max);
  sweep->add_option("--chi-count", o.chi_count, "log-spaced chi points");
  sweep->add_option("--n-min", o.n_min);
  sweep->add_option("--n-max", o.n_max);
  sweep->add_option("--mu", o.mu, "project drift");
  sweep->add_option("--thresholds-out", o.thresholds_out, "CSV of n*(N, chi)");

  mu_scan->add_option("--mu-values", o.mu_values, "drift values")->delimiter(',');

  simulate->add_option("--f2", o.f2, "leverage of bank 2 (default --f)");
  simulate->add_option("--n2", o.n2, "projects held by bank 2 (default --n)");
  simulate->add_option("--paths", o.paths)->check(CLI::PositiveNumber);
  simulate->add_option("--steps", o.steps, "rebalancing steps per horizon")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", o.seed);
  simulate->add_option("--overlap", o.overlap, "random | fixed:K");
  simulate->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  simulate->add_option("--dump-paths", o.dump_paths, "per-path terminal values CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    Sink sink(o.out_path, out);
    int code = kSuccess;
    if (pd->parsed()) code = run_pd(o, sink.stream());
    else if (spd->parsed()) code = run_spd(o, sink.stream());
    else if (delta->parsed()) code = run_delta(o, sink.stream());
    else if (critical->parsed()) code = run_critical(o, sink.stream());
    else if (sweep->parsed()) code = run_sweep(o, sink, err);
    else if (table1->parsed()) code = run_table1(o, sink.stream());
    else if (simulate->parsed()) code = run_simulate(o, sink);
    else if (mu_scan->parsed()) code = run_mu_scan(o, sink.stream());
    sink.close(o.out_path);
    return code;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace sysrisk::cli
