#include "sysrisk/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "sysrisk/gaussian.hpp"

namespace sysrisk {

namespace {

std::string scenario_label(double f_normal, double f_abnormal) {
  std::ostringstream label;
  label << std::fixed << std::setprecision(2) << "fn" << f_normal << "_fa"
        << f_abnormal;
  return label.str();
}

nlohmann::json level_json(const CriticalLevel& level) {
  return level ? nlohmann::json(*level) : nlohmann::json(nullptr);
}

}  // namespace

CsvWriter& CsvWriter::field(std::string_view text) {
  if (!first_) out_ << ',';
  first_ = false;
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    out_ << text;
    return *this;
  }
  out_ << '"';
  for (char c : text) {
    if (c == '"') out_ << '"';
    out_ << c;
  }
  out_ << '"';
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_real(value)); }

CsvWriter& CsvWriter::field(long long value) {
  return field(std::to_string(value));
}

void CsvWriter::end_row() {
  out_ << "\r\n";
  first_ = true;
}

std::string format_real(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string format_level(const CriticalLevel& level) {
  return level ? std::to_string(*level) : std::string("none");
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  CsvWriter csv(out);
  csv.field("N").field("n").field("chi").field("delta_phi2").field("regime");
  csv.end_row();
  for (const auto& cell : sweep.cells) {
    csv.field(cell.market_size).field(cell.n).field(cell.chi)
        .field(cell.delta_phi2).field(to_string(cell.regime));
    csv.end_row();
  }
}

void write_thresholds_csv(std::ostream& out, const SweepResult& sweep) {
  CsvWriter csv(out);
  csv.field("N").field("chi").field("n_star");
  csv.end_row();
  for (const auto& [market_size, thresholds] : sweep.critical_n_by_chi) {
    for (const auto& t : thresholds) {
      csv.field(market_size).field(t.chi).field(format_level(t.critical_n));
      csv.end_row();
    }
  }
}

nlohmann::json sweep_to_json(const SweepResult& sweep,
                             const AnalysisOptions& options) {
  nlohmann::json root;
  root["scenario"] = {{"f_normal", sweep.scenario.f_normal()},
                      {"f_abnormal", sweep.scenario.f_abnormal()},
                      {"delta_f", sweep.scenario.delta_f()}};
  root["mu"] = sweep.market_template.drift();
  root["method"] = to_string(options.method);
  root["epsilon_safe"] = options.epsilon_safe;

  nlohmann::json markets = nlohmann::json::array();
  auto it = sweep.cells.begin();
  while (it != sweep.cells.end()) {
    const int market_size = it->market_size;
    nlohmann::json cells = nlohmann::json::array();
    for (; it != sweep.cells.end() && it->market_size == market_size; ++it) {
      cells.push_back({{"n", it->n},
                       {"chi", it->chi},
                       {"delta_phi2", it->delta_phi2},
                       {"regime", to_string(it->regime)}});
    }
    nlohmann::json market{{"N", market_size},
                          {"risky_fraction", sweep.risky_fraction(market_size)},
                          {"cells", std::move(cells)}};
    if (auto found = sweep.critical_n_by_chi.find(market_size);
        found != sweep.critical_n_by_chi.end()) {
      nlohmann::json thresholds = nlohmann::json::array();
      for (const auto& t : found->second) {
        thresholds.push_back({{"chi", t.chi}, {"n_star", level_json(t.critical_n)}});
      }
      market["critical_n"] = std::move(thresholds);
    }
    markets.push_back(std::move(market));
  }
  root["markets"] = std::move(markets);
  return root;
}

int ReferenceTableReport::max_abs_diff() const {
  int worst = 0;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.computed.size(); ++c) {
      const int got = critical_rank(row.computed[c], row.market_size);
      worst = std::max(worst, std::abs(got - row.published[c]));
    }
  }
  return worst;
}

void write_reference_table_csv(std::ostream& out,
                               const ReferenceTableReport& table) {
  std::vector<std::string> labels;
  for (const auto& scenario : ReferenceTable::kScenarios) {
    for (double chi : ReferenceTable::kChis) {
      std::ostringstream label;
      label << scenario_label(scenario[0], scenario[1]) << "_chi" << chi;
      labels.push_back(label.str());
    }
  }
  CsvWriter csv(out);
  csv.field("N");
  for (const auto& l : labels) csv.field("n_star_" + l);
  for (const auto& l : labels) csv.field("published_" + l);
  for (const auto& l : labels) csv.field("diff_" + l);
  csv.end_row();
  for (const auto& row : table.rows) {
    csv.field(row.market_size);
    for (const auto& level : row.computed) csv.field(format_level(level));
    for (int published : row.published) csv.field(published);
    for (std::size_t c = 0; c < row.computed.size(); ++c) {
      if (row.computed[c]) {
        csv.field(*row.computed[c] - row.published[c]);
      } else {
        csv.field("none");
      }
    }
    csv.end_row();
  }
}

nlohmann::json reference_table_to_json(const ReferenceTableReport& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t c = 0; c < row.computed.size(); ++c) {
      const auto& scenario = ReferenceTable::kScenarios[c / 3];
      nlohmann::json cell{{"f_normal", scenario[0]},
                          {"f_abnormal", scenario[1]},
                          {"chi", ReferenceTable::kChis[c % 3]},
                          {"n_star", level_json(row.computed[c])},
                          {"published", row.published[c]}};
      cell["diff"] = row.computed[c]
                         ? nlohmann::json(*row.computed[c] - row.published[c])
                         : nlohmann::json(nullptr);
      cells.push_back(std::move(cell));
    }
    rows.push_back({{"N", row.market_size}, {"cells", std::move(cells)}});
  }
  return {{"rows", std::move(rows)}, {"max_abs_diff", table.max_abs_diff()}};
}

void write_reference_table_pretty(std::ostream& out,
                                  const ReferenceTableReport& table) {
  out << "Minimum diversification n* (computed / published)\n";
  out << std::setw(4) << "N";
  for (const auto& scenario : ReferenceTable::kScenarios) {
    for (double chi : ReferenceTable::kChis) {
      std::ostringstream head;
      head << "{" << scenario[0] << "," << scenario[1] << "} chi=" << chi;
      out << " | " << std::setw(20) << head.str();
    }
  }
  out << '\n';
  for (const auto& row : table.rows) {
    out << std::setw(4) << row.market_size;
    for (std::size_t c = 0; c < row.computed.size(); ++c) {
      std::ostringstream cell;
      cell << format_level(row.computed[c]) << " / " << row.published[c];
      out << " | " << std::setw(20) << cell.str();
    }
    out << '\n';
  }
  out << "max |computed - published| = " << table.max_abs_diff()
      << " (none counts as N+1)\n";
}

double SimComparison::se_multiple(double estimate, double analytic, double se) {
  const double gap = std::abs(estimate - analytic);
  if (se > 0.0) return gap / se;
  return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

SimComparison compare_to_analytic(const SimConfig& config,
                                  const SimResult& result) {
  SimComparison cmp;
  std::array<double, 2> z{};
  for (int b = 0; b < 2; ++b) {
    z[b] = z_score(config.strategies[b], config.market);
    cmp.analytic_pd[b] = phi1(z[b]);
  }
  cmp.analytic_rho = std::min(1.0, result.target_correlation);
  cmp.analytic_joint = binorm_cdf_oracle(z[0], z[1], Correlation(cmp.analytic_rho));
  return cmp;
}

nlohmann::json sim_to_json(const SimConfig& config, const SimResult& result,
                           const SimComparison& cmp) {
  nlohmann::json banks = nlohmann::json::array();
  for (int b = 0; b < 2; ++b) {
    banks.push_back(
        {{"f", config.strategies[b].leverage()},
         {"n", config.strategies[b].diversification()},
         {"pd_hat", result.pd_hat[b]},
         {"standard_error", result.pd_standard_error[b]},
         {"log_return_variance", result.log_return_variance[b]},
         {"analytic_pd", cmp.analytic_pd[b]},
         {"abs_deviation", std::abs(result.pd_hat[b] - cmp.analytic_pd[b])},
         {"se_multiple", SimComparison::se_multiple(result.pd_hat[b], cmp.analytic_pd[b],
                                                    result.pd_standard_error[b])}});
  }
  nlohmann::json overlap;
  if (const auto* fixed = std::get_if<FixedOverlap>(&config.overlap)) {
    overlap = {{"mode", "fixed"}, {"shared", fixed->shared}};
  } else {
    overlap = {{"mode", "random"}};
  }
  const double joint_multiple = SimComparison::se_multiple(
      result.joint_pd_hat, cmp.analytic_joint, result.joint_standard_error);
  return {{"N", config.market.market_size()},
          {"chi", config.market.chi()},
          {"sigma", config.market.sigma()},
          {"T", config.market.horizon()},
          {"mu", config.market.drift()},
          {"overlap", std::move(overlap)},
          {"steps", config.steps_per_horizon},
          {"banks", std::move(banks)},
          {"joint_pd_hat", result.joint_pd_hat},
          {"joint_standard_error", result.joint_standard_error},
          {"analytic_joint", cmp.analytic_joint},
          {"joint_abs_deviation", std::abs(result.joint_pd_hat - cmp.analytic_joint)},
          {"joint_se_multiple", std::isfinite(joint_multiple)
                                    ? nlohmann::json(joint_multiple)
                                    : nlohmann::json(nullptr)},
          {"realized_correlation", result.realized_correlation},
          {"target_correlation", result.target_correlation},
          {"paths_used", result.paths_used},
          {"seed_used", result.seed_used}};
}

void write_sim_csv(std::ostream& out, const SimResult& result,
                   const SimComparison& cmp) {
  CsvWriter csv(out);
  for (const char* name :
       {"pd1_hat", "pd2_hat", "joint_pd_hat", "se_pd1", "se_pd2", "se_joint",
        "realized_correlation", "target_correlation", "analytic_pd1",
        "analytic_pd2", "analytic_joint", "paths_used", "seed_used"}) {
    csv.field(name);
  }
  csv.end_row();
  csv.field(result.pd_hat[0]).field(result.pd_hat[1]).field(result.joint_pd_hat)
      .field(result.pd_standard_error[0]).field(result.pd_standard_error[1])
      .field(result.joint_standard_error).field(result.realized_correlation)
      .field(result.target_correlation).field(cmp.analytic_pd[0])
      .field(cmp.analytic_pd[1]).field(cmp.analytic_joint)
      .field(static_cast<long long>(result.paths_used))
      .field(std::to_string(result.seed_used));
  csv.end_row();
}

void write_sim_pretty(std::ostream& out, const SimConfig& config,
                      const SimResult& result, const SimComparison& cmp) {
  auto verdict = [](double multiple) { return multiple <= 3.0 ? "ok" : "DEVIATES"; };
  out << "paths=" << result.paths_used << " seed=" << result.seed_used
      << " steps=" << config.steps_per_horizon << " N=" << config.market.market_size()
      << " chi=" << format_real(config.market.chi()) << '\n';
  for (int b = 0; b < 2; ++b) {
    const double m = SimComparison::se_multiple(result.pd_hat[b], cmp.analytic_pd[b],
                                                result.pd_standard_error[b]);
    out << "bank " << b + 1 << ": pd_hat=" << format_real(result.pd_hat[b])
        << " se=" << format_real(result.pd_standard_error[b])
        << " analytic=" << format_real(cmp.analytic_pd[b])
        << " |dev|/se=" << format_real(m) << ' ' << verdict(m) << '\n';
  }
  const double m = SimComparison::se_multiple(result.joint_pd_hat, cmp.analytic_joint,
                                              result.joint_standard_error);
  out << "joint: pd_hat=" << format_real(result.joint_pd_hat)
      << " se=" << format_real(result.joint_standard_error)
      << " analytic=" << format_real(cmp.analytic_joint)
      << " |dev|/se=" << format_real(m) << ' ' << verdict(m) << '\n';
  out << "correlation: realized=" << format_real(result.realized_correlation)
      << " target=" << format_real(result.target_correlation) << '\n';
}

void write_terminal_values_csv(std::ostream& out, const SimResult& result) {
  CsvWriter csv(out);
  csv.field("path").field("a1_T").field("a2_T");
  csv.end_row();
  for (std::size_t p = 0; p < result.terminal_values.size(); ++p) {
    csv.field(static_cast<long long>(p))
        .field(result.terminal_values[p][0])
        .field(result.terminal_values[p][1]);
    csv.end_row();
  }
}

}  // namespace sysrisk
