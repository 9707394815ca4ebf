#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sysrisk/monte_carlo.hpp"
#include "sysrisk/systemic.hpp"

namespace sysrisk {

/// RFC 4180 writer: CRLF record terminator, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

/// "none" for an empty level.
std::string format_level(const CriticalLevel& level);

/// Long format: N, n, chi, delta_phi2, regime.
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
nlohmann::json sweep_to_json(const SweepResult& sweep,
                             const AnalysisOptions& options);

/// Threshold grid per N: N, chi, n_star.
void write_thresholds_csv(std::ostream& out, const SweepResult& sweep);

struct ReferenceTableReport {
  std::vector<CriticalTableRow> rows;
  /// Largest |computed - published|, treating "none" as N + 1.
  int max_abs_diff() const;
};

/// One row per N: six computed columns, six published, six differences.
void write_reference_table_csv(std::ostream& out,
                               const ReferenceTableReport& table);
nlohmann::json reference_table_to_json(const ReferenceTableReport& table);
void write_reference_table_pretty(std::ostream& out,
                                  const ReferenceTableReport& table);

/// Analytic values the simulation is compared against.
struct SimComparison {
  std::array<double, 2> analytic_pd{};
  double analytic_joint = 0.0;
  /// Correlation used for the analytic joint probability.
  double analytic_rho = 0.0;

  /// |estimate - analytic| / SE (infinite when SE = 0 and they differ).
  static double se_multiple(double estimate, double analytic, double se);
};

SimComparison compare_to_analytic(const SimConfig& config,
                                  const SimResult& result);

nlohmann::json sim_to_json(const SimConfig& config, const SimResult& result,
                           const SimComparison& comparison);
void write_sim_csv(std::ostream& out, const SimResult& result,
                   const SimComparison& comparison);
void write_sim_pretty(std::ostream& out, const SimConfig& config,
                      const SimResult& result, const SimComparison& comparison);
void write_terminal_values_csv(std::ostream& out, const SimResult& result);

}  // namespace sysrisk
