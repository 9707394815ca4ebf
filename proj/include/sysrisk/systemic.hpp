#pragma once

#include <map>
#include <optional>
#include <vector>

#include "sysrisk/gaussian.hpp"
#include "sysrisk/merton.hpp"

namespace sysrisk {

enum class CdfMethod { Grid, Oracle };

/// Knobs shared by the systemic-risk operations.
struct AnalysisOptions {
  CdfMethod method = CdfMethod::Oracle;
  GridSpec grid{};
  /// Differentials at or below this value count as "no increase".
  double epsilon_safe = 1e-6;
  unsigned threads = 0;
};

/// Normal leverage f_n and abnormal (excessive) leverage f_a > f_n.
class LeverageScenario {
 public:
  LeverageScenario(double f_normal, double f_abnormal);

  /// f_n = f_a; only useful as a zero-differential check.
  static LeverageScenario trivial(double leverage);

  double f_normal() const noexcept { return f_normal_; }
  double f_abnormal() const noexcept { return f_abnormal_; }
  double delta_f() const noexcept { return f_abnormal_ - f_normal_; }

 private:
  LeverageScenario(double f_normal, double f_abnormal, bool allow_equal);

  double f_normal_;
  double f_abnormal_;
};

enum class Regime { Safe, Risky };

const char* to_string(Regime regime) noexcept;
const char* to_string(CdfMethod method) noexcept;

/// Smallest n with every n' in [n, N] safe; empty means no safe level.
using CriticalLevel = std::optional<int>;

/// Orders critical levels with "no safe level" above every integer n <= N.
int critical_rank(const CriticalLevel& level, int market_size) noexcept;

/// Joint default probability of two identical banks:
/// Phi2(z, z, n/N) with z the common z-score.
double systemic_pd(const BankStrategy& strategy, const MarketParams& market,
                   const AnalysisOptions& options = {});

/// Phi2 at f_abnormal minus Phi2 at f_normal, both at diversification n.
double delta_phi2(const LeverageScenario& scenario, int n,
                  const MarketParams& market,
                  const AnalysisOptions& options = {});

Regime classify(double delta, double epsilon_safe) noexcept;

CriticalLevel critical_diversification(const LeverageScenario& scenario,
                                       const MarketParams& market,
                                       const AnalysisOptions& options = {});

struct RegimeCell {
  int n;
  double chi;
  int market_size;
  double delta_phi2;
  Regime regime;
};

struct ChiThreshold {
  double chi;
  CriticalLevel critical_n;
};

/// Parameter box for a regime map. n runs over [max(1, n_min), min(N, n_max)]
/// for each N.
struct SweepBox {
  std::vector<int> market_sizes{10, 20, 30, 40};
  std::vector<double> chis;
  int n_min = 1;
  std::optional<int> n_max;
};

/// `count` log-spaced chi values over [lo, hi] (both ends included).
std::vector<double> log_spaced(double lo, double hi, int count);

/// The regime-map default: 100 log-spaced chi values over [0.001, 9].
SweepBox default_sweep_box();

struct SweepResult {
  LeverageScenario scenario;
  MarketParams market_template;
  /// Sorted by (N, chi, n).
  std::vector<RegimeCell> cells;
  std::map<int, std::vector<ChiThreshold>> critical_n_by_chi;

  /// Fraction of cells for market size N that are Risky.
  double risky_fraction(int market_size) const;
  std::size_t risky_count() const;
};

/// Evaluates delta_phi2 on every (N, n, chi) cell of `box`. The drift of
/// `market_template` is kept; its N and chi are replaced per cell. Cells may
/// be evaluated concurrently but the result is independent of scheduling.
/// A failing cell aborts the sweep with an error naming the cell.
SweepResult regime_sweep(const LeverageScenario& scenario,
                         const MarketParams& market_template,
                         const SweepBox& box,
                         const AnalysisOptions& options = {});

struct MuThreshold {
  double mu;
  CriticalLevel critical_n;
};

std::vector<MuThreshold> mu_sensitivity(const LeverageScenario& scenario,
                                        const MarketParams& market,
                                        const std::vector<double>& mu_values,
                                        const AnalysisOptions& options = {});

/// Published minimum diversification levels for the two reference leverage
/// scenarios, N in {10, 20, 30, 40} and chi in {1.6, 5.1, 8.9}.
struct ReferenceTable {
  static constexpr int kMarketSizes[4] = {10, 20, 30, 40};
  static constexpr double kChis[3] = {1.6, 5.1, 8.9};
  static constexpr double kScenarios[2][2] = {{0.10, 0.25}, {0.25, 0.50}};
  /// [N row][scenario * 3 + chi column]
  static constexpr int kCriticalN[4][6] = {{3, 5, 6, 5, 6, 7},
                                           {4, 8, 10, 8, 11, 12},
                                           {5, 10, 13, 10, 15, 17},
                                           {5, 11, 15, 12, 18, 22}};
};

struct CriticalTableRow {
  int market_size;
  std::vector<CriticalLevel> computed;  // scenario-major, 6 entries
  std::vector<int> published;
};

/// Recomputes the reference table with `options`.
std::vector<CriticalTableRow> compute_reference_table(
    const AnalysisOptions& options = {});

}  // namespace sysrisk
