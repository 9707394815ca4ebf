#include "sysrisk/systemic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>

#include "sysrisk/error.hpp"

namespace sysrisk {

namespace {

// Evaluates Phi2(z, z, rho) for one fixed rho, building the grid lazily.
class JointEvaluator {
 public:
  JointEvaluator(Correlation rho, const AnalysisOptions& options)
      : rho_(rho), options_(options) {}

  double operator()(double z) {
    const double r = rho_.value();
    if (std::abs(r) > kDegenerateRhoBound) {
      return binorm_cdf_degenerate(z, z, r);
    }
    if (options_.method == CdfMethod::Oracle) {
      return binorm_cdf_oracle(z, z, rho_);
    }
    if (!grid_) grid_ = CdfGrid::build(rho_, options_.grid, options_.threads);
    return (*grid_)(z, z);
  }

 private:
  Correlation rho_;
  const AnalysisOptions& options_;
  std::optional<CdfGrid> grid_;
};

double differential(const LeverageScenario& scenario, int n,
                    const MarketParams& market, JointEvaluator& joint) {
  const double z_abnormal =
      z_score(BankStrategy(scenario.f_abnormal(), n), market);
  const double z_normal = z_score(BankStrategy(scenario.f_normal(), n), market);
  if (scenario.f_abnormal() == scenario.f_normal()) return 0.0;
  return joint(z_abnormal) - joint(z_normal);
}

void validate_options(const AnalysisOptions& options) {
  if (!std::isfinite(options.epsilon_safe) || options.epsilon_safe < 0.0) {
    throw ConfigError("epsilon_safe must be finite and >= 0");
  }
  if (options.method == CdfMethod::Grid) options.grid.validate();
}

// Suffix-safe threshold from deltas indexed by n = 1..N (deltas[n - 1]).
CriticalLevel threshold_from(const std::vector<double>& deltas,
                             double epsilon_safe) {
  CriticalLevel level;
  for (int n = static_cast<int>(deltas.size()); n >= 1; --n) {
    if (classify(deltas[n - 1], epsilon_safe) == Regime::Risky) break;
    level = n;
  }
  return level;
}

}  // namespace

LeverageScenario::LeverageScenario(double f_normal, double f_abnormal)
    : LeverageScenario(f_normal, f_abnormal, false) {}

LeverageScenario::LeverageScenario(double f_normal, double f_abnormal,
                                   bool allow_equal)
    : f_normal_(f_normal), f_abnormal_(f_abnormal) {
  // Reuse the leverage domain check.
  BankStrategy(f_normal, 1);
  BankStrategy(f_abnormal, 1);
  if (allow_equal ? f_abnormal < f_normal : f_abnormal <= f_normal) {
    throw DomainError("abnormal leverage must exceed normal leverage");
  }
}

LeverageScenario LeverageScenario::trivial(double leverage) {
  return LeverageScenario(leverage, leverage, true);
}

const char* to_string(Regime regime) noexcept {
  return regime == Regime::Safe ? "safe" : "risky";
}

const char* to_string(CdfMethod method) noexcept {
  return method == CdfMethod::Grid ? "grid" : "oracle";
}

int critical_rank(const CriticalLevel& level, int market_size) noexcept {
  return level ? *level : market_size + 1;
}

Regime classify(double delta, double epsilon_safe) noexcept {
  return delta <= epsilon_safe ? Regime::Safe : Regime::Risky;
}

double systemic_pd(const BankStrategy& strategy, const MarketParams& market,
                   const AnalysisOptions& options) {
  validate_options(options);
  const double z = z_score(strategy, market);
  JointEvaluator joint(asset_correlation(strategy.diversification(), market),
                       options);
  return joint(z);
}

double delta_phi2(const LeverageScenario& scenario, int n,
                  const MarketParams& market, const AnalysisOptions& options) {
  validate_options(options);
  JointEvaluator joint(asset_correlation(n, market), options);
  return differential(scenario, n, market, joint);
}

CriticalLevel critical_diversification(const LeverageScenario& scenario,
                                       const MarketParams& market,
                                       const AnalysisOptions& options) {
  validate_options(options);
  CriticalLevel level;
  for (int n = market.market_size(); n >= 1; --n) {
    JointEvaluator joint(asset_correlation(n, market), options);
    const double delta = differential(scenario, n, market, joint);
    if (classify(delta, options.epsilon_safe) == Regime::Risky) break;
    level = n;
  }
  return level;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw ConfigError("log spacing needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> values(static_cast<std::size_t>(count));
  if (count == 1) {
    values[0] = lo;
    return values;
  }
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / (count - 1);
  for (int i = 0; i < count; ++i) {
    values[static_cast<std::size_t>(i)] = std::exp(log_lo + step * i);
  }
  values.front() = lo;
  values.back() = hi;
  return values;
}

SweepBox default_sweep_box() {
  SweepBox box;
  box.chis = log_spaced(0.001, 9.0, 100);
  return box;
}

double SweepResult::risky_fraction(int market_size) const {
  std::size_t total = 0;
  std::size_t risky = 0;
  for (const auto& cell : cells) {
    if (cell.market_size != market_size) continue;
    ++total;
    if (cell.regime == Regime::Risky) ++risky;
  }
  if (total == 0) {
    throw DomainError("sweep has no cells for N=" + std::to_string(market_size));
  }
  return static_cast<double>(risky) / static_cast<double>(total);
}

std::size_t SweepResult::risky_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const RegimeCell& c) {
        return c.regime == Regime::Risky;
      }));
}

SweepResult regime_sweep(const LeverageScenario& scenario,
                         const MarketParams& market_template,
                         const SweepBox& box, const AnalysisOptions& options) {
  validate_options(options);
  if (box.market_sizes.empty() || box.chis.empty()) {
    throw ConfigError("sweep needs at least one market size and one chi");
  }
  if (box.n_max && *box.n_max < box.n_min) {
    throw ConfigError("sweep n range is empty");
  }

  // One task per (N, n): the correlation n/N is shared by every chi, so the
  // grid method tabulates once per task.
  struct Task {
    int market_size;
    int n;
  };
  std::vector<Task> tasks;
  for (int market_size : box.market_sizes) {
    if (market_size < 1) throw ConfigError("market sizes must be >= 1");
    const int hi = std::min(market_size, box.n_max.value_or(market_size));
    const int lo = std::max(1, box.n_min);
    if (lo > hi) {
      throw ConfigError("sweep n range is empty for N=" +
                        std::to_string(market_size));
    }
    for (int n = lo; n <= hi; ++n) tasks.push_back({market_size, n});
  }
  const std::size_t chi_count = box.chis.size();
  std::vector<RegimeCell> flat(tasks.size() * chi_count);

  // Grid tabulation is itself parallel; run tasks serially in that case.
  AnalysisOptions inner = options;
  unsigned workers = options.threads != 0
                         ? options.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  if (options.method == CdfMethod::Grid) {
    workers = 1;
  } else {
    inner.threads = 1;
  }
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, std::max<std::size_t>(1, tasks.size())));

  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::size_t failed_task = tasks.size();

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const MarketParams sized = market_template.with_market_size(task.market_size);
    JointEvaluator joint(asset_correlation(task.n, sized), inner);
    for (std::size_t c = 0; c < chi_count; ++c) {
      const double chi = box.chis[c];
      const MarketParams market = sized.with_chi(chi);
      const double delta = differential(scenario, task.n, market, joint);
      if (!std::isfinite(delta)) {
        throw NumericalError("non-finite differential");
      }
      flat[t * chi_count + c] = RegimeCell{task.n, chi, task.market_size, delta,
                                           classify(delta, options.epsilon_safe)};
    }
  };
  auto worker = [&](unsigned id) {
    for (std::size_t t = id; t < tasks.size(); t += workers) {
      try {
        run_task(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (t < failed_task) {
          failed_task = t;
          failure = std::current_exception();
        }
        return;
      }
    }
  };
  if (workers <= 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < workers; ++id) pool.emplace_back(worker, id);
  }
  if (failure) {
    const Task& task = tasks[failed_task];
    std::ostringstream where;
    where << "sweep failed at N=" << task.market_size << ", n=" << task.n;
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      throw NumericalError(where.str() + ": " + e.what());
    }
  }

  std::sort(flat.begin(), flat.end(), [](const RegimeCell& a, const RegimeCell& b) {
    return std::tie(a.market_size, a.chi, a.n) < std::tie(b.market_size, b.chi, b.n);
  });

  SweepResult result{scenario, market_template, std::move(flat), {}};

  // Thresholds per (N, chi) need the full n range [1, N].
  const bool full_n_range = box.n_min <= 1 && !box.n_max.has_value();
  if (full_n_range) {
    auto it = result.cells.begin();
    while (it != result.cells.end()) {
      const int market_size = it->market_size;
      const double chi = it->chi;
      std::vector<double> deltas;
      for (; it != result.cells.end() && it->market_size == market_size &&
             it->chi == chi;
           ++it) {
        deltas.push_back(it->delta_phi2);
      }
      result.critical_n_by_chi[market_size].push_back(
          {chi, threshold_from(deltas, options.epsilon_safe)});
    }
  }
  return result;
}

std::vector<MuThreshold> mu_sensitivity(const LeverageScenario& scenario,
                                        const MarketParams& market,
                                        const std::vector<double>& mu_values,
                                        const AnalysisOptions& options) {
  std::vector<MuThreshold> out;
  out.reserve(mu_values.size());
  for (double mu : mu_values) {
    out.push_back({mu, critical_diversification(
                           scenario, market.with_drift(mu), options)});
  }
  return out;
}

std::vector<CriticalTableRow> compute_reference_table(
    const AnalysisOptions& options) {
  std::vector<CriticalTableRow> rows;
  for (int r = 0; r < 4; ++r) {
    const int market_size = ReferenceTable::kMarketSizes[r];
    CriticalTableRow row{market_size, {}, {}};
    for (int s = 0; s < 2; ++s) {
      const LeverageScenario scenario(ReferenceTable::kScenarios[s][0],
                                      ReferenceTable::kScenarios[s][1]);
      for (int c = 0; c < 3; ++c) {
        const auto market =
            MarketParams::from_chi(market_size, ReferenceTable::kChis[c]);
        row.computed.push_back(
            critical_diversification(scenario, market, options));
        row.published.push_back(ReferenceTable::kCriticalN[r][s * 3 + c]);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sysrisk
