#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sysrisk/merton.hpp"

namespace sysrisk {

/// Banks share exactly `shared` projects: bank 0 holds [0, n0) and bank 1
/// holds [n0 - shared, n0 - shared + n1).
struct FixedOverlap {
  int shared = 0;
};

/// Each bank draws its projects uniformly without replacement, per path.
struct RandomSelection {};

using OverlapMode = std::variant<FixedOverlap, RandomSelection>;

struct SimConfig {
  MarketParams market;
  std::array<BankStrategy, 2> strategies;
  OverlapMode overlap = FixedOverlap{};
  std::int64_t paths = 10000;
  int steps_per_horizon = 250;
  std::uint64_t seed = 0;
  double initial_price = 1.0;
  std::array<double, 2> initial_assets{1.0, 1.0};
  unsigned threads = 0;
  /// Keep per-path terminal asset values in the result.
  bool keep_terminal_values = false;

  void validate() const;  // throws ConfigError / DomainError
  double dt() const noexcept {
    return market.horizon() / static_cast<double>(steps_per_horizon);
  }
};

/// Equal-weight portfolio over a subset of price slots.
///
/// Units are restored to equal value shares at every rebalancing, which is
/// self-financing: the portfolio value is unchanged by the trade itself.
class PortfolioState {
 public:
  /// Splits `assets` equally across `slots` at the given prices.
  PortfolioState(std::vector<std::size_t> slots, std::span<const double> prices,
                 double assets);

  /// Sum of units times current prices.
  double value(std::span<const double> prices) const;

  /// Marks to `prices`, then sets units so every slot carries value / n.
  /// Returns the marked value.
  double rebalance(std::span<const double> prices);

  std::span<const std::size_t> slots() const noexcept { return slots_; }
  std::span<const double> units() const noexcept { return units_; }

 private:
  std::vector<std::size_t> slots_;
  std::vector<double> units_;
};

/// Price paths for all N projects: row s holds prices at time s * dt.
struct PriceTrajectories {
  int projects = 0;
  int steps = 0;
  std::vector<double> prices;  // (steps + 1) x projects, row-major

  std::span<const double> at_step(int step) const {
    return {prices.data() + static_cast<std::size_t>(step) * projects,
            static_cast<std::size_t>(projects)};
  }
};

/// Standard normal shock for (seed, path, step, project). Steps are 0-based.
double project_shock(std::uint64_t seed, std::int64_t path, int step,
                     int project);

/// Exact GBM stepping of every project for one path.
PriceTrajectories simulate_prices(const SimConfig& config,
                                  std::int64_t path_index);

/// Project indices held by each bank on `path_index`.
std::array<std::vector<int>, 2> holdings_for_path(const SimConfig& config,
                                                  std::int64_t path_index);

/// Runs one bank's rebalanced portfolio along `trajectories`; returns a(T).
double simulate_bank(const PriceTrajectories& trajectories,
                     std::span<const int> holdings, double initial_assets);

struct SimResult {
  std::array<double, 2> pd_hat{};
  double joint_pd_hat = 0.0;
  std::array<double, 2> pd_standard_error{};
  double joint_standard_error = 0.0;
  /// Pooled sample correlation of per-step log asset returns across banks.
  double realized_correlation = 0.0;
  /// Pooled sample variance of per-step log asset returns, per bank.
  std::array<double, 2> log_return_variance{};
  /// k / sqrt(n0 n1) under FixedOverlap(k); n0 n1 / (N sqrt(n0 n1)) for
  /// random selection (expected overlap).
  double target_correlation = 0.0;
  std::int64_t paths_used = 0;
  std::uint64_t seed_used = 0;
  std::vector<std::array<double, 2>> terminal_values;
};

/// Default frequencies of a(T) <= f a(0), individually and jointly.
SimResult estimate_default_probs(const SimConfig& config);

}  // namespace sysrisk
