#include "sysrisk/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "sysrisk/error.hpp"
#include "sysrisk/philox.hpp"

namespace sysrisk {

namespace {

// Step coordinates at and above this value are reserved for selection draws.
constexpr std::uint32_t kSelectionTag = 0xFFFFFFFEu;

Philox4x32::Counter shock_counter(int step, int pair, std::int64_t path) {
  const auto p = static_cast<std::uint64_t>(path);
  return {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(pair),
          static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
}

// Uniform integer in [0, bound) for a selection draw.
std::uint64_t selection_draw(const Philox4x32& rng, int bank, int draw,
                             std::int64_t path, std::uint64_t bound) {
  const auto p = static_cast<std::uint64_t>(path);
  const auto block =
      rng({kSelectionTag + static_cast<std::uint32_t>(bank),
           static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(p),
           static_cast<std::uint32_t>(p >> 32)});
  const std::uint64_t bits = (std::uint64_t{block[0]} << 32) | block[1];
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(bits) * bound) >> 64);
}

struct PathOutcome {
  std::array<double, 2> terminal{};
  std::array<double, 2> sum{};
  std::array<double, 2> sum_sq{};
  double sum_cross = 0.0;
};

PathOutcome run_path(const SimConfig& config, std::int64_t path) {
  const auto holdings = holdings_for_path(config, path);

  // Only projects held by some bank need prices.
  std::vector<int> active;
  active.reserve(holdings[0].size() + holdings[1].size());
  active.insert(active.end(), holdings[0].begin(), holdings[0].end());
  active.insert(active.end(), holdings[1].begin(), holdings[1].end());
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());

  auto slots_of = [&](const std::vector<int>& held) {
    std::vector<std::size_t> slots;
    slots.reserve(held.size());
    for (int project : held) {
      slots.push_back(static_cast<std::size_t>(
          std::lower_bound(active.begin(), active.end(), project) -
          active.begin()));
    }
    return slots;
  };

  const double dt = config.dt();
  const double sigma = config.market.sigma();
  const double drift_step = (config.market.drift() - 0.5 * sigma * sigma) * dt;
  const double vol_step = sigma * std::sqrt(dt);
  const double price0 = config.initial_price;

  std::vector<double> log_growth(active.size(), 0.0);
  std::vector<double> prices(active.size(), price0);
  std::array<PortfolioState, 2> books{
      PortfolioState(slots_of(holdings[0]), prices, config.initial_assets[0]),
      PortfolioState(slots_of(holdings[1]), prices, config.initial_assets[1])};
  std::array<double, 2> value = config.initial_assets;

  const Philox4x32 rng(config.seed);
  PathOutcome out;
  for (int step = 0; step < config.steps_per_horizon; ++step) {
    int cached_pair = -1;
    std::pair<double, double> shocks{};
    for (std::size_t k = 0; k < active.size(); ++k) {
      const int project = active[k];
      if (project / 2 != cached_pair) {
        cached_pair = project / 2;
        shocks = normal_pair(rng(shock_counter(step, cached_pair, path)));
      }
      const double xi = (project % 2 == 0) ? shocks.first : shocks.second;
      log_growth[k] += drift_step + vol_step * xi;
      prices[k] = price0 * std::exp(log_growth[k]);
    }
    std::array<double, 2> r{};
    for (int b = 0; b < 2; ++b) {
      const double next = books[b].rebalance(prices);
      r[b] = std::log(next / value[b]);
      value[b] = next;
      out.sum[b] += r[b];
      out.sum_sq[b] += r[b] * r[b];
    }
    out.sum_cross += r[0] * r[1];
  }
  out.terminal = value;
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (paths < 1) throw ConfigError("paths must be >= 1");
  if (steps_per_horizon < 1) throw ConfigError("steps per horizon must be >= 1");
  if (!std::isfinite(initial_price) || initial_price <= 0.0) {
    throw ConfigError("initial price must be > 0");
  }
  for (double a : initial_assets) {
    if (!std::isfinite(a) || a <= 0.0) {
      throw ConfigError("initial assets must be > 0");
    }
  }
  for (const auto& s : strategies) s.check_against(market);
  if (const auto* fixed = std::get_if<FixedOverlap>(&overlap)) {
    const int n0 = strategies[0].diversification();
    const int n1 = strategies[1].diversification();
    const int lo = std::max(0, n0 + n1 - market.market_size());
    const int hi = std::min(n0, n1);
    if (fixed->shared < lo || fixed->shared > hi) {
      throw ConfigError("fixed overlap k=" + std::to_string(fixed->shared) +
                        " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
  }
}

PortfolioState::PortfolioState(std::vector<std::size_t> slots,
                               std::span<const double> prices, double assets)
    : slots_(std::move(slots)), units_(slots_.size()) {
  if (slots_.empty()) throw DomainError("portfolio needs at least one project");
  const double share = assets / static_cast<double>(slots_.size());
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    units_[k] = share / prices[slots_[k]];
  }
}

double PortfolioState::value(std::span<const double> prices) const {
  double total = 0.0;
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    total += units_[k] * prices[slots_[k]];
  }
  return total;
}

double PortfolioState::rebalance(std::span<const double> prices) {
  const double total = value(prices);
  const double share = total / static_cast<double>(slots_.size());
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    units_[k] = share / prices[slots_[k]];
  }
  return total;
}

double project_shock(std::uint64_t seed, std::int64_t path, int step,
                     int project) {
  const auto block = Philox4x32(seed)(shock_counter(step, project / 2, path));
  const auto [even, odd] = normal_pair(block);
  return project % 2 == 0 ? even : odd;
}

PriceTrajectories simulate_prices(const SimConfig& config,
                                  std::int64_t path_index) {
  config.validate();
  const int projects = config.market.market_size();
  const int steps = config.steps_per_horizon;
  PriceTrajectories out{projects, steps, {}};
  out.prices.resize(static_cast<std::size_t>(steps + 1) * projects);

  const double dt = config.dt();
  const double sigma = config.market.sigma();
  const double drift_step = (config.market.drift() - 0.5 * sigma * sigma) * dt;
  const double vol_step = sigma * std::sqrt(dt);
  const Philox4x32 rng(config.seed);

  std::vector<double> log_growth(static_cast<std::size_t>(projects), 0.0);
  std::fill_n(out.prices.begin(), projects, config.initial_price);
  for (int step = 0; step < steps; ++step) {
    double* row = out.prices.data() + static_cast<std::size_t>(step + 1) * projects;
    for (int pair = 0; 2 * pair < projects; ++pair) {
      const auto [even, odd] = normal_pair(rng(shock_counter(step, pair, path_index)));
      for (int project : {2 * pair, 2 * pair + 1}) {
        if (project >= projects) break;
        const double xi = project % 2 == 0 ? even : odd;
        log_growth[project] += drift_step + vol_step * xi;
        row[project] = config.initial_price * std::exp(log_growth[project]);
      }
    }
  }
  return out;
}

std::array<std::vector<int>, 2> holdings_for_path(const SimConfig& config,
                                                  std::int64_t path_index) {
  const int market_size = config.market.market_size();
  const int n0 = config.strategies[0].diversification();
  const int n1 = config.strategies[1].diversification();
  std::array<std::vector<int>, 2> held;

  if (const auto* fixed = std::get_if<FixedOverlap>(&config.overlap)) {
    held[0].resize(static_cast<std::size_t>(n0));
    held[1].resize(static_cast<std::size_t>(n1));
    std::iota(held[0].begin(), held[0].end(), 0);
    std::iota(held[1].begin(), held[1].end(), n0 - fixed->shared);
    return held;
  }

  const Philox4x32 rng(config.seed);
  for (int bank = 0; bank < 2; ++bank) {
    std::vector<int> pool(static_cast<std::size_t>(market_size));
    std::iota(pool.begin(), pool.end(), 0);
    const int count = config.strategies[bank].diversification();
    for (int draw = 0; draw < count; ++draw) {
      const auto remaining = static_cast<std::uint64_t>(market_size - draw);
      const auto pick = draw + static_cast<int>(
                                   selection_draw(rng, bank, draw, path_index, remaining));
      std::swap(pool[static_cast<std::size_t>(draw)],
                pool[static_cast<std::size_t>(pick)]);
    }
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    held[bank] = std::move(pool);
  }
  return held;
}

double simulate_bank(const PriceTrajectories& trajectories,
                     std::span<const int> holdings, double initial_assets) {
  if (holdings.empty()) throw DomainError("holdings set is empty");
  std::vector<std::size_t> slots(holdings.begin(), holdings.end());
  for (std::size_t slot : slots) {
    if (slot >= static_cast<std::size_t>(trajectories.projects)) {
      throw DomainError("holding refers to a project outside the market");
    }
  }
  PortfolioState book(std::move(slots), trajectories.at_step(0), initial_assets);
  double value = initial_assets;
  for (int step = 1; step <= trajectories.steps; ++step) {
    value = book.rebalance(trajectories.at_step(step));
  }
  return value;
}

SimResult estimate_default_probs(const SimConfig& config) {
  config.validate();
  const auto paths = config.paths;
  std::vector<PathOutcome> outcomes(static_cast<std::size_t>(paths));

  unsigned workers = config.threads != 0
                         ? config.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, paths));
  auto work = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      outcomes[static_cast<std::size_t>(p)] = run_path(config, p);
    }
  };
  if (workers <= 1) {
    work(0, paths);
  } else {
    std::vector<std::jthread> pool;
    const std::int64_t chunk = (paths + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::int64_t begin = t * chunk;
      const std::int64_t end = std::min(paths, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  // Reduce in path order so totals do not depend on the thread count.
  std::array<double, 2> debt{};
  for (int b = 0; b < 2; ++b) {
    debt[b] = config.strategies[b].leverage() * config.initial_assets[b];
  }
  std::array<std::int64_t, 2> defaults{};
  std::int64_t joint = 0;
  std::array<double, 2> sum{};
  std::array<double, 2> sum_sq{};
  double sum_cross = 0.0;
  SimResult result;
  if (config.keep_terminal_values) result.terminal_values.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    const bool d0 = o.terminal[0] <= debt[0];
    const bool d1 = o.terminal[1] <= debt[1];
    defaults[0] += d0;
    defaults[1] += d1;
    joint += d0 && d1;
    for (int b = 0; b < 2; ++b) {
      sum[b] += o.sum[b];
      sum_sq[b] += o.sum_sq[b];
    }
    sum_cross += o.sum_cross;
    if (config.keep_terminal_values) result.terminal_values.push_back(o.terminal);
  }

  const auto total = static_cast<double>(paths);
  auto standard_error = [total](double p) { return std::sqrt(p * (1.0 - p) / total); };
  for (int b = 0; b < 2; ++b) {
    result.pd_hat[b] = static_cast<double>(defaults[b]) / total;
    result.pd_standard_error[b] = standard_error(result.pd_hat[b]);
  }
  result.joint_pd_hat = static_cast<double>(joint) / total;
  result.joint_standard_error = standard_error(result.joint_pd_hat);

  const double samples = total * config.steps_per_horizon;
  std::array<double, 2> mean{};
  for (int b = 0; b < 2; ++b) {
    mean[b] = sum[b] / samples;
    result.log_return_variance[b] =
        samples > 1.0 ? (sum_sq[b] - samples * mean[b] * mean[b]) / (samples - 1.0)
                      : 0.0;
  }
  const double covariance =
      samples > 1.0 ? (sum_cross - samples * mean[0] * mean[1]) / (samples - 1.0) : 0.0;
  const double scale =
      std::sqrt(result.log_return_variance[0] * result.log_return_variance[1]);
  result.realized_correlation = scale > 0.0 ? covariance / scale : 0.0;

  const double n0 = config.strategies[0].diversification();
  const double n1 = config.strategies[1].diversification();
  if (const auto* fixed = std::get_if<FixedOverlap>(&config.overlap)) {
    result.target_correlation = fixed->shared / std::sqrt(n0 * n1);
  } else {
    result.target_correlation =
        n0 * n1 / (config.market.market_size() * std::sqrt(n0 * n1));
  }
  result.paths_used = paths;
  result.seed_used = config.seed;
  return result;
}

}  // namespace sysrisk
