#include <doctest.h>

#include <cmath>
#include <set>

#include "support/brute_force.hpp"
#include "sysrisk/error.hpp"
#include "sysrisk/gaussian.hpp"
#include "sysrisk/monte_carlo.hpp"
#include "sysrisk/philox.hpp"

using namespace sysrisk;

namespace {

SimConfig homogeneous(double f, int n, int market_size, int shared, double chi,
                      std::int64_t paths, std::uint64_t seed = 2024) {
  SimConfig config{MarketParams::from_chi(market_size, chi),
                   {BankStrategy(f, n), BankStrategy(f, n)}};
  config.overlap = FixedOverlap{shared};
  config.paths = paths;
  config.seed = seed;
  return config;
}

bool same_result(const SimResult& a, const SimResult& b) {
  return a.pd_hat == b.pd_hat && a.joint_pd_hat == b.joint_pd_hat &&
         a.realized_correlation == b.realized_correlation &&
         a.log_return_variance == b.log_return_variance &&
         a.terminal_values == b.terminal_values;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(Philox4x32(0)({0, 0, 0, 0}) ==
        Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32(~std::uint64_t{0})({~0u, ~0u, ~0u, ~0u}) ==
        Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32(0x299f31d0a4093822ull)({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
        Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal quantile against high-precision values") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400542355).epsilon(1e-15));
  CHECK(normal_quantile(0.3) == doctest::Approx(-0.52440051270804078404).epsilon(1e-15));
  CHECK(normal_quantile(0.01) == doctest::Approx(-2.3263478740408411009).epsilon(1e-15));
  CHECK(normal_quantile(1e-15) == doctest::Approx(-7.94134532617099678).epsilon(1e-14));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.3613409024040562047).epsilon(1e-15));
  CHECK(normal_quantile(1e-300) == doctest::Approx(-37.0470962993611992).epsilon(1e-14));
  // 0.999999 is not representable; the quantile amplifies that rounding.
  CHECK(normal_quantile(0.999999) == doctest::Approx(4.7534243088228989482).epsilon(1e-10));

  // Round trip through the forward CDF across the unit interval.
  for (int i = 1; i < 1000; ++i) {
    const double p = i / 1000.0;
    REQUIRE(phi1(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-14));
  }
}

TEST_CASE("uniform and normal transforms") {
  CHECK(open_unit(0, 0) > 0.0);
  CHECK(open_unit(~0u, ~0u) < 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  const Philox4x32 rng(99);
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    const auto [a, b] = normal_pair(rng({static_cast<std::uint32_t>(i), 0, 0, 0}));
    sum += a + b;
    sum_sq += a * a + b * b;
  }
  const double mean = sum / (2 * draws);
  const double var = sum_sq / (2 * draws) - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(2.0 * draws));
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("config validation") {
  auto config = homogeneous(0.25, 4, 8, 2, 1.6, 10);
  CHECK_NOTHROW(config.validate());
  config.overlap = FixedOverlap{5};
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.overlap = FixedOverlap{-1};
  CHECK_THROWS_AS(config.validate(), ConfigError);

  auto crowded = homogeneous(0.25, 6, 8, 3, 1.6, 10);  // needs k >= 4
  CHECK_THROWS_AS(crowded.validate(), ConfigError);
  crowded.overlap = FixedOverlap{4};
  CHECK_NOTHROW(crowded.validate());

  auto bad = homogeneous(0.25, 4, 8, 2, 1.6, 0);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.paths = 1;
  bad.steps_per_horizon = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  auto mismatch = homogeneous(0.25, 9, 8, 2, 1.6, 10);
  CHECK_THROWS_AS(mismatch.validate(), StrategyMismatchError);
}

TEST_CASE("price paths are deterministic per (seed, path)") {
  auto config = homogeneous(0.25, 3, 5, 1, 1.6, 1);
  config.steps_per_horizon = 20;
  const auto a = simulate_prices(config, 17);
  const auto b = simulate_prices(config, 17);
  const auto c = simulate_prices(config, 18);
  CHECK(a.prices == b.prices);
  CHECK(a.prices != c.prices);
  REQUIRE(a.prices.size() == 21u * 5u);
  for (int l = 0; l < 5; ++l) CHECK(a.at_step(0)[l] == 1.0);

  // Step shocks are addressable without replaying the path.
  const double dt = config.dt();
  const double sigma = config.market.sigma();
  double log_growth = 0.0;
  for (int step = 0; step < 20; ++step) {
    log_growth += -0.5 * sigma * sigma * dt +
                  sigma * std::sqrt(dt) * project_shock(config.seed, 17, step, 3);
  }
  CHECK(a.at_step(20)[3] == doctest::Approx(std::exp(log_growth)).epsilon(1e-13));
}

TEST_CASE("vanishing volatility gives deterministic growth") {
  SimConfig config{MarketParams::from_sigma(4, 1e-15, 2.0, 0.03),
                   {BankStrategy(0.5, 2), BankStrategy(0.5, 2)}};
  config.initial_price = 3.0;
  config.steps_per_horizon = 50;
  const auto paths = simulate_prices(config, 0);
  for (int l = 0; l < 4; ++l) {
    CHECK(paths.at_step(50)[l] == doctest::Approx(3.0 * std::exp(0.03 * 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("terminal price mean matches the GBM moment") {
  SimConfig config{MarketParams::from_sigma(1, 0.4, 1.5, 0.08),
                   {BankStrategy(0.5, 1), BankStrategy(0.5, 1)}};
  config.overlap = FixedOverlap{1};
  config.steps_per_horizon = 1;
  const int paths = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int p = 0; p < paths; ++p) {
    const double ratio = simulate_prices(config, p).at_step(1)[0];
    sum += ratio;
    sum_sq += ratio * ratio;
  }
  const double mean = sum / paths;
  const double se = std::sqrt((sum_sq / paths - mean * mean) / paths);
  CHECK(std::abs(mean - std::exp(0.08 * 1.5)) <= 3.0 * se);
}

TEST_CASE("portfolio rebalancing is self-financing and equal-weight") {
  std::vector<double> prices{1.0, 1.0, 1.0, 1.0, 1.0};
  PortfolioState book({0, 2, 4}, prices, 6.0);
  CHECK(book.value(prices) == doctest::Approx(6.0).epsilon(1e-15));
  const Philox4x32 rng(5);
  for (std::uint32_t step = 0; step < 500; ++step) {
    const auto [a, b] = normal_pair(rng({step, 0, 0, 0}));
    const auto [c, d] = normal_pair(rng({step, 1, 0, 0}));
    prices = {prices[0] * std::exp(0.2 * a), prices[1] * std::exp(0.2 * b),
              prices[2] * std::exp(0.2 * c), prices[3] * std::exp(0.2 * d),
              prices[4] * std::exp(0.1 * (a - c))};
    const double before = book.value(prices);
    const double marked = book.rebalance(prices);
    const double after = book.value(prices);
    REQUIRE(std::abs(marked - before) <= 1e-12 * before);
    REQUIRE(std::abs(after - before) <= 1e-12 * before);
    const auto units = book.units();
    const auto slots = book.slots();
    for (std::size_t k = 0; k < units.size(); ++k) {
      REQUIRE(std::abs(units[k] * prices[slots[k]] - after / 3.0) <= 1e-12 * after);
    }
  }
  CHECK_THROWS_AS(PortfolioState({}, prices, 1.0), DomainError);
}

TEST_CASE("single-project bank tracks its project") {
  auto config = homogeneous(0.25, 1, 3, 0, 1.6, 1);
  for (std::int64_t path : {0, 1, 99}) {
    const auto trajectories = simulate_prices(config, path);
    const std::vector<int> held{2};
    const double terminal = simulate_bank(trajectories, held, 1.0);
    const double project = trajectories.at_step(config.steps_per_horizon)[2];
    CHECK(terminal == doctest::Approx(project).epsilon(1e-12));
  }
  const auto trajectories = simulate_prices(config, 0);
  CHECK_THROWS_AS(simulate_bank(trajectories, std::vector<int>{}, 1.0), DomainError);
  CHECK_THROWS_AS(simulate_bank(trajectories, std::vector<int>{3}, 1.0), DomainError);
}

TEST_CASE("simulate_bank agrees with the estimator's terminal values") {
  auto config = homogeneous(0.25, 3, 7, 1, 2.0, 5);
  config.keep_terminal_values = true;
  config.steps_per_horizon = 40;
  const auto result = estimate_default_probs(config);
  for (std::int64_t p = 0; p < 5; ++p) {
    const auto trajectories = simulate_prices(config, p);
    const auto held = holdings_for_path(config, p);
    for (int b = 0; b < 2; ++b) {
      CHECK(simulate_bank(trajectories, held[b], 1.0) ==
            doctest::Approx(result.terminal_values[p][b]).epsilon(1e-13));
    }
  }
}

TEST_CASE("per-step log-return volatility scales as 1/sqrt(n)") {
  for (int n : {1, 4, 16}) {
    auto config = homogeneous(0.25, n, n, n, 1.6, 400);
    const auto result = estimate_default_probs(config);
    const double expected = config.market.sigma() * config.market.sigma() * config.dt() / n;
    CAPTURE(n);
    CHECK(std::abs(result.log_return_variance[0] / expected - 1.0) <= 0.05);
    CHECK(result.log_return_variance[0] == result.log_return_variance[1]);
  }
}

TEST_CASE("fixed overlap holdings") {
  const auto config = homogeneous(0.25, 4, 8, 2, 1.6, 1);
  const auto held = holdings_for_path(config, 0);
  CHECK(held[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(held[1] == std::vector<int>{2, 3, 4, 5});
}

TEST_CASE("random selection holdings") {
  auto config = homogeneous(0.25, 5, 12, 0, 1.6, 1);
  config.overlap = RandomSelection{};
  double overlap_sum = 0.0;
  const int paths = 4000;
  for (int p = 0; p < paths; ++p) {
    const auto held = holdings_for_path(config, p);
    for (const auto& h : held) {
      REQUIRE(h.size() == 5);
      REQUIRE(std::set<int>(h.begin(), h.end()).size() == 5);
      REQUIRE(std::is_sorted(h.begin(), h.end()));
      REQUIRE(h.front() >= 0);
      REQUIRE(h.back() < 12);
    }
    std::vector<int> common;
    std::set_intersection(held[0].begin(), held[0].end(), held[1].begin(),
                          held[1].end(), std::back_inserter(common));
    overlap_sum += static_cast<double>(common.size());
  }
  CHECK(holdings_for_path(config, 3) == holdings_for_path(config, 3));
  // Hypergeometric mean n^2 / N, variance about 1.05 here.
  CHECK(std::abs(overlap_sum / paths - 25.0 / 12.0) < 4.0 * std::sqrt(1.1 / paths));
}

TEST_CASE("default frequencies match the analytic marginal") {
  const auto config = homogeneous(0.25, 4, 8, 2, 1.6, 20000);
  const auto result = estimate_default_probs(config);
  const double analytic = individual_pd(config.strategies[0], config.market);
  for (int b = 0; b < 2; ++b) {
    CHECK(std::abs(result.pd_hat[b] - analytic) <= 3.0 * result.pd_standard_error[b]);
    CHECK(result.pd_standard_error[b] ==
          doctest::Approx(std::sqrt(result.pd_hat[b] * (1 - result.pd_hat[b]) / 20000)));
  }
  CHECK(std::abs(result.realized_correlation - 0.5) <= 0.02);
  CHECK(result.target_correlation == 0.5);
  CHECK(result.paths_used == 20000);
  CHECK(result.seed_used == 2024);
}

TEST_CASE("identical portfolios default together") {
  const auto config = homogeneous(0.5, 6, 6, 6, 5.1, 3000);
  const auto result = estimate_default_probs(config);
  CHECK(result.joint_pd_hat == result.pd_hat[0]);
  CHECK(result.joint_pd_hat == result.pd_hat[1]);
  CHECK(result.realized_correlation == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disjoint portfolios default independently") {
  const auto config = homogeneous(0.5, 3, 6, 0, 1.6, 20000);
  const auto result = estimate_default_probs(config);
  const double product = result.pd_hat[0] * result.pd_hat[1];
  CHECK(std::abs(result.joint_pd_hat - product) <= 3.0 * result.joint_standard_error);
  CHECK(std::abs(result.realized_correlation) <= 0.02);
}

TEST_CASE("default event uses a closed inequality") {
  auto config = homogeneous(0.5, 2, 4, 1, 1.6, 2000);
  config.keep_terminal_values = true;
  const auto result = estimate_default_probs(config);
  REQUIRE(result.terminal_values.size() == 2000);
  int count = 0;
  for (const auto& t : result.terminal_values) count += t[0] <= 0.5;
  CHECK(result.pd_hat[0] == static_cast<double>(count) / 2000);
}

TEST_CASE("results are reproducible and thread-count independent") {
  auto config = homogeneous(0.25, 4, 16, 1, 5.1, 3000, 77);
  config.keep_terminal_values = true;
  config.threads = 1;
  const auto serial = estimate_default_probs(config);
  const auto again = estimate_default_probs(config);
  config.threads = 3;
  const auto threaded = estimate_default_probs(config);
  CHECK(same_result(serial, again));
  CHECK(same_result(serial, threaded));

  config.seed = 78;
  CHECK_FALSE(same_result(serial, estimate_default_probs(config)));
}

TEST_CASE("heterogeneous banks") {
  SimConfig config{MarketParams::from_chi(10, 1.6),
                   {BankStrategy(0.2, 2), BankStrategy(0.6, 8)}};
  config.overlap = FixedOverlap{2};
  config.paths = 5000;
  const auto result = estimate_default_probs(config);
  CHECK(result.target_correlation == doctest::Approx(2.0 / 4.0));
  for (int b = 0; b < 2; ++b) {
    const double analytic = individual_pd(config.strategies[b], config.market);
    CHECK(std::abs(result.pd_hat[b] - analytic) <= 3.5 * result.pd_standard_error[b]);
  }
}
