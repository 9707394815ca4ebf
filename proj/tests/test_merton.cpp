#include <doctest.h>

#include <cmath>

#include "support/brute_force.hpp"
#include "sysrisk/error.hpp"
#include "sysrisk/merton.hpp"

using namespace sysrisk;
using sysrisk::testing::SplitMix64;

TEST_CASE("market parameterizations agree on chi") {
  const auto by_sigma = MarketParams::from_sigma(10, 0.4, 2.0);
  CHECK(by_sigma.chi() == doctest::Approx(0.16));
  const auto by_chi = MarketParams::from_chi(10, 1.6);
  CHECK(by_chi.chi() == 1.6);
  CHECK(by_chi.horizon() == 1.0);
  CHECK(by_chi.sigma() == doctest::Approx(std::sqrt(3.2)).epsilon(1e-15));
  CHECK(by_chi.drift() == 0.0);
  CHECK(by_chi.with_drift(-0.05).drift() == -0.05);
  CHECK(by_chi.with_market_size(40).market_size() == 40);
  CHECK(by_chi.with_chi(8.9).chi() == 8.9);

  CHECK_THROWS_AS(MarketParams::from_chi(0, 1.0), DomainError);
  CHECK_THROWS_AS(MarketParams::from_chi(10, 0.0), DomainError);
  CHECK_THROWS_AS(MarketParams::from_sigma(10, -0.1, 1.0), DomainError);
  CHECK_THROWS_AS(MarketParams::from_sigma(10, 0.1, 0.0), DomainError);
}

TEST_CASE("strategy validation") {
  CHECK_THROWS_AS(BankStrategy(0.0, 1), DomainError);
  CHECK_THROWS_AS(BankStrategy(1.0, 1), DomainError);
  CHECK_THROWS_AS(BankStrategy(1.0 - 1e-13, 1), DomainError);
  CHECK_THROWS_AS(BankStrategy(5e-13, 1), DomainError);
  CHECK_THROWS_AS(BankStrategy(0.5, 0), DomainError);
  CHECK_NOTHROW(BankStrategy(0.999, 3));

  const auto market = MarketParams::from_chi(4, 1.0);
  CHECK_THROWS_AS(z_score(BankStrategy(0.5, 5), market), StrategyMismatchError);
  CHECK_THROWS_AS(individual_pd(BankStrategy(0.5, 5), market), StrategyMismatchError);
}

TEST_CASE("z-score examples") {
  // f -> 1 boundary: ln(1/f) vanishes, z = chi / sqrt(2 chi) = 1 for chi = 2.
  const auto chi2 = MarketParams::from_chi(1, 2.0);
  CHECK(z_score(BankStrategy(1.0 - 1e-11, 1), chi2) == doctest::Approx(1.0).epsilon(1e-9));

  const auto market = MarketParams::from_chi(10, 1.6);
  CHECK(z_score(BankStrategy(0.25, 5), market) ==
        doctest::Approx(-(std::log(4.0) - 0.32) / 0.8).epsilon(1e-14));
  CHECK(z_score(BankStrategy(0.25, 5), market) == doctest::Approx(-1.3329).epsilon(1e-4));

  // f = 0.5, mu = 0: z < 0 whenever chi/n < ln 2.
  for (int n = 1; n <= 40; ++n) {
    const auto m = MarketParams::from_chi(40, 0.69 * n * 0.999);
    if (m.chi() / n < std::log(2.0)) CHECK(z_score(BankStrategy(0.5, n), m) < 0.0);
  }
}

TEST_CASE("drift enters the z-score numerator") {
  const auto flat = MarketParams::from_sigma(10, 0.5, 2.0);
  const auto boom = flat.with_drift(0.1);
  const BankStrategy s(0.4, 3);
  const double chi_n = flat.chi() / 3.0;
  const double expected = -(std::log(1 / 0.4) + 0.1 * 2.0 - chi_n) / std::sqrt(2 * chi_n);
  CHECK(z_score(s, boom) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(individual_pd(s, boom) < individual_pd(s, flat));
}

TEST_CASE("individual default probability") {
  const auto market = MarketParams::from_chi(10, 1.6);
  const double pd = individual_pd(BankStrategy(0.25, 5), market);
  CHECK(pd == doctest::Approx(0.0913).epsilon(1e-3));
  CHECK(pd == doctest::Approx(testing::normal_cdf(-(std::log(4.0) - 0.32) / 0.8)).epsilon(1e-14));

  SplitMix64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const double chi = rng.uniform(0.01, 9.0);
    const int n = rng.integer(1, 40);
    const auto m = MarketParams::from_chi(40, chi, rng.uniform(-0.1, 0.1));
    double f1 = rng.uniform(0.01, 0.99);
    double f2 = rng.uniform(0.01, 0.99);
    if (f1 == f2) continue;
    if (f1 > f2) std::swap(f1, f2);
    const double lo = individual_pd(BankStrategy(f1, n), m);
    const double hi = individual_pd(BankStrategy(f2, n), m);
    // Strict unless both probabilities underflow to the same double.
    CHECK((hi > lo || (lo < 1e-300 && hi < 1e-300)));
  }
}

TEST_CASE("more diversification lowers default probability in the solvent regime") {
  SplitMix64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto m = MarketParams::from_chi(40, rng.uniform(0.01, 9.0));
    const BankStrategy lo(rng.uniform(0.05, 0.95), rng.integer(1, 39));
    const BankStrategy hi(lo.leverage(), rng.integer(lo.diversification() + 1, 40));
    if (z_score(lo, m) >= 0.0 || z_score(hi, m) >= 0.0) continue;
    ++checked;
    const double a = individual_pd(lo, m);
    const double b = individual_pd(hi, m);
    CHECK((b < a || a < 1e-300));
  }
  CHECK(checked > 100);
}

TEST_CASE("vanishing market risk drives default probability to zero") {
  const auto m = MarketParams::from_chi(10, 1e-6);
  for (double f : {0.1, 0.5, 0.9}) {
    for (int n : {1, 5, 10}) CHECK(individual_pd(BankStrategy(f, n), m) < 1e-10);
  }
}

TEST_CASE("asset correlation from overlap") {
  CHECK(asset_correlation(10, MarketParams::from_chi(10, 1.0)).value() == 1.0);
  CHECK(asset_correlation(5, MarketParams::from_chi(10, 1.0)).value() == 0.5);
  CHECK(asset_correlation(1, MarketParams::from_chi(40, 1.0)).value() == 0.025);
  CHECK_THROWS_AS(asset_correlation(0, MarketParams::from_chi(10, 1.0)), DomainError);
  CHECK_THROWS_AS(asset_correlation(11, MarketParams::from_chi(10, 1.0)), DomainError);
  for (int market_size : {1, 7, 10, 40, 97}) {
    const auto m = MarketParams::from_chi(market_size, 1.0);
    for (int n = 1; n <= market_size; ++n) {
      CHECK(asset_correlation(n, m).value() * market_size == doctest::Approx(n).epsilon(1e-15));
    }
  }
}

TEST_CASE("balance sheet identity") {
  auto sheet = BalanceSheet::from_leverage(2.0, 0.25);
  CHECK(sheet.debt() == 0.5);
  CHECK(sheet.leverage() == 0.25);
  CHECK(sheet.assets() - sheet.debt() - sheet.equity() == 0.0);
  SplitMix64 rng(9);
  for (int i = 0; i < 200; ++i) {
    sheet.mark_assets(rng.uniform(0.0, 5.0));
    CHECK(sheet.assets() - sheet.debt() - sheet.equity() == 0.0);
    CHECK(sheet.leverage() == 0.25);
    CHECK(sheet.in_default() == (sheet.assets() <= 0.5));
  }
  sheet.mark_assets(0.5);
  CHECK(sheet.in_default());
  CHECK_THROWS_AS(BalanceSheet(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(BalanceSheet::from_leverage(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(sheet.mark_assets(-1.0), DomainError);
}
