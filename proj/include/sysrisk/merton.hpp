#pragma once

#include "sysrisk/gaussian.hpp"

namespace sysrisk {

/// Market of N independent GBM projects with common drift and volatility.
///
/// chi = sigma^2 T / 2 is stored alongside (sigma, T) and always derived from
/// them. Markets specified by chi alone use T = 1, sigma = sqrt(2 chi).
class MarketParams {
 public:
  static MarketParams from_sigma(int market_size, double sigma, double horizon,
                                 double drift = 0.0);
  static MarketParams from_chi(int market_size, double chi, double drift = 0.0);

  int market_size() const noexcept { return market_size_; }
  double drift() const noexcept { return drift_; }
  double sigma() const noexcept { return sigma_; }
  double horizon() const noexcept { return horizon_; }
  double chi() const noexcept { return chi_; }

  MarketParams with_market_size(int market_size) const;
  MarketParams with_chi(double chi) const;
  MarketParams with_drift(double drift) const;

 private:
  MarketParams(int market_size, double sigma, double horizon, double drift);

  int market_size_;
  double drift_;
  double sigma_;
  double horizon_;
  double chi_;
};

/// Leverage f = h / a(0) in (0, 1) and number of held projects n >= 1.
class BankStrategy {
 public:
  /// Leverage within 1e-12 of 0 or 1 is rejected with DomainError.
  BankStrategy(double leverage, int diversification);

  double leverage() const noexcept { return leverage_; }
  int diversification() const noexcept { return diversification_; }

  /// Throws StrategyMismatchError when n > N.
  void check_against(const MarketParams& market) const;

 private:
  double leverage_;
  int diversification_;
};

/// Bank balance sheet a = h + e. Debt is fixed at its face value h(T);
/// equity absorbs every change in assets.
class BalanceSheet {
 public:
  BalanceSheet(double assets, double debt);
  static BalanceSheet from_leverage(double initial_assets, double leverage);

  double assets() const noexcept { return assets_; }
  double debt() const noexcept { return debt_; }
  double equity() const noexcept { return equity_; }
  double initial_assets() const noexcept { return initial_assets_; }
  /// h / a(0).
  double leverage() const noexcept { return debt_ / initial_assets_; }
  bool in_default() const noexcept { return assets_ <= debt_; }

  void mark_assets(double assets);

 private:
  double initial_assets_;
  double assets_;
  double debt_;
  double equity_;
};

/// z = -(ln(1/f) + mu T - chi/n) / sqrt(2 chi / n).
double z_score(const BankStrategy& strategy, const MarketParams& market);

/// Phi1(z_score): probability that a(T) <= h.
double individual_pd(const BankStrategy& strategy, const MarketParams& market);

/// rho = n / N for two banks each holding n of the N projects.
Correlation asset_correlation(int n, const MarketParams& market);

}  // namespace sysrisk
