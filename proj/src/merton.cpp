#include "sysrisk/merton.hpp"

#include <cmath>
#include <string>

#include "sysrisk/error.hpp"

namespace sysrisk {

namespace {

constexpr double kLeverageMargin = 1e-12;

}  // namespace

MarketParams::MarketParams(int market_size, double sigma, double horizon,
                           double drift)
    : market_size_(market_size),
      drift_(drift),
      sigma_(sigma),
      horizon_(horizon),
      chi_(sigma * sigma * horizon / 2.0) {
  if (market_size < 1) throw DomainError("market size N must be >= 1");
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw DomainError("sigma must be finite and > 0");
  }
  if (!std::isfinite(horizon) || horizon <= 0.0) {
    throw DomainError("horizon T must be finite and > 0");
  }
  if (!std::isfinite(drift)) throw DomainError("drift mu must be finite");
}

MarketParams MarketParams::from_sigma(int market_size, double sigma,
                                      double horizon, double drift) {
  return MarketParams(market_size, sigma, horizon, drift);
}

MarketParams MarketParams::from_chi(int market_size, double chi, double drift) {
  if (!std::isfinite(chi) || chi <= 0.0) {
    throw DomainError("chi must be finite and > 0");
  }
  MarketParams market(market_size, std::sqrt(2.0 * chi), 1.0, drift);
  market.chi_ = chi;  // exact, avoids the sqrt round trip
  return market;
}

MarketParams MarketParams::with_market_size(int market_size) const {
  MarketParams copy = *this;
  if (market_size < 1) throw DomainError("market size N must be >= 1");
  copy.market_size_ = market_size;
  return copy;
}

MarketParams MarketParams::with_chi(double chi) const {
  return from_chi(market_size_, chi, drift_);
}

MarketParams MarketParams::with_drift(double drift) const {
  if (!std::isfinite(drift)) throw DomainError("drift mu must be finite");
  MarketParams copy = *this;
  copy.drift_ = drift;
  return copy;
}

BankStrategy::BankStrategy(double leverage, int diversification)
    : leverage_(leverage), diversification_(diversification) {
  if (!std::isfinite(leverage) || leverage <= kLeverageMargin ||
      leverage >= 1.0 - kLeverageMargin) {
    throw DomainError("leverage f must lie in (0, 1), got " +
                      std::to_string(leverage));
  }
  if (diversification < 1) {
    throw DomainError("diversification n must be >= 1");
  }
}

void BankStrategy::check_against(const MarketParams& market) const {
  if (diversification_ > market.market_size()) {
    throw StrategyMismatchError(
        "diversification n=" + std::to_string(diversification_) +
        " exceeds market size N=" + std::to_string(market.market_size()));
  }
}

BalanceSheet::BalanceSheet(double assets, double debt)
    : initial_assets_(assets), assets_(assets), debt_(debt),
      equity_(assets - debt) {
  if (!std::isfinite(assets) || assets <= 0.0) {
    throw DomainError("assets must be finite and > 0");
  }
  if (!std::isfinite(debt) || debt <= 0.0) {
    throw DomainError("debt must be finite and > 0");
  }
}

BalanceSheet BalanceSheet::from_leverage(double initial_assets,
                                         double leverage) {
  BankStrategy(leverage, 1);  // validates f
  return BalanceSheet(initial_assets, leverage * initial_assets);
}

void BalanceSheet::mark_assets(double assets) {
  if (!std::isfinite(assets) || assets < 0.0) {
    throw DomainError("asset value must be finite and >= 0");
  }
  assets_ = assets;
  equity_ = assets_ - debt_;
}

double z_score(const BankStrategy& strategy, const MarketParams& market) {
  strategy.check_against(market);
  const double n = strategy.diversification();
  const double chi_per_project = market.chi() / n;
  const double numerator = std::log(1.0 / strategy.leverage()) +
                           market.drift() * market.horizon() - chi_per_project;
  const double z = -numerator / std::sqrt(2.0 * chi_per_project);
  if (!std::isfinite(z)) throw NumericalError("z-score is not finite");
  return z;
}

double individual_pd(const BankStrategy& strategy, const MarketParams& market) {
  return phi1(z_score(strategy, market));
}

Correlation asset_correlation(int n, const MarketParams& market) {
  return Correlation::from_overlap(n, market.market_size());
}

}  // namespace sysrisk
