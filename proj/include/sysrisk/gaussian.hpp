#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sysrisk {

/// Correlation coefficient between two standard normal variates.
class Correlation {
 public:
  /// Throws DomainError unless -1 <= rho <= 1.
  explicit Correlation(double rho);

  /// Overlap-induced correlation of two equal-weight portfolios holding
  /// `held` out of `market_size` independent projects: rho = held / market_size.
  static Correlation from_overlap(int held, int market_size);

  double value() const noexcept { return rho_; }

 private:
  double rho_;
};

/// Uniform square grid used by the tabulated bivariate CDF.
struct GridSpec {
  double z_min = -8.0;
  double z_max = 8.0;
  int cells_per_axis = 2000;

  void validate() const;  // throws ConfigError
  double cell_width() const noexcept {
    return (z_max - z_min) / static_cast<double>(cells_per_axis);
  }
};

/// Correlations with |rho| above this bound use the degenerate closed forms.
inline constexpr double kDegenerateRhoBound = 1.0 - 1e-9;

/// Standard normal CDF. Throws DomainError for non-finite input.
double phi1(double z);

/// Standard bivariate normal density. Throws DegenerateCorrelationError when
/// |rho| >= 1.
double binorm_pdf(double z1, double z2, Correlation rho);

/// High-accuracy bivariate normal CDF (absolute error well below 1e-7).
///
/// Uses Sheppard's reduction
///   Phi2(a, b, rho) = Phi(a) Phi(b)
///                   + 1/(2 pi) * int_0^{asin rho} exp(-(a^2 + b^2 - 2ab sin t) / (2 cos^2 t)) dt
/// whose integrand stays bounded for every rho, evaluated by adaptive
/// Gauss-Kronrod quadrature with a mixed absolute/relative tolerance.
/// rho = 0 and |rho| = 1 are handled in closed form.
double binorm_cdf_oracle(double z1, double z2, Correlation rho);

/// Tabulated bivariate normal CDF for a fixed correlation.
///
/// The density is sampled at the (cells+1)^2 nodes of a uniform grid. Each
/// cell takes the mean of its four corner densities times the cell area, and
/// node (i, j) stores the running double sum of cell volumes up to it, i.e.
/// Phi2 at the node coordinates. Queries interpolate bilinearly between nodes
/// after clamping to the grid range.
class CdfGrid {
 public:
  /// Throws DegenerateCorrelationError when |rho| > kDegenerateRhoBound and
  /// ConfigError for an invalid spec. `threads == 0` uses the hardware
  /// concurrency; the table is bitwise identical for any thread count.
  static CdfGrid build(Correlation rho, const GridSpec& spec = {},
                       unsigned threads = 0);

  /// Phi2(z1, z2, rho), clamped to [0, 1].
  double operator()(double z1, double z2) const;

  const GridSpec& spec() const noexcept { return spec_; }
  Correlation rho() const noexcept { return rho_; }
  std::size_t nodes_per_axis() const noexcept { return axis_.size(); }
  std::span<const double> axis() const noexcept { return axis_; }
  double node(std::size_t i, std::size_t j) const noexcept {
    return values_[i * axis_.size() + j];
  }

 private:
  CdfGrid(Correlation rho, GridSpec spec) : rho_(rho), spec_(spec) {}

  Correlation rho_;
  GridSpec spec_;
  std::vector<double> axis_;
  std::vector<double> values_;  // row-major, nodes_per_axis^2
};

/// One-shot grid evaluation: builds a CdfGrid for `rho` and queries it.
/// Degenerate correlations (|rho| > kDegenerateRhoBound) use the exact
/// limits instead of a table.
double binorm_cdf_grid(double z1, double z2, Correlation rho,
                       const GridSpec& spec = {}, unsigned threads = 0);

/// Exact Phi2 for rho = +1 or rho = -1 (selected by sign of `rho`).
double binorm_cdf_degenerate(double z1, double z2, double rho);

}  // namespace sysrisk
