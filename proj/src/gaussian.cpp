#include "sysrisk/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "sysrisk/error.hpp"

namespace sysrisk {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(what) + " must be finite");
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(begin, end) over [0, count) split into contiguous chunks.
template <typename Body>
void parallel_rows(std::size_t count, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(
      std::min<std::size_t>(resolve_threads(threads), count));
  if (threads <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

// Adaptive Gauss-Kronrod (7/15) with a mixed absolute/relative stopping rule,
// so integrals that underflow toward zero terminate quickly.
template <typename F>
double integrate_gk15(const F& f, double lo, double hi, double abs_tol,
                      double rel_tol) {
  static constexpr double kNodes[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double kKronrod[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double kGauss[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  struct Piece {
    double lo, hi, value, error;
  };
  auto rule = [&](double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kKronrod[7] * fc;
    double gauss = kGauss[3] * fc;
    for (int k = 0; k < 7; ++k) {
      const double dx = half * kNodes[k];
      const double pair = f(center - dx) + f(center + dx);
      kronrod += kKronrod[k] * pair;
      if (k % 2 == 1) gauss += kGauss[k / 2] * pair;
    }
    return Piece{a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
  };

  std::vector<Piece> pieces{rule(lo, hi)};
  double total = pieces.front().value;
  double error = pieces.front().error;
  for (int iteration = 0; iteration < 2000; ++iteration) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(total))) break;
    auto worst = std::max_element(
        pieces.begin(), pieces.end(),
        [](const Piece& x, const Piece& y) { return x.error < y.error; });
    const Piece split = *worst;
    const double mid = 0.5 * (split.lo + split.hi);
    *worst = rule(split.lo, mid);
    pieces.push_back(rule(mid, split.hi));
    total = 0.0;
    error = 0.0;
    for (const auto& p : pieces) {
      total += p.value;
      error += p.error;
    }
  }
  return total;
}

}  // namespace

Correlation::Correlation(double rho) : rho_(rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw DomainError("correlation must lie in [-1, 1], got " +
                      std::to_string(rho));
  }
}

Correlation Correlation::from_overlap(int held, int market_size) {
  if (market_size < 1) throw DomainError("market size must be >= 1");
  if (held < 1 || held > market_size) {
    throw DomainError("diversification n=" + std::to_string(held) +
                      " outside [1, " + std::to_string(market_size) + "]");
  }
  return Correlation(static_cast<double>(held) /
                     static_cast<double>(market_size));
}

void GridSpec::validate() const {
  if (!std::isfinite(z_min) || !std::isfinite(z_max) || !(z_min < z_max)) {
    throw ConfigError("grid range requires finite z_min < z_max");
  }
  if (cells_per_axis < 2) {
    throw ConfigError("grid needs at least 2 cells per axis");
  }
}

double phi1(double z) {
  require_finite(z, "phi1 argument");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double binorm_pdf(double z1, double z2, Correlation rho) {
  const double r = rho.value();
  if (std::abs(r) >= 1.0) {
    throw DegenerateCorrelationError("bivariate density undefined for |rho| = 1");
  }
  const double one_minus_r2 = 1.0 - r * r;
  const double quad = z1 * z1 - 2.0 * r * z1 * z2 + z2 * z2;
  return std::exp(-quad / (2.0 * one_minus_r2)) /
         (2.0 * std::numbers::pi * std::sqrt(one_minus_r2));
}

double binorm_cdf_degenerate(double z1, double z2, double rho) {
  if (rho > 0.0) return phi1(std::min(z1, z2));
  return std::max(0.0, phi1(z1) + phi1(z2) - 1.0);
}

double binorm_cdf_oracle(double z1, double z2, Correlation rho) {
  require_finite(z1, "z1");
  require_finite(z2, "z2");
  const double r = rho.value();
  if (r == 1.0 || r == -1.0) return binorm_cdf_degenerate(z1, z2, r);

  const double independent = phi1(z1) * phi1(z2);
  if (r == 0.0) return independent;

  const double sum_sq = z1 * z1 + z2 * z2;
  const double cross = 2.0 * z1 * z2;
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    const double c2 = c * c;
    if (c2 <= 0.0) return 0.0;
    return std::exp(-(sum_sq - cross * std::sin(theta)) / (2.0 * c2));
  };
  const double upper = std::asin(r);
  const double integral = integrate_gk15(integrand, 0.0, upper, 1e-15, 1e-13);
  const double value = independent + integral / (2.0 * std::numbers::pi);
  return std::clamp(value, 0.0, 1.0);
}

CdfGrid CdfGrid::build(Correlation rho, const GridSpec& spec, unsigned threads) {
  spec.validate();
  if (std::abs(rho.value()) > kDegenerateRhoBound) {
    throw DegenerateCorrelationError(
        "grid tabulation needs |rho| <= 1 - 1e-9; use the degenerate limits");
  }

  CdfGrid grid(rho, spec);
  const auto cells = static_cast<std::size_t>(spec.cells_per_axis);
  const std::size_t nodes = cells + 1;
  const double h = spec.cell_width();
  const double area = h * h;

  grid.axis_.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    grid.axis_[i] = spec.z_min + h * static_cast<double>(i);
  }
  grid.axis_.back() = spec.z_max;

  // Row i of `volume` holds the cumulative (along j) volume of cells in
  // strip i, i.e. between axis_[i-1] and axis_[i]. Row 0 stays zero.
  std::vector<double>& values = grid.values_;
  values.assign(nodes * nodes, 0.0);
  const auto& axis = grid.axis_;

  parallel_rows(cells, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> lower(nodes);
    std::vector<double> upper(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      lower[j] = binorm_pdf(axis[begin], axis[j], rho);
    }
    for (std::size_t strip = begin; strip < end; ++strip) {
      for (std::size_t j = 0; j < nodes; ++j) {
        upper[j] = binorm_pdf(axis[strip + 1], axis[j], rho);
      }
      double* row = values.data() + (strip + 1) * nodes;
      double running = 0.0;
      for (std::size_t j = 1; j < nodes; ++j) {
        const double mean =
            0.25 * (lower[j - 1] + lower[j] + upper[j - 1] + upper[j]);
        running += mean * area;
        row[j] = running;
      }
      std::swap(lower, upper);
    }
  });

  // Accumulate strips in fixed order so the table is independent of threads.
  for (std::size_t i = 2; i < nodes; ++i) {
    const double* prev = values.data() + (i - 1) * nodes;
    double* row = values.data() + i * nodes;
    for (std::size_t j = 0; j < nodes; ++j) row[j] += prev[j];
  }
  return grid;
}

double CdfGrid::operator()(double z1, double z2) const {
  require_finite(z1, "z1");
  require_finite(z2, "z2");
  const std::size_t nodes = axis_.size();
  const double h = spec_.cell_width();

  auto locate = [&](double z, std::size_t& index, double& weight) {
    z = std::clamp(z, spec_.z_min, spec_.z_max);
    double pos = (z - spec_.z_min) / h;
    auto i = static_cast<std::size_t>(pos);
    if (i >= nodes - 1) {
      i = nodes - 2;
      pos = static_cast<double>(nodes - 1);
    }
    index = i;
    weight = pos - static_cast<double>(i);
  };

  std::size_t i = 0;
  std::size_t j = 0;
  double wi = 0.0;
  double wj = 0.0;
  locate(z1, i, wi);
  locate(z2, j, wj);
  const double v00 = node(i, j);
  const double v01 = node(i, j + 1);
  const double v10 = node(i + 1, j);
  const double v11 = node(i + 1, j + 1);
  const double value = (1.0 - wi) * ((1.0 - wj) * v00 + wj * v01) +
                       wi * ((1.0 - wj) * v10 + wj * v11);
  return std::clamp(value, 0.0, 1.0);
}

double binorm_cdf_grid(double z1, double z2, Correlation rho,
                       const GridSpec& spec, unsigned threads) {
  spec.validate();
  require_finite(z1, "z1");
  require_finite(z2, "z2");
  if (std::abs(rho.value()) > kDegenerateRhoBound) {
    return binorm_cdf_degenerate(z1, z2, rho.value());
  }
  return CdfGrid::build(rho, spec, threads)(z1, z2);
}

}  // namespace sysrisk
