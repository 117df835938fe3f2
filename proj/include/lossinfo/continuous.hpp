// SPDX-License-Identifier: Apache-2.0

#pragma once

// Grid realizations of the continuous log loss and the Hyvarinen loss.
//
// Continuous entropies are infinite: the full-knowledge infimum of either loss
// is -inf. This module does not try to compute that infimum. It evaluates
// explicit witness sequences whose risk decreases without bound, and computes
// the finite information quantities by trapezoid quadrature on uniform grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lossinfo/errors.hpp"
#include "lossinfo/extended_real.hpp"

namespace lossinfo {

inline constexpr double kDensityNormalizationTolerance = 1e-6;

struct UniformGrid {
  double lower;
  double step;
  std::size_t size;

  double node(std::size_t i) const { return lower + static_cast<double>(i) * step; }
  double upper() const { return node(size - 1); }

  /// `size` nodes spanning [lower, upper] inclusive.
  static UniformGrid spanning(double lower, double upper, std::size_t size) {
    if (size < 2 || !(upper > lower)) throw InvalidArgument("UniformGrid: need size >= 2 and upper > lower");
    return {lower, (upper - lower) / static_cast<double>(size - 1), size};
  }
};

/// Composite trapezoid rule over equally spaced samples.
inline double trapezoid(std::span<const double> values, double step) {
  if (values.size() < 2) return 0.0;
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * step;
}

namespace detail {

inline void check_density_values(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw InvalidArgument("GridDensity: values must be finite and non-negative");
  }
}

inline void check_normalized(double integral) {
  if (std::abs(integral - 1.0) > kDensityNormalizationTolerance) {
    throw InvalidArgument("GridDensity: trapezoid integral is " + std::to_string(integral) + ", expected 1");
  }
}

}  // namespace detail

/// A 1-D density sampled on a uniform grid.
class GridDensity {
 public:
  GridDensity(UniformGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size) throw InvalidArgument("GridDensity: value count does not match grid");
    detail::check_density_values(values_);
    detail::check_normalized(integral());
  }

  /// Samples `f` on the grid, rescaling by the trapezoid integral when
  /// `normalize` is set.
  static GridDensity sample(UniformGrid grid, const std::function<double(double)>& f, bool normalize = true) {
    std::vector<double> v(grid.size);
    for (std::size_t i = 0; i < grid.size; ++i) v[i] = f(grid.node(i));
    if (normalize) {
      const double z = trapezoid(v, grid.step);
      if (!(z > 0.0) || !std::isfinite(z)) throw InvalidArgument("GridDensity: density is not normalizable");
      for (auto& x : v) x /= z;
    }
    return GridDensity(grid, std::move(v));
  }

  const UniformGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double integral() const { return trapezoid(values_, grid_.step); }

 private:
  UniformGrid grid_;
  std::vector<double> values_;
};

/// A joint density f(x, y) on a tensor grid, stored x-major: value(i, j) is
/// at index i * y.size + j.
class GridDensity2D {
 public:
  GridDensity2D(UniformGrid x, UniformGrid y, std::vector<double> values)
      : x_(x), y_(y), values_(std::move(values)) {
    if (values_.size() != x_.size * y_.size) throw InvalidArgument("GridDensity2D: value count does not match grid");
    detail::check_density_values(values_);
    detail::check_normalized(integral());
  }

  static GridDensity2D sample(UniformGrid x, UniformGrid y, const std::function<double(double, double)>& f,
                              bool normalize = true) {
    std::vector<double> v(x.size * y.size);
    for (std::size_t i = 0; i < x.size; ++i) {
      for (std::size_t j = 0; j < y.size; ++j) v[i * y.size + j] = f(x.node(i), y.node(j));
    }
    if (normalize) {
      const double z = integrate(x, y, v);
      if (!(z > 0.0) || !std::isfinite(z)) throw InvalidArgument("GridDensity2D: density is not normalizable");
      for (auto& t : v) t /= z;
    }
    return GridDensity2D(x, y, std::move(v));
  }

  const UniformGrid& x_grid() const { return x_; }
  const UniformGrid& y_grid() const { return y_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * y_.size + j]; }
  std::span<const double> values() const { return values_; }
  double integral() const { return integrate(x_, y_, values_); }

  /// Tensor trapezoid rule for any field on this grid.
  static double integrate(const UniformGrid& x, const UniformGrid& y, std::span<const double> field) {
    std::vector<double> inner(x.size);
    for (std::size_t i = 0; i < x.size; ++i) inner[i] = trapezoid(field.subspan(i * y.size, y.size), y.step);
    return trapezoid(inner, x.step);
  }

  /// f_X(x_i) = integral over y of f(x_i, y).
  std::vector<double> x_marginal() const {
    std::vector<double> m(x_.size);
    for (std::size_t i = 0; i < x_.size; ++i) m[i] = trapezoid(values().subspan(i * y_.size, y_.size), y_.step);
    return m;
  }

  /// f_Y(y_j) = integral over x of f(x, y_j).
  std::vector<double> y_marginal() const {
    std::vector<double> m(y_.size);
    std::vector<double> column(x_.size);
    for (std::size_t j = 0; j < y_.size; ++j) {
      for (std::size_t i = 0; i < x_.size; ++i) column[i] = (*this)(i, j);
      m[j] = trapezoid(column, x_.step);
    }
    return m;
  }

  /// The slice x -> f(x, y_j).
  std::vector<double> x_slice(std::size_t j) const {
    std::vector<double> s(x_.size);
    for (std::size_t i = 0; i < x_.size; ++i) s[i] = (*this)(i, j);
    return s;
  }

 private:
  UniformGrid x_;
  UniformGrid y_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Witness sequences

enum class WitnessFamily { GaussianLogLoss, ShiftedGaussianHyvarinen };

inline std::string_view family_name(WitnessFamily f) {
  return f == WitnessFamily::GaussianLogLoss ? "gaussian_logloss" : "shifted_gaussian_hyvarinen";
}

inline WitnessFamily parse_family(std::string_view name) {
  if (name == "gaussian_logloss") return WitnessFamily::GaussianLogLoss;
  if (name == "shifted_gaussian_hyvarinen") return WitnessFamily::ShiftedGaussianHyvarinen;
  throw InvalidArgument("unknown witness family '" + std::string(name) + "'");
}

namespace detail {

inline void require_positive_index(double n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("witness index n must be positive and finite");
}

}  // namespace detail

/// G_n^x(xi) = (n / sqrt(pi)) exp(-n^2 (xi - x)^2), a Gaussian of variance
/// 1 / (2 n^2) centred at x.
inline double gaussian_witness(double n, double center, double xi) {
  const double u = xi - center;
  return n * std::numbers::inv_sqrtpi * std::exp(-n * n * u * u);
}

/// Shift applied to the Hyvarinen witness: G~_n^x(xi) = G_n^x(xi + shift(n)).
/// With this shift the score of G~ at xi = x is exactly -1/2 for every n.
inline double hyvarinen_witness_shift(double n) { return 1.0 / (4.0 * n * n); }

inline double shifted_gaussian_witness(double n, double center, double xi) {
  return gaussian_witness(n, center, xi + hyvarinen_witness_shift(n));
}

/// d/dxi log G~_n^x(xi) = -2 n^2 (xi - x + shift).
inline double hyvarinen_witness_score(double n, double center, double xi) {
  detail::require_positive_index(n);
  return -2.0 * n * n * (xi - center + hyvarinen_witness_shift(n));
}

/// d^2/dxi^2 G~_n^x(xi), evaluated from the closed form of the Gaussian.
inline double hyvarinen_witness_laplacian(double n, double center, double xi) {
  detail::require_positive_index(n);
  const double u = xi - center + hyvarinen_witness_shift(n);
  const double n2 = n * n;
  return shifted_gaussian_witness(n, center, xi) * (4.0 * n2 * n2 * u * u - 2.0 * n2);
}

/// l(x, G~_n^x) = 1/2 (score)^2 + Laplacian at xi = x. Independent of x.
inline double hyvarinen_witness_loss(double n) {
  const double s = hyvarinen_witness_score(n, 0.0, 0.0);
  return 0.5 * s * s + hyvarinen_witness_laplacian(n, 0.0, 0.0);
}

/// The witness density for index n as a grid density covering +-8/n around
/// its mode. Used to check that every witness is a proper density.
inline GridDensity witness_density(WitnessFamily family, double n, double center, std::size_t nodes = 4001) {
  detail::require_positive_index(n);
  const double mode = family == WitnessFamily::GaussianLogLoss ? center : center - hyvarinen_witness_shift(n);
  const auto grid = UniformGrid::spanning(mode - 8.0 / n, mode + 8.0 / n, nodes);
  return GridDensity::sample(
      grid,
      [&](double xi) {
        return family == WitnessFamily::GaussianLogLoss ? gaussian_witness(n, center, xi)
                                                        : shifted_gaussian_witness(n, center, xi);
      },
      false);
}

/// E_f[l(X, G_n^X)] = -log(n / sqrt(pi)) for the log loss, whatever f is.
inline double logloss_witness_value(double n) {
  detail::require_positive_index(n);
  return -std::log(n / std::sqrt(std::numbers::pi));
}

/// The same expectation by quadrature over f: each node x contributes
/// f(x) * (-log G_n^x(x)).
inline double logloss_witness_quadrature(const GridDensity& f, double n) {
  detail::require_positive_index(n);
  std::vector<double> integrand(f.grid().size);
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    const double x = f.grid().node(i);
    integrand[i] = f.values()[i] * -std::log(gaussian_witness(n, x, x));
  }
  return trapezoid(integrand, f.grid().step);
}

struct WitnessBound {
  double n;
  double risk_upper_bound;
};

/// Risk of the witness action for each n: an upper bound on the
/// full-knowledge optimal risk. Log-loss bounds are analytic; Hyvarinen bounds
/// are trapezoid expectations over f of the pointwise witness loss.
inline std::vector<WitnessBound> demonstrate_entropy_divergence(WitnessFamily family,
                                                               std::span<const double> n_values,
                                                               const GridDensity& f) {
  std::vector<WitnessBound> out;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const double n = n_values[k];
    detail::require_positive_index(n);
    if (k > 0 && !(n > n_values[k - 1])) throw InvalidArgument("witness n values must be strictly ascending");
    if (f.grid().step > 1.0 / (4.0 * n)) {
      throw InvalidArgument("witness grid too coarse: step " + std::to_string(f.grid().step) + " > 1/(4n) for n = " +
                            std::to_string(n));
    }
    if (family == WitnessFamily::GaussianLogLoss) {
      out.push_back({n, logloss_witness_value(n)});
    } else {
      const double loss = hyvarinen_witness_loss(n);
      std::vector<double> integrand(f.values().begin(), f.values().end());
      for (auto& v : integrand) v *= loss;
      out.push_back({n, trapezoid(integrand, f.grid().step)});
    }
  }
  return out;
}

/// Standard normal test density on [-8, 8], fine enough for every n given.
inline GridDensity default_test_density(std::span<const double> n_values) {
  double step = 0.01;
  for (double n : n_values) {
    detail::require_positive_index(n);
    step = std::min(step, 1.0 / (4.0 * n));
  }
  const auto nodes = static_cast<std::size_t>(std::ceil(16.0 / step)) + 1;
  return GridDensity::sample(UniformGrid::spanning(-8.0, 8.0, nodes),
                             [](double x) { return std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; });
}

inline std::vector<WitnessBound> demonstrate_entropy_divergence(WitnessFamily family,
                                                               std::span<const double> n_values) {
  return demonstrate_entropy_divergence(family, n_values, default_test_density(n_values));
}

/// A continuous entropy: +inf, with the witness ladder as evidence.
struct ContinuousEntropy {
  ExtendedReal value = ExtendedReal::pos_inf();
  std::vector<WitnessBound> evidence;
};

/// H(X) (and likewise H(X|Y)) for a continuous X under the family's loss.
inline ContinuousEntropy continuous_entropy(WitnessFamily family, std::span<const double> n_values) {
  return {ExtendedReal::pos_inf(), demonstrate_entropy_divergence(family, n_values)};
}

// ---------------------------------------------------------------------------
// Information by quadrature

/// I(X; Y) = E[D_KL(f_{X|Y} || f_X)] for a gridded joint density.
inline double continuous_information(const GridDensity2D& joint) {
  const auto fx = joint.x_marginal();
  const auto fy = joint.y_marginal();
  const auto& xg = joint.x_grid();
  const auto& yg = joint.y_grid();
  std::vector<double> integrand(xg.size * yg.size, 0.0);
  for (std::size_t i = 0; i < xg.size; ++i) {
    for (std::size_t j = 0; j < yg.size; ++j) {
      const double f = joint(i, j);
      if (!(f > 0.0) || !(fy[j] > 1e-12)) continue;  // 0 log 0 = 0
      const double conditional = f / fy[j];
      integrand[i * yg.size + j] = f * std::log(conditional / fx[i]);
    }
  }
  return GridDensity2D::integrate(xg, yg, integrand);
}

/// Finite-difference derivative of log f along a 1-D slice: central where
/// both neighbours are positive, one-sided otherwise. Nodes with f == 0 get 0.
/// Differences are logs of ratios, so scaling the slice by a power of two
/// leaves the result bit-identical and other constants move it by rounding.
inline std::vector<double> log_density_gradient(std::span<const double> slice, double step) {
  std::vector<double> g(slice.size(), 0.0);
  for (std::size_t i = 0; i < slice.size(); ++i) {
    if (!(slice[i] > 0.0)) continue;
    const bool left = i > 0 && slice[i - 1] > 0.0;
    const bool right = i + 1 < slice.size() && slice[i + 1] > 0.0;
    if (left && right) {
      g[i] = std::log(slice[i + 1] / slice[i - 1]) / (2.0 * step);
    } else if (right) {
      g[i] = std::log(slice[i + 1] / slice[i]) / step;
    } else if (left) {
      g[i] = std::log(slice[i] / slice[i - 1]) / step;
    }
  }
  return g;
}

/// I(X; Y) = E[(d/dx log f(x|y) - d/dx log f_X(x))^2] for a gridded joint.
/// The conditional score is taken from the unnormalized slice f(., y), since
/// normalizing constants drop out of the log-derivative.
inline double hyvarinen_information(const GridDensity2D& joint) {
  const auto& xg = joint.x_grid();
  const auto& yg = joint.y_grid();
  for (std::size_t i = 1; i + 1 < xg.size; ++i) {
    for (std::size_t j = 1; j + 1 < yg.size; ++j) {
      if (!(joint(i, j) > 0.0)) throw InvalidArgument("hyvarinen_information: zero density on an interior node");
    }
  }
  const auto marginal_score = log_density_gradient(joint.x_marginal(), xg.step);
  std::vector<double> integrand(xg.size * yg.size, 0.0);
  for (std::size_t j = 0; j < yg.size; ++j) {
    const auto conditional_score = log_density_gradient(joint.x_slice(j), xg.step);
    for (std::size_t i = 0; i < xg.size; ++i) {
      const double f = joint(i, j);
      if (!(f > 0.0)) continue;
      const double diff = conditional_score[i] - marginal_score[i];
      integrand[i * yg.size + j] = f * diff * diff;
    }
  }
  return GridDensity2D::integrate(xg, yg, integrand);
}

// ---------------------------------------------------------------------------
// Benchmark densities

/// Standard bivariate Gaussian with correlation rho on a nodes x nodes grid
/// over +-half_width in both coordinates, renormalized on the grid.
inline GridDensity2D bivariate_gaussian(double rho, std::size_t nodes = 201, double half_width = 5.0) {
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("bivariate_gaussian: |rho| must be < 1");
  const auto g = UniformGrid::spanning(-half_width, half_width, nodes);
  const double det = 1.0 - rho * rho;
  return GridDensity2D::sample(g, g, [&](double x, double y) {
    return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)) / (2.0 * std::numbers::pi * std::sqrt(det));
  });
}

}  // namespace lossinfo
