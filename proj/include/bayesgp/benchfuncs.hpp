#pragma once

#include <bayesgp/errors.hpp>
#include <bayesgp/rng.hpp>
#include <bayesgp/types.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bayesgp {

enum class TestFunctionKind { Higdon, Hartmann3, Colville, Borehole };

inline constexpr std::array<TestFunctionKind, 4> kAllTestFunctions = {
    TestFunctionKind::Higdon, TestFunctionKind::Hartmann3, TestFunctionKind::Colville,
    TestFunctionKind::Borehole};

inline std::string_view to_string(TestFunctionKind kind) {
  switch (kind) {
    case TestFunctionKind::Higdon: return "higdon";
    case TestFunctionKind::Hartmann3: return "hartmann3";
    case TestFunctionKind::Colville: return "colville";
    case TestFunctionKind::Borehole: return "borehole";
  }
  return "unknown";
}

inline std::optional<TestFunctionKind> parse_test_function(std::string_view name) {
  for (auto k : kAllTestFunctions) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

namespace detail {

inline double higdon(std::span<const double> x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::sin(two_pi * x[0] / 10.0) + 0.2 * std::sin(two_pi * x[0] / 2.5);
}

inline double hartmann3(std::span<const double> x) {
  static constexpr double alpha[4] = {1.0, 1.2, 3.0, 3.2};
  static constexpr double A[4][3] = {
      {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
  static constexpr double P[4][3] = {{3689e-4, 1170e-4, 2673e-4},
                                     {4699e-4, 4387e-4, 7470e-4},
                                     {1091e-4, 8732e-4, 5547e-4},
                                     {381e-4, 5743e-4, 8828e-4}};
  double f = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double diff = x[j] - P[i][j];
      inner += A[i][j] * diff * diff;
    }
    f -= alpha[i] * std::exp(-inner);
  }
  return f;
}

inline double colville(std::span<const double> x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  const double a = x1 * x1 - x2;
  const double b = x3 * x3 - x4;
  return 100.0 * a * a + (x1 - 1.0) * (x1 - 1.0) + (x3 - 1.0) * (x3 - 1.0) + 90.0 * b * b +
         10.1 * ((x2 - 1.0) * (x2 - 1.0) + (x4 - 1.0) * (x4 - 1.0)) +
         19.8 * (x2 - 1.0) * (x4 - 1.0);
}

// Inputs ordered r_w, r, T_u, H_u, T_l, H_l, L, K_w.
inline double borehole(std::span<const double> x) {
  const double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6], Kw = x[7];
  const double log_ratio = std::log(r / rw);
  const double denom = log_ratio * (1.0 + 2.0 * L * Tu / (log_ratio * rw * rw * Kw) + Tu / Tl);
  return 2.0 * std::numbers::pi * Tu * (Hu - Hl) / denom;
}

}  // namespace detail

/// One of the four synthetic benchmark surfaces with its input domain.
class TestFunction {
 public:
  explicit TestFunction(TestFunctionKind kind) : kind_(kind) {}

  TestFunctionKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

  std::size_t dimension() const noexcept {
    switch (kind_) {
      case TestFunctionKind::Higdon: return 1;
      case TestFunctionKind::Hartmann3: return 3;
      case TestFunctionKind::Colville: return 4;
      case TestFunctionKind::Borehole: return 8;
    }
    return 0;
  }

  std::vector<Bounds> bounds() const {
    switch (kind_) {
      case TestFunctionKind::Higdon: return {{0.0, 10.0}};
      case TestFunctionKind::Hartmann3: return {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
      case TestFunctionKind::Colville:
        return {{-10.0, 10.0}, {-10.0, 10.0}, {-10.0, 10.0}, {-10.0, 10.0}};
      case TestFunctionKind::Borehole:
        return {{0.05, 0.15},   {100.0, 50000.0}, {63070.0, 115600.0}, {990.0, 1110.0},
                {63.1, 116.0},  {700.0, 820.0},   {1120.0, 1680.0},    {9855.0, 12045.0}};
    }
    return {};
  }

  double operator()(std::span<const double> x) const {
    if (x.size() != dimension()) {
      throw DimensionMismatch(std::string(name()) + " expects " + std::to_string(dimension()) +
                              " inputs, got " + std::to_string(x.size()));
    }
    switch (kind_) {
      case TestFunctionKind::Higdon: return detail::higdon(x);
      case TestFunctionKind::Hartmann3: return detail::hartmann3(x);
      case TestFunctionKind::Colville: return detail::colville(x);
      case TestFunctionKind::Borehole: return detail::borehole(x);
    }
    return 0.0;
  }

  double operator()(std::initializer_list<double> x) const {
    return (*this)(std::span<const double>(x.begin(), x.size()));
  }

 private:
  TestFunctionKind kind_;
};

inline double evaluate(const TestFunction& fn, std::span<const double> x) { return fn(x); }

/// Row-wise evaluation over an n x d matrix of domain points.
inline Vector evaluate_rows(const TestFunction& fn, const Matrix& X) {
  Vector y(X.rows());
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    y[i] = fn(row);
  }
  return y;
}

/// Random Latin hypercube in [0, 1)^d.
struct Design {
  Matrix points;
  std::uint64_t seed = 0;
};

/// Plain random LHS: each column is an independent random permutation of the
/// n strata, with a uniform offset inside each stratum.
inline Design latin_hypercube(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("latin_hypercube: n and d must be positive");
  Rng rng(seed);
  Design design{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), seed};
  std::vector<std::size_t> perm(n);
  const double width = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    for (std::size_t i = 0; i < n; ++i) {
      // Clamp so rounding never pushes a point into the next stratum.
      const double lo = static_cast<double>(perm[i]) * width;
      const double v = (static_cast<double>(perm[i]) + rng.uniform()) * width;
      design.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::min(std::max(v, lo), std::nextafter(lo + width, lo));
    }
  }
  return design;
}

namespace detail {

inline void check_bounds(const std::vector<Bounds>& bounds, Eigen::Index d) {
  if (bounds.size() != static_cast<std::size_t>(d)) {
    throw DimensionMismatch("bounds count " + std::to_string(bounds.size()) +
                            " does not match dimension " + std::to_string(d));
  }
  for (const auto& b : bounds) {
    if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high)) {
      throw std::invalid_argument("invalid bounds: need finite low < high");
    }
  }
}

}  // namespace detail

/// low + u (high - low), column-wise; written as a convex combination so the
/// endpoints map exactly onto the bounds.
inline Matrix scale_to_domain(const Matrix& unit, const std::vector<Bounds>& bounds) {
  detail::check_bounds(bounds, unit.cols());
  Matrix out(unit.rows(), unit.cols());
  for (Eigen::Index j = 0; j < unit.cols(); ++j) {
    const Bounds& b = bounds[static_cast<std::size_t>(j)];
    out.col(j) = ((1.0 - unit.col(j).array()) * b.low + unit.col(j).array() * b.high).matrix();
  }
  return out;
}

inline Matrix scale_to_domain(const Design& design, const std::vector<Bounds>& bounds) {
  return scale_to_domain(design.points, bounds);
}

/// Inverse of scale_to_domain.
inline Matrix scale_to_unit(const Matrix& X, const std::vector<Bounds>& bounds) {
  detail::check_bounds(bounds, X.cols());
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Bounds& b = bounds[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double u = (X(i, j) - b.low) / b.width();
      // In-domain points stay inside [0, 1] despite rounding.
      out(i, j) = b.contains(X(i, j)) ? std::clamp(u, 0.0, 1.0) : u;
    }
  }
  return out;
}

inline std::vector<Bounds> unit_bounds(std::size_t d) { return std::vector<Bounds>(d, Bounds{0.0, 1.0}); }

}  // namespace bayesgp
