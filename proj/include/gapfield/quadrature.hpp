#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gapfield/core.hpp"

namespace gapfield {

inline constexpr std::size_t kPanelOrder = 16;

/// Gauss-Legendre rule on [-1, 1] plus barycentric interpolation weights for its nodes.
struct GaussLegendre {
  std::array<double, kPanelOrder> nodes{};
  std::array<double, kPanelOrder> weights{};
  std::array<double, kPanelOrder> bary{};

  GaussLegendre() {
    constexpr std::size_t n = kPanelOrder;
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double dp = 1.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = p2;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[n - 1 - i] = x;
      weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // barycentric weights for Gauss-Legendre nodes: (-1)^j sqrt((1 - x_j^2) w_j)
    for (std::size_t j = 0; j < n; ++j)
      bary[j] = ((j % 2) ? -1.0 : 1.0) * std::sqrt((1.0 - nodes[j] * nodes[j]) * weights[j]);
  }

  /// Lagrange basis values at reference coordinate s.
  std::array<double, kPanelOrder> basis(double s) const {
    std::array<double, kPanelOrder> out{};
    double denom = 0.0;
    for (std::size_t j = 0; j < kPanelOrder; ++j) {
      double d = s - nodes[j];
      if (d == 0.0) {
        out.fill(0.0);
        out[j] = 1.0;
        return out;
      }
      out[j] = bary[j] / d;
      denom += out[j];
    }
    for (double& v : out) v /= denom;
    return out;
  }

  static const GaussLegendre& instance() {
    static const GaussLegendre rule;
    return rule;
  }
};

/// Chebyshev points of the first kind mapped to (0, 1), increasing.
inline std::vector<double> chebyshev_unit(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = 0.5 * (1.0 - std::cos(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n)));
  return out;
}

}  // namespace gapfield
