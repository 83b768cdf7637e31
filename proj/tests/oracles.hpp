#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "ces/maze.hpp"

namespace oracle {

// Central finite differences of a scalar function, one coordinate at a time.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a|_inf, |b|_inf)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

// Closed-segment intersection by orientation signs, independent of the
// library's geometry code.
inline bool crosses(ces::Vec2 p1, ces::Vec2 p2, ces::Vec2 q1, ces::Vec2 q2) {
  const auto orient = [](ces::Vec2 a, ces::Vec2 b, ces::Vec2 c) {
    const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return (v > 0) - (v < 0);
  };
  const auto on = [](ces::Vec2 a, ces::Vec2 b, ces::Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2), o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on(p1, p2, q1)) || (o2 == 0 && on(p1, p2, q2)) || (o3 == 0 && on(q1, q2, p1)) ||
         (o4 == 0 && on(q1, q2, p2));
}

// March along a beam in fixed steps until a step crosses a segment, then
// bisect inside that step.
inline double ray_march(const ces::Maze& maze, ces::Vec2 p, double angle, double step = 0.25) {
  const ces::Vec2 d{std::cos(angle), std::sin(angle)};
  const double range = maze.spec().dynamics.lidar_range;
  const auto blocked = [&](double t0, double t1) {
    for (const ces::Segment& s : maze.segments()) {
      if (crosses(p + d * t0, p + d * t1, s.a, s.b)) return true;
    }
    return false;
  };
  double t = 0.0;
  while (t < range) {
    const double next = std::min(range, t + step);
    if (blocked(t, next)) {
      double lo = t, hi = next;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (blocked(lo, mid) ? hi : lo) = mid;
      }
      return hi;
    }
    t = next;
  }
  return range;
}

// Mean of the k smallest distances, by sorting all of them.
inline double knn_brute_force(const std::vector<std::vector<double>>& archive, const std::vector<double>& b,
                              std::size_t k) {
  std::vector<double> d;
  for (const auto& a : archive) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    d.push_back(std::sqrt(s));
  }
  std::sort(d.begin(), d.end());
  k = std::min(k, d.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += d[i];
  return sum / static_cast<double>(k);
}

// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
// eigenvalues descending with unit eigenvectors as columns of the pair.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(
    std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  for (std::size_t i : order) {
    values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    vectors.push_back(std::move(col));
  }
  return {values, vectors};
}

// Largest principal angle between span(a) and span(b), each given as
// orthonormal row vectors.
inline double max_principal_angle(const std::vector<std::vector<double>>& a,
                                  const std::vector<std::vector<double>>& b) {
  // Singular values of the k x k matrix M = A B^T are the cosines.
  const std::size_t k = a.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < a[i].size(); ++d) s += a[i][d] * b[j][d];
      m[i][j] = s;
    }
  }
  std::vector<std::vector<double>> mtm(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t r = 0; r < k; ++r) mtm[i][j] += m[r][i] * m[r][j];
    }
  }
  const auto [values, vectors] = jacobi_eigen(mtm);
  const double smallest_cos = std::sqrt(std::clamp(values.back(), 0.0, 1.0));
  // Use the sine for accuracy near zero angles.
  return std::asin(std::sqrt(std::max(0.0, 1.0 - smallest_cos * smallest_cos)));
}

}  // namespace oracle
