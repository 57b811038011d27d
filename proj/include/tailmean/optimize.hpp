#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace tailmean {

template <std::size_t N>
using Point = std::array<double, N>;

struct NelderMeadOptions {
  double initial_step = 0.5;
  double diameter_tol = 1e-10;
  int max_evaluations = 5000;
};

template <std::size_t N>
struct NelderMeadResult {
  Point<N> x{};
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  double diameter = 0.0;
  bool converged = false;
};

// Derivative-free maximization. The objective may return -inf to mark points
// outside the feasible region; such vertices are always treated as worst.
template <std::size_t N, typename Fn>
NelderMeadResult<N> nelder_mead_maximize(Fn&& objective, const Point<N>& start,
                                         const NelderMeadOptions& opt = {}) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  std::array<Point<N>, N + 1> simplex{};
  std::array<double, N + 1> cost{};  // negated objective, minimized
  int evals = 0;
  auto eval = [&](const Point<N>& p) {
    ++evals;
    const double v = objective(p);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
  };

  simplex[0] = start;
  for (std::size_t i = 0; i < N; ++i) {
    simplex[i + 1] = start;
    simplex[i + 1][i] += opt.initial_step;
  }
  for (std::size_t i = 0; i <= N; ++i) cost[i] = eval(simplex[i]);

  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
      for (std::size_t j = i + 1; j <= N; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
          const double diff = simplex[i][k] - simplex[j][k];
          s += diff * diff;
        }
        d = std::max(d, std::sqrt(s));
      }
    }
    return d;
  };

  std::array<std::size_t, N + 1> order{};
  bool converged = false;
  while (evals < opt.max_evaluations) {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return cost[l] < cost[r]; });
    const std::size_t best = order[0];
    const std::size_t worst = order[N];
    const std::size_t second_worst = order[N - 1];

    if (diameter() < opt.diameter_tol) {
      converged = true;
      break;
    }

    Point<N> centroid{};
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < N; ++k) centroid[k] += simplex[i][k] / static_cast<double>(N);
    }
    auto along = [&](double t) {
      Point<N> p{};
      for (std::size_t k = 0; k < N; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return p;
    };

    const Point<N> reflected = along(-kReflect);
    const double reflected_cost = eval(reflected);
    if (reflected_cost < cost[best]) {
      const Point<N> expanded = along(-kExpand);
      const double expanded_cost = eval(expanded);
      if (expanded_cost < reflected_cost) {
        simplex[worst] = expanded;
        cost[worst] = expanded_cost;
      } else {
        simplex[worst] = reflected;
        cost[worst] = reflected_cost;
      }
      continue;
    }
    if (reflected_cost < cost[second_worst]) {
      simplex[worst] = reflected;
      cost[worst] = reflected_cost;
      continue;
    }
    const bool outside = reflected_cost < cost[worst];
    const Point<N> contracted = along(outside ? -kContract : kContract);
    const double contracted_cost = eval(contracted);
    if (contracted_cost < std::min(cost[worst], reflected_cost)) {
      simplex[worst] = contracted;
      cost[worst] = contracted_cost;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < N; ++k) {
        simplex[i][k] = simplex[best][k] + kShrink * (simplex[i][k] - simplex[best][k]);
      }
      cost[i] = eval(simplex[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= N; ++i) {
    if (cost[i] < cost[best]) best = i;
  }
  NelderMeadResult<N> out;
  out.x = simplex[best];
  out.value = -cost[best];
  out.evaluations = evals;
  out.diameter = diameter();
  out.converged = converged;
  return out;
}

}  // namespace tailmean
