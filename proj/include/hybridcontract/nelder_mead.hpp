#pragma once

// Bound-constrained Nelder-Mead. Candidates are clamped into [lo, hi]
// componentwise; good enough for the low-dimensional chart optimizations in
// the metric module, where objectives are cheap and gradients unavailable.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "hybridcontract/errors.hpp"
#include "hybridcontract/norms.hpp"

namespace hybridcontract {

struct NelderMeadOptions {
  int max_iters = 400;
  double x_tol = 1e-10;
  double f_tol = 1e-12;
  double initial_scale = 0.1;  // simplex edge, relative to box extent
};

struct NelderMeadResult {
  Vec x;
  double f = 0.0;
  int iters = 0;
};

[[nodiscard]] inline NelderMeadResult nelder_mead(
    const std::function<double(const Vec&)>& f, const Vec& x0, const Vec& lo,
    const Vec& hi, const NelderMeadOptions& o = {}) {
  const int n = static_cast<int>(x0.size());
  if (lo.size() != n || hi.size() != n)
    throw DimensionMismatch("nelder_mead bounds do not match start point");
  if (n == 0) return {x0, f(x0), 0};

  auto clamp_box = [&](Vec x) {
    for (int d = 0; d < n; ++d) x(d) = std::clamp(x(d), lo(d), hi(d));
    return x;
  };

  std::vector<Vec> xs(static_cast<std::size_t>(n) + 1);
  std::vector<double> fs(static_cast<std::size_t>(n) + 1);
  xs[0] = clamp_box(x0);
  fs[0] = f(xs[0]);
  for (int d = 0; d < n; ++d) {
    Vec x = xs[0];
    const double step = o.initial_scale * (hi(d) - lo(d));
    x(d) += (x(d) + step <= hi(d)) ? step : -step;
    xs[static_cast<std::size_t>(d) + 1] = clamp_box(std::move(x));
    fs[static_cast<std::size_t>(d) + 1] = f(xs[static_cast<std::size_t>(d) + 1]);
  }

  std::vector<int> order(static_cast<std::size_t>(n) + 1);
  int iter = 0;
  for (; iter < o.max_iters; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return fs[static_cast<std::size_t>(i)] < fs[static_cast<std::size_t>(j)];
    });
    const int best = order[0], worst = order[static_cast<std::size_t>(n)];
    const int second_worst = order[static_cast<std::size_t>(n) - 1];

    double spread = 0.0;
    for (int i = 1; i <= n; ++i)
      spread = std::max(spread, (xs[static_cast<std::size_t>(order[
                                     static_cast<std::size_t>(i)])] -
                                 xs[static_cast<std::size_t>(best)])
                                    .cwiseAbs()
                                    .maxCoeff());
    if (spread <= o.x_tol &&
        std::abs(fs[static_cast<std::size_t>(worst)] -
                 fs[static_cast<std::size_t>(best)]) <= o.f_tol)
      break;

    Vec centroid = Vec::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (order[static_cast<std::size_t>(i)] != worst)
        centroid += xs[static_cast<std::size_t>(
            order[static_cast<std::size_t>(i)])];
    centroid /= n;

    const Vec xw = xs[static_cast<std::size_t>(worst)];
    const Vec xr = clamp_box(centroid + (centroid - xw));
    const double fr = f(xr);

    if (fr < fs[static_cast<std::size_t>(best)]) {
      const Vec xe = clamp_box(centroid + 2.0 * (centroid - xw));
      const double fe = f(xe);
      if (fe < fr) {
        xs[static_cast<std::size_t>(worst)] = xe;
        fs[static_cast<std::size_t>(worst)] = fe;
      } else {
        xs[static_cast<std::size_t>(worst)] = xr;
        fs[static_cast<std::size_t>(worst)] = fr;
      }
    } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
      xs[static_cast<std::size_t>(worst)] = xr;
      fs[static_cast<std::size_t>(worst)] = fr;
    } else {
      const Vec xc = clamp_box(centroid + 0.5 * (xw - centroid));
      const double fc = f(xc);
      if (fc < fs[static_cast<std::size_t>(worst)]) {
        xs[static_cast<std::size_t>(worst)] = xc;
        fs[static_cast<std::size_t>(worst)] = fc;
      } else {
        const Vec xb = xs[static_cast<std::size_t>(best)];
        for (int i = 0; i <= n; ++i) {
          if (order[static_cast<std::size_t>(i)] == best) continue;
          const int k = order[static_cast<std::size_t>(i)];
          xs[static_cast<std::size_t>(k)] =
              clamp_box(xb + 0.5 * (xs[static_cast<std::size_t>(k)] - xb));
          fs[static_cast<std::size_t>(k)] = f(xs[static_cast<std::size_t>(k)]);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fs[static_cast<std::size_t>(i)] < fs[static_cast<std::size_t>(best)])
      best = i;
  return {xs[static_cast<std::size_t>(best)], fs[static_cast<std::size_t>(best)],
          iter};
}

}  // namespace hybridcontract
