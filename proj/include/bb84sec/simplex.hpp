#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace bb84sec {

struct SimplexOptions {
  double param_tol = 1e-8;
  double value_tol = 1e-10;
  std::size_t max_evals = 100000;
  double initial_step = 0.1;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Nelder-Mead minimisation inside a box. Trial points are clamped onto the
// box, so f is only ever evaluated at admissible parameters.
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, std::span<const double> lower, std::span<const double> upper,
                          const SimplexOptions& opt = {}) {
  const std::size_t n = x0.size();
  if (n == 0 || lower.size() != n || upper.size() != n) throw std::invalid_argument("nelder_mead: dimension mismatch");

  auto clamp = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  };
  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return f(std::span<const double>(x));
  };

  clamp(x0);
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = opt.initial_step * (upper[i] - lower[i]);
    pts[i + 1][i] = x0[i] + step <= upper[i] ? x0[i] + step : x0[i] - step;
    clamp(pts[i + 1]);
  }
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);

  auto blend = [&](std::vector<double>& out, double t, const std::vector<double>& worst) {
    for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + t * (worst[i] - centroid[i]);
    clamp(out);
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double fspread = 0.0, xspread = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      fspread = std::max(fspread, std::abs(vals[i] - vals[best]));
      for (std::size_t j = 0; j < n; ++j) xspread = std::max(xspread, std::abs(pts[i][j] - pts[best][j]));
    }
    if (fspread <= opt.value_tol && xspread <= opt.param_tol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evals) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);
    }

    blend(trial, -1.0, pts[worst]);
    const double fr = eval(trial);
    if (fr < vals[best]) {
      blend(trial2, -2.0, pts[worst]);
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    // contraction, outside if the reflection helped at all
    const bool outside = fr < vals[worst];
    blend(trial2, outside ? -0.5 : 0.5, pts[worst]);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

}  // namespace bb84sec
