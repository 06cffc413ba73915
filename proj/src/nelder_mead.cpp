#include "frem/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace frem {

namespace {
constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;
}  // namespace

NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> x0, const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  auto safe_eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double f = objective(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::max();
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> f(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step;
  for (std::size_t i = 0; i <= n; ++i) f[i] = safe_eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  while (res.evals < options.max_evals) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = order.front(), worst = order.back();
    const std::size_t second_worst = order[n - 1];

    if (f[worst] - f[best] <= options.tolerance * (1.0 + std::abs(f[best]))) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t k = 0; k < n; ++k)
      xr[k] = centroid[k] + kReflect * (centroid[k] - simplex[worst][k]);
    const double fr = safe_eval(xr);

    if (fr < f[best]) {
      for (std::size_t k = 0; k < n; ++k)
        xe[k] = centroid[k] + kExpand * (xr[k] - centroid[k]);
      const double fe = safe_eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        f[worst] = fe;
      } else {
        simplex[worst] = xr;
        f[worst] = fr;
      }
    } else if (fr < f[second_worst]) {
      simplex[worst] = xr;
      f[worst] = fr;
    } else {
      const bool outside = fr < f[worst];
      const auto& towards = outside ? xr : simplex[worst];
      for (std::size_t k = 0; k < n; ++k)
        xc[k] = centroid[k] + kContract * (towards[k] - centroid[k]);
      const double fc = safe_eval(xc);
      if (fc < std::min(fr, f[worst])) {
        simplex[worst] = xc;
        f[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k)
            simplex[i][k] =
                simplex[best][k] + kShrink * (simplex[i][k] - simplex[best][k]);
          f[i] = safe_eval(simplex[i]);
        }
      }
    }
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (f[i] < f[arg]) arg = i;
  res.x = simplex[arg];
  res.value = f[arg];
  return res;
}

}  // namespace frem
