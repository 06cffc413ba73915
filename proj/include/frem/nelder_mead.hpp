#pragma once

#include <functional>
#include <vector>

namespace frem {

struct NelderMeadOptions {
  int max_evals = 1000;
  double tolerance = 1e-8;  // simplex f-spread
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

//! Derivative-free simplex search (standard reflection/expansion/
//! contraction/shrink coefficients). Non-finite objective values are
//! treated as +infinity.
NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> x0, const NelderMeadOptions& options);

}  // namespace frem
