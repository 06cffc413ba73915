#pragma once

#include <utility>
#include <vector>

namespace frem {

//! Gauss-Legendre nodes and weights on [a, b].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n,
                                                                   double a,
                                                                   double b);

}  // namespace frem
