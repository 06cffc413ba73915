#include "frem/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace frem {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n,
                                                                   double a,
                                                                   double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n < 1");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come
  // from the first eigenvector components
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double beta =
        static_cast<double>(i) / std::sqrt(4.0 * i * i - 1.0);
    jac(i, i - 1) = beta;
    jac(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = mid + half * eig.eigenvalues()[i];
    const double v0 = eig.eigenvectors()(0, i);
    w[static_cast<std::size_t>(i)] = 2.0 * v0 * v0 * half;
  }
  return {std::move(x), std::move(w)};
}

}  // namespace frem
