#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with the library.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "ecsw/curvature.hpp"
#include "ecsw/metric.hpp"
#include "ecsw/rng.hpp"
#include "ecsw/tensor.hpp"

namespace oracle {

inline int sign_of(const std::vector<int>& perm) {
  int s = 1;
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) s = -s;
  return s;
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// (zeta_1 ^ ... ^ zeta_m)(e_1, ..., e_2m) by summing over all (2m)!
/// orderings, determinant normalization.
inline double wedge_expansion(const std::vector<Eigen::MatrixXd>& zetas) {
  const int m = static_cast<int>(zetas.size());
  std::vector<int> perm(2 * m);
  std::iota(perm.begin(), perm.end(), 0);
  double sum = 0.0;
  do {
    double term = sign_of(perm);
    for (int j = 0; j < m; ++j) term *= zetas[j](perm[2 * j], perm[2 * j + 1]);
    sum += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / std::pow(2.0, m);
}

/// Classical Pfaffian by expansion along the first row.
inline double pfaffian_cofactor(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  if (n == 0) return 1.0;
  if (n % 2 != 0) return 0.0;
  double sum = 0.0;
  for (int j = 1; j < n; ++j) {
    std::vector<int> keep;
    for (int i = 1; i < n; ++i)
      if (i != j) keep.push_back(i);
    Eigen::MatrixXd minor(n - 2, n - 2);
    for (int a = 0; a < n - 2; ++a)
      for (int b = 0; b < n - 2; ++b) minor(a, b) = M(keep[a], keep[b]);
    sum += ((j % 2 == 1) ? 1.0 : -1.0) * M(0, j) * pfaffian_cofactor(minor);
  }
  return sum;
}

inline Eigen::MatrixXd random_antisymmetric(ecsw::Rng& rng, int n) {
  const Eigen::MatrixXd a = rng.uniform_matrix(n, n, -1, 1);
  return a - a.transpose();
}

inline Eigen::MatrixXd random_symmetric(ecsw::Rng& rng, int n) {
  const Eigen::MatrixXd a = rng.uniform_matrix(n, n, -1, 1);
  return a + a.transpose();
}

/// Riemann-symmetric (0,4) tensor: sum of Kulkarni-Nomizu products of random
/// symmetric forms, written out component by component.
inline ecsw::Tensor random_curvature_like(ecsw::Rng& rng, int n, int terms) {
  ecsw::Tensor W = ecsw::Tensor::covariant(n, 4);
  for (int t = 0; t < terms; ++t) {
    const Eigen::MatrixXd a = random_symmetric(rng, n), b = random_symmetric(rng, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            W(i, j, k, l) += a(i, k) * b(j, l) + a(j, l) * b(i, k) - a(i, l) * b(j, k) - a(j, k) * b(i, l);
  }
  return W;
}

/// Central differences of the Christoffel symbols built from the provider's
/// metric values only: G^k_ij from 4th-order first differences of g.
inline ecsw::Tensor christoffel_fd(const ecsw::MetricProvider& prov, const ecsw::ChartPoint& p, double h) {
  const int n = prov.dim();
  std::vector<Eigen::MatrixXd> dg(n);
  for (int m = 0; m < n; ++m) {
    auto at = [&](double off) {
      Eigen::VectorXd x = p.coords;
      x(m) += off;
      return prov.metric(ecsw::ChartPoint(x));
    };
    dg[m] = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
  }
  const Eigen::MatrixXd ginv = prov.metric(p).inverse();
  ecsw::Tensor G(n, {ecsw::Slot::Contravariant, ecsw::Slot::Covariant, ecsw::Slot::Covariant});
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += 0.5 * ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        G(k, i, j) = s;
      }
  return G;
}

}  // namespace oracle
