#include "ecsw/charforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ecsw {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Pfaffian without argument validation; zeta_j = S_j^T G.
double pfaffian_unchecked(const std::vector<Eigen::MatrixXd>& ops, const Eigen::MatrixXd& G,
                          double theta) {
  std::vector<Eigen::MatrixXd> zetas;
  zetas.reserve(ops.size());
  for (const auto& S : ops) zetas.push_back(S.transpose() * G);
  return wedge_on_basis(zetas) / theta;
}

double volume_value(const FibreMetric& fibre, int orientation) {
  return (orientation >= 0 ? 1.0 : -1.0) * std::sqrt(std::abs(fibre.matrix().determinant()));
}

// Iterates over all orderings of 0..k-1 with their signs, in lexicographic order.
template <class Fn>
void for_each_permutation(int k, Fn&& fn) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    fn(perm, permutation_sign(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace

double skew_adjoint_residual(const Eigen::MatrixXd& S, const Eigen::MatrixXd& G) {
  return (S.transpose() * G + G * S).cwiseAbs().maxCoeff();
}

double pfaffian(const SkewTuple& st) {
  const int r = st.fibre.dim();
  if (r % 2 != 0) throw std::invalid_argument("pfaffian: fibre dimension must be even");
  const auto m = static_cast<std::size_t>(r / 2);
  if (st.operators.size() != m) {
    throw std::invalid_argument("pfaffian: expected " + std::to_string(m) + " operators, got " +
                                std::to_string(st.operators.size()));
  }
  for (const auto& S : st.operators) {
    if (S.rows() != r || S.cols() != r) throw std::invalid_argument("pfaffian: operator size");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if (skew_adjoint_residual(S, st.fibre.matrix()) >= 1e-10 * scale) {
      throw std::invalid_argument("pfaffian: operator is not skew-adjoint");
    }
  }
  return pfaffian_unchecked(st.operators, st.fibre.matrix(), volume_value(st.fibre, st.orientation));
}

Eigen::MatrixXd curvature_operator(const CurvaturePack& pack, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v) {
  const int n = pack.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double uv = u(i) * v(j);
      if (uv == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) M(l, k) += uv * pack.riemann13(i, j, k, l);
    }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (skew_adjoint_residual(M, pack.g) >= 1e-8 * scale) {
    throw std::logic_error("curvature_operator: R(u, v) is not skew-adjoint");
  }
  return M;
}

double euler_form_at(const CurvaturePack& pack, const std::vector<Eigen::VectorXd>& vectors) {
  const int n = pack.dim();
  if (n % 2 != 0) throw std::invalid_argument("euler_form_at: dimension must be even");
  if (n > 8) throw std::invalid_argument("euler_form_at: dimension above 8 is not supported");
  if (static_cast<int>(vectors.size()) != n) {
    throw std::invalid_argument("euler_form_at: expected n vectors");
  }
  Eigen::MatrixXd basis(n, n);
  double norms = 1.0;
  for (int a = 0; a < n; ++a) {
    basis.col(a) = vectors[static_cast<std::size_t>(a)];
    norms *= basis.col(a).norm();
  }
  if (std::abs(basis.determinant()) <= 1e-12 * norms) {
    throw std::invalid_argument("euler_form_at: vectors are linearly dependent");
  }
  std::vector<Eigen::MatrixXd> ops(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) ops[static_cast<std::size_t>(a * n + b)] =
          curvature_operator(pack, vectors[static_cast<std::size_t>(a)],
                             vectors[static_cast<std::size_t>(b)]);
  const double theta = std::sqrt(std::abs(pack.g.determinant()));
  const int m = n / 2;
  std::vector<Eigen::MatrixXd> tuple(static_cast<std::size_t>(m));
  double sum = 0.0;
  for_each_permutation(n, [&](const std::vector<int>& p, int sign) {
    for (int j = 0; j < m; ++j)
      tuple[static_cast<std::size_t>(j)] =
          ops[static_cast<std::size_t>(p[2 * j] * n + p[2 * j + 1])];
    sum += sign * pfaffian_unchecked(tuple, pack.g, theta);
  });
  return sum / factorial(n);
}

double generating_form_at(const CurvaturePack& pack, int i,
                          const std::vector<Eigen::VectorXd>& vectors) {
  const int n = pack.dim();
  if (i < 1 || 4 * i > n) throw std::invalid_argument("generating_form_at: need 1 <= 4i <= n");
  const int k = 4 * i;
  if (static_cast<int>(vectors.size()) != k) {
    throw std::invalid_argument("generating_form_at: expected 4i vectors");
  }
  std::vector<Eigen::MatrixXd> ops(static_cast<std::size_t>(k * k));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (a != b) ops[static_cast<std::size_t>(a * k + b)] =
          curvature_operator(pack, vectors[static_cast<std::size_t>(a)],
                             vectors[static_cast<std::size_t>(b)]);
  double sum = 0.0;
  for_each_permutation(k, [&](const std::vector<int>& p, int sign) {
    Eigen::MatrixXd prod = ops[static_cast<std::size_t>(p[0] * k + p[1])];
    for (int j = 1; j < k / 2; ++j) prod = prod * ops[static_cast<std::size_t>(p[2 * j] * k + p[2 * j + 1])];
    sum += sign * prod.trace();
  });
  return sum / factorial(k);
}

}  // namespace ecsw
