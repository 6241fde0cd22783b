#pragma once

// Pfaffians of skew-adjoint operator tuples and pointwise values of the Euler
// form and the generating forms tr[R(v1,v2) o ... o R(v_{4i-1},v_{4i})].
// Overall dimension constants are dropped.

#include <vector>

#include <Eigen/Dense>

#include "ecsw/curvature.hpp"
#include "ecsw/tensor.hpp"

namespace ecsw {

struct SkewTuple {
  FibreMetric fibre;
  std::vector<Eigen::MatrixXd> operators;
  int orientation = 1;
};

/// max |<Su, v> + <u, Sv>| over basis pairs, i.e. max|S^T G + G S|.
double skew_adjoint_residual(const Eigen::MatrixXd& S, const Eigen::MatrixXd& G);

/// s with zeta_1 ^ ... ^ zeta_m = s Theta, zeta_j(u,v) = <S_j u, v>, Theta the
/// volume form of the fibre metric with the given orientation.
/// Throws std::invalid_argument on odd dimension, wrong tuple length or a
/// non-skew operator (residual >= 1e-10 relative).
double pfaffian(const SkewTuple& st);

/// w -> R(u, v) w as a matrix acting on coordinate vectors. Throws
/// std::logic_error when the result is not g-skew-adjoint to 1e-8 relative.
Eigen::MatrixXd curvature_operator(const CurvaturePack& pack, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v);

/// Alternation over the n! orderings of Pf(R(v1,v2), ..., R(v_{n-1},v_n)),
/// divided by n!. Requires n even, n <= 8, and independent vectors.
double euler_form_at(const CurvaturePack& pack, const std::vector<Eigen::VectorXd>& vectors);

/// Alternation over the (4i)! orderings of the trace composite, divided by
/// (4i)!. Requires 4i <= n.
double generating_form_at(const CurvaturePack& pack, int i,
                          const std::vector<Eigen::VectorXd>& vectors);

}  // namespace ecsw
