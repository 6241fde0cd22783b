#pragma once

// Levi-Civita curvature from a metric jet.
//
// Conventions (coordinate fields, summation implied):
//   R(d_i, d_j) d_k = (d_j G^l_ik - d_i G^l_jk + G^m_ik G^l_jm - G^m_jk G^l_im) d_l
//   riemann13(i,j,k,l) is the d_l component of R(d_i, d_j) d_k
//   riemann04(i,j,k,l) = g(R(d_i, d_j) d_k, d_l)
//   ricci(j,k) = sum_i riemann13(j,i,k,i), i.e. the trace of u -> R(d_j, u) d_k
// With these choices a round sphere of curvature K has scalar n(n-1)K.

#include <Eigen/Dense>

#include "ecsw/metric.hpp"
#include "ecsw/tensor.hpp"

namespace ecsw {

/// Curvature data at one point. The derivative blocks are filled only when
/// the source jet has order 3.
struct CurvaturePack {
  ChartPoint point;
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
  Tensor christoffel;     // (k,i,j) = G^k_ij
  Tensor dchristoffel;    // (m,k,i,j) = d_m G^k_ij
  Tensor riemann13;
  Tensor riemann04;
  Tensor ricci;
  double scalar = 0.0;
  Tensor schouten;
  Tensor weyl;

  bool has_derivatives = false;
  Tensor d2christoffel;   // (p,m,k,i,j) = d_p d_m G^k_ij
  Tensor nabla_riemann;   // (m,i,j,k,l) = (nabla_m R)(i,j,k,l), all covariant
  Tensor nabla_ricci;     // (m,j,k)
  Tensor nabla_weyl;      // (m,i,j,k,l)

  int dim() const { return static_cast<int>(g.rows()); }
  Tensor metric_tensor() const { return Tensor::from_matrix(g, Slot::Covariant, Slot::Covariant); }
  Tensor inverse_metric_tensor() const {
    return Tensor::from_matrix(g_inv, Slot::Contravariant, Slot::Contravariant);
  }
};

/// G^k_ij stored as (k,i,j). Throws std::domain_error for a singular metric.
Tensor christoffel(const MetricJet& jet);

/// (riemann13, riemann04). Requires jet order >= 2.
std::pair<Tensor, Tensor> riemann(const MetricJet& jet);

struct RicciData {
  Tensor ricci;
  double scalar = 0.0;
  Tensor schouten;
};

RicciData ricci_scalar_schouten(const MetricJet& jet, const Tensor& riemann13);

/// (a ^ b)_ijkl = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il
Tensor kulkarni_nomizu(const Tensor& a, const Tensor& b);

/// W = R - (n-2)^{-1} g ^ sigma. Throws std::invalid_argument for n < 4.
Tensor weyl(const MetricJet& jet, const CurvaturePack& pack);

/// First covariant derivative. dT carries the coordinate derivative index in
/// its first slot followed by the slots of T; the result has the same layout.
Tensor covariant_derivative(const Tensor& T, const Tensor& christoffel, const Tensor& dT);

/// Full curvature pack. Throws std::invalid_argument for n < 4 and
/// std::domain_error for a singular metric.
CurvaturePack compute_curvature(const MetricJet& jet);

/// max|residual| / max(1, max|reference|)
double relative(double residual_max_abs, double reference_max_abs);
double relative(const Tensor& residual, const Tensor& reference);

/// Max violation of R_ijkl = -R_jikl = -R_ijlk = R_klij.
double riemann_pair_symmetry_residual(const Tensor& R04);
/// Max |R_ijkl + R_jkil + R_kijl|.
double first_bianchi_residual(const Tensor& R04);
/// Max over all six slot pairs of the metric trace.
double trace_residual(const Tensor& T04, const Eigen::MatrixXd& g_inv);
/// Max |nabla_m R_ijkl + nabla_i R_jmkl + nabla_j R_mikl|.
double second_bianchi_residual(const Tensor& nabla_R);
/// Max |T_mjk - T_jmk| + |T_mjk - T_mkj| over components.
double total_symmetry_residual(const Tensor& T3);

}  // namespace ecsw
