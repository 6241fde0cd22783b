#pragma once

// Olszak distribution D: vectors u with g(u, .) ^ W(v, v', ., .) = 0.

#include <vector>

#include <Eigen/Dense>

#include "ecsw/check.hpp"
#include "ecsw/curvature.hpp"
#include "ecsw/metric.hpp"

namespace ecsw {

struct DistributionBasis {
  ChartPoint point;
  int dim_D = 0;
  std::vector<Eigen::VectorXd> basis_D;       // Euclidean unit vectors
  std::vector<Eigen::VectorXd> basis_Dperp;   // Euclidean orthonormal
  bool degenerate = false;                    // W vanishes at the point
  Eigen::VectorXd singular_values;            // of the defining linear map
};

/// Nonzero forms W(e_a, e_b, ., .), a < b, as antisymmetric matrices.
/// Forms with max|entry| <= 1e-12 * max|W| are dropped.
std::vector<Eigen::MatrixXd> weyl_image_2forms(const Tensor& W, const Eigen::MatrixXd& g);

/// Dimension of the span of a list of matrices (SVD, threshold 1e-9 relative).
int span_rank(const std::vector<Eigen::MatrixXd>& forms);

/// Rank of W acting on 2-forms, i.e. of the matrix W[(ab),(cd)], a<b, c<d.
int two_form_operator_rank(const Tensor& W);

/// Kernel of u -> {g(u,.) ^ Omega}, singular values below 1e-9 sigma_max
/// counted as zero. Sets `degenerate` when max|W| < 1e-10.
DistributionBasis olszak_distribution(const Tensor& W, const Eigen::MatrixXd& g,
                                      const ChartPoint& p);

/// Sine of the angle between d and the coordinate axis e_axis.
double axis_misalignment(const Eigen::VectorXd& d, int axis);

struct OlszakTolerances {
  double nullity = 1e-10;
  double chain = 1e-9;
  double contraction = 1e-9;
};

/// Nullity, parallelism (coordinate-constant extension of the D basis),
/// the inclusion chain (Ker rho)^perp < D < D^perp < Ker rho, D < Ker W,
/// and vanishing of W and R on pairs from D^perp. Never throws.
std::vector<CheckRecord> check_structure(const DistributionBasis& db, const CurvaturePack& pack,
                                         const MetricJet& jet, const OlszakTolerances& tol = {});

struct PhiValue {
  ChartPoint point;
  Eigen::MatrixXd matrix;     // Phi(lambda (x) lambda) in the coset basis
  Eigen::MatrixXd gamma;      // induced fibre metric in the coset basis
  double norm_factor = 0.0;   // |u| = |Phi|^{-1/2}
};

/// Phi(lambda (x) lambda)(c_a, c_b) = W(c_a, U, U, c_b) where U is any vector
/// with g(U, u) = 1, so that lambda = g(U, .) on D = span(u).
PhiValue phi_matrix(const Tensor& W, const Eigen::MatrixXd& g, const Eigen::VectorXd& u,
                    const Eigen::MatrixXd& coset_basis);

/// Builds Phi for the D-spanning vector scaled so that g(u, d_t) = 1 (that
/// is u = grad t on the Roter chart), uses the v-coordinate directions as
/// coset basis of D^perp / D, and returns (Phi, gamma^{-1} Phi).
/// Throws std::invalid_argument when dim D != 1 and std::domain_error when
/// Phi vanishes.
std::pair<PhiValue, Eigen::MatrixXd> phi_and_recover_A(const CurvaturePack& pack,
                                                       const DistributionBasis& db,
                                                       const RoterSpec& spec);

}  // namespace ecsw
