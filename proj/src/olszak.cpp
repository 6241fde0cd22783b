#include "ecsw/olszak.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecsw {

namespace {

constexpr double kKernelThreshold = 1e-9;

Eigen::MatrixXd columns(const std::vector<Eigen::VectorXd>& vs, int n) {
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vs[i];
  return m;
}

// Orthonormal basis of the kernel of m (right singular vectors).
std::vector<Eigen::VectorXd> kernel(const Eigen::MatrixXd& m, Eigen::VectorXd* sv = nullptr) {
  const int n = static_cast<int>(m.cols());
  std::vector<Eigen::VectorXd> out;
  if (m.rows() == 0) {
    for (int i = 0; i < n; ++i) out.push_back(Eigen::VectorXd::Unit(n, i));
    if (sv) *sv = Eigen::VectorXd();
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (sv) *sv = s;
  const double cut = kKernelThreshold * (s.size() ? s(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++rank;
  for (int i = rank; i < n; ++i) out.push_back(svd.matrixV().col(i));
  return out;
}

// Euclidean distance of x from the column span of an orthonormal q.
double distance_from_span(const Eigen::VectorXd& x, const Eigen::MatrixXd& q) {
  if (q.cols() == 0) return x.cwiseAbs().maxCoeff();
  return (x - q * (q.transpose() * x)).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd orthonormal(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) return m;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

}  // namespace

std::vector<Eigen::MatrixXd> weyl_image_2forms(const Tensor& W, const Eigen::MatrixXd& g) {
  const int n = W.dim();
  if (g.rows() != n) throw std::invalid_argument("weyl_image_2forms: dimension mismatch");
  const double scale = W.max_abs();
  std::vector<Eigen::MatrixXd> out;
  if (scale == 0.0) return out;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Eigen::MatrixXd om(n, n);
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) om(c, d) = W(a, b, c, d);
      if (om.cwiseAbs().maxCoeff() > 1e-12 * scale) out.push_back(std::move(om));
    }
  return out;
}

int span_rank(const std::vector<Eigen::MatrixXd>& forms) {
  if (forms.empty()) return 0;
  const Eigen::Index sz = forms.front().size();
  Eigen::MatrixXd m(sz, static_cast<Eigen::Index>(forms.size()));
  for (std::size_t i = 0; i < forms.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = forms[i].reshaped();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kKernelThreshold * s(0)) ++rank;
  return rank;
}

int two_form_operator_rank(const Tensor& W) {
  const int n = W.dim();
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  const auto np = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd m(np, np);
  for (Eigen::Index r = 0; r < np; ++r)
    for (Eigen::Index c = 0; c < np; ++c)
      m(r, c) = W(pairs[r].first, pairs[r].second, pairs[c].first, pairs[c].second);
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kKernelThreshold * s(0)) ++rank;
  return rank;
}

DistributionBasis olszak_distribution(const Tensor& W, const Eigen::MatrixXd& g,
                                      const ChartPoint& p) {
  const int n = W.dim();
  DistributionBasis db;
  db.point = p;
  if (W.max_abs() < 1e-10) {
    db.degenerate = true;
    return db;
  }
  const std::vector<Eigen::MatrixXd> forms = weyl_image_2forms(W, g);
  // (xi ^ Omega)(e_a, e_b, e_c) = xi_a Omega_bc - xi_b Omega_ac + xi_c Omega_ab,
  // with xi_a = g_aj u^j; one row per (Omega, a < b < c).
  std::vector<Eigen::RowVectorXd> rows;
  for (const auto& om : forms)
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          rows.push_back(g.row(a) * om(b, c) - g.row(b) * om(a, c) + g.row(c) * om(a, b));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
  db.basis_D = kernel(m, &db.singular_values);
  db.dim_D = static_cast<int>(db.basis_D.size());
  // D^perp = kernel of u -> (g B)^T u.
  const Eigen::MatrixXd B = columns(db.basis_D, n);
  db.basis_Dperp = kernel((g * B).transpose());
  return db;
}

double axis_misalignment(const Eigen::VectorXd& d, int axis) {
  const double norm = d.norm();
  if (norm == 0.0) return 1.0;
  Eigen::VectorXd r = d;
  r(axis) = 0.0;
  return r.norm() / norm;
}

std::vector<CheckRecord> check_structure(const DistributionBasis& db, const CurvaturePack& pack,
                                         const MetricJet& jet, const OlszakTolerances& tol) {
  std::vector<CheckRecord> out;
  const char* names[] = {"olszak_nullity",           "olszak_parallel",
                         "olszak_ricci_image_in_D",  "olszak_D_in_Dperp",
                         "olszak_Dperp_in_ker_ricci", "olszak_D_in_ker_weyl",
                         "olszak_weyl_on_Dperp",     "olszak_riemann_on_Dperp"};
  if (db.degenerate || db.dim_D == 0) {
    for (const char* name : names)
      out.push_back(skipped_check(name, "Olszak distribution structure",
                                  db.degenerate ? "W vanishes at the point" : "D is trivial"));
    return out;
  }
  const int n = jet.dim();
  const Eigen::MatrixXd& g = jet.g;
  const Eigen::MatrixXd Q = orthonormal(columns(db.basis_D, n));

  double nullity = 0.0;
  for (const auto& u : db.basis_D)
    for (const auto& w : db.basis_D) nullity = std::max(nullity, std::abs(u.dot(g * w)));
  out.push_back(make_check(names[0], "D is null", nullity, tol.nullity));

  // Coordinate-constant extension: nabla_{e_i} u = G^k_ij u^j must stay in D.
  double parallel = 0.0;
  for (const auto& u : db.basis_D)
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd du = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) du(k) += pack.christoffel(k, i, j) * u(j);
      parallel = std::max(parallel, distance_from_span(du, Q));
    }
  out.push_back(make_check(names[1], "D is parallel", parallel, tol.chain));

  const Eigen::MatrixXd ric = pack.ricci.to_matrix();
  const double ric_scale = std::max(1.0, ric.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd ric_sharp = pack.g_inv * ric;
  double image = 0.0;
  for (int i = 0; i < n; ++i) image = std::max(image, distance_from_span(ric_sharp.col(i), Q));
  out.push_back(make_check(names[2], "(Ker rho)^perp is contained in D", image / ric_scale,
                           tol.chain));

  // D < D^perp: every D vector lies in the span of the D^perp basis.
  const Eigen::MatrixXd P = orthonormal(columns(db.basis_Dperp, n));
  double d_in_perp = 0.0;
  for (const auto& u : db.basis_D) d_in_perp = std::max(d_in_perp, distance_from_span(u, P));
  out.push_back(make_check(names[3], "D is contained in D^perp", d_in_perp, tol.chain));

  double perp_ker = 0.0;
  for (const auto& v : db.basis_Dperp) perp_ker = std::max(perp_ker, (ric * v).cwiseAbs().maxCoeff());
  out.push_back(make_check(names[4], "D^perp is contained in Ker rho", perp_ker / ric_scale,
                           tol.chain));

  const Tensor& W = pack.weyl;
  const Tensor& R = pack.riemann04;
  const double w_scale = std::max(1.0, W.max_abs());
  const double r_scale = std::max(1.0, R.max_abs());
  double ker_w = 0.0;
  for (const auto& u : db.basis_D)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int i = 0; i < n; ++i) v += u(i) * W(i, j, k, l);
          ker_w = std::max(ker_w, std::abs(v));
        }
  out.push_back(make_check(names[5], "D is contained in Ker W", ker_w / w_scale, tol.chain));

  double w_perp = 0.0, r_perp = 0.0;
  for (const auto& a : db.basis_Dperp)
    for (const auto& b : db.basis_Dperp)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double wv = 0.0, rv = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              const double ab = a(i) * b(j);
              if (ab == 0.0) continue;
              wv += ab * W(i, j, k, l);
              rv += ab * R(i, j, k, l);
            }
          w_perp = std::max(w_perp, std::abs(wv));
          r_perp = std::max(r_perp, std::abs(rv));
        }
  out.push_back(make_check(names[6], "W(v, v', ., .) = 0 for v, v' in D^perp", w_perp / w_scale,
                           tol.contraction));
  out.push_back(make_check(names[7], "R(v, v', ., .) = 0 for v, v' in D^perp", r_perp / r_scale,
                           tol.contraction));
  return out;
}

PhiValue phi_matrix(const Tensor& W, const Eigen::MatrixXd& g, const Eigen::VectorXd& u,
                    const Eigen::MatrixXd& coset_basis) {
  const int n = W.dim();
  const Eigen::VectorXd xi = g * u;
  const double xx = xi.squaredNorm();
  if (xx == 0.0) throw std::invalid_argument("phi_matrix: zero spanning vector");
  const Eigen::VectorXd U = xi / xx;  // g(U, u) = 1
  const auto k = coset_basis.cols();
  PhiValue phi;
  phi.matrix = Eigen::MatrixXd::Zero(k, k);
  // M(i,l) = W(., U, U, .) as a bilinear form on the tangent space.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      double v = 0.0;
      for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) v += U(j) * U(m) * W(i, j, m, l);
      M(i, l) = v;
    }
  phi.matrix = coset_basis.transpose() * M * coset_basis;
  phi.matrix = 0.5 * (phi.matrix + phi.matrix.transpose()).eval();
  phi.gamma = coset_basis.transpose() * g * coset_basis;
  const Eigen::MatrixXd gi = phi.gamma.inverse();
  const double sq = std::abs((gi * phi.matrix * gi * phi.matrix).trace());
  phi.norm_factor = sq > 0.0 ? std::pow(sq, -0.25) : 0.0;
  return phi;
}

std::pair<PhiValue, Eigen::MatrixXd> phi_and_recover_A(const CurvaturePack& pack,
                                                       const DistributionBasis& db,
                                                       const RoterSpec& spec) {
  if (db.degenerate || db.dim_D != 1) {
    throw std::invalid_argument("phi_and_recover_A: the Olszak distribution must be one-dimensional");
  }
  const int n = pack.dim();
  if (n != spec.n) throw std::invalid_argument("phi_and_recover_A: dimension mismatch");
  Eigen::VectorXd u = db.basis_D.front();
  const double gt = (pack.g * u)(0);
  if (std::abs(gt) < 1e-12) {
    throw std::domain_error("phi_and_recover_A: D is g-orthogonal to d_t");
  }
  u /= gt;
  Eigen::MatrixXd coset = Eigen::MatrixXd::Zero(n, n - 2);
  for (int a = 0; a < n - 2; ++a) coset(a + 2, a) = 1.0;
  const Eigen::MatrixXd P = orthonormal(columns(db.basis_Dperp, n));
  for (int a = 0; a < n - 2; ++a) {
    if (distance_from_span(coset.col(a), P) > 1e-9) {
      throw std::domain_error("phi_and_recover_A: v-coordinate directions leave D^perp");
    }
  }
  PhiValue phi = phi_matrix(pack.weyl, pack.g, u, coset);
  phi.point = pack.point;
  if (phi.matrix.cwiseAbs().maxCoeff() < 1e-12) {
    throw std::domain_error("phi_and_recover_A: Phi vanishes at the point");
  }
  Eigen::MatrixXd A = phi.gamma.inverse() * phi.matrix;
  return {std::move(phi), std::move(A)};
}

}  // namespace ecsw
