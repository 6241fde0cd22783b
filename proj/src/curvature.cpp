#include "ecsw/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ecsw {

namespace {

constexpr Slot kCo = Slot::Covariant;
constexpr Slot kContra = Slot::Contravariant;

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& g) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  if (!lu.isInvertible() || std::abs(g.determinant()) <= 1e-12) {
    throw std::domain_error("metric is singular at the requested point");
  }
  return lu.inverse();
}

void require_order(const MetricJet& jet, int order, const char* what) {
  if (jet.order < order) {
    throw std::invalid_argument(std::string(what) + ": metric jet of order " +
                                std::to_string(order) + " required");
  }
}

// Lowered Christoffel symbols C_lij = (d_i g_jl + d_j g_il - d_l g_ij) / 2 and
// their derivatives, written for a generic derivative prefix.
struct Derived {
  int n;
  Eigen::MatrixXd gi;
  Tensor C;      // (l,i,j)
  Tensor dC;     // (m,l,i,j)
  Tensor d2C;    // (p,m,l,i,j)
  Tensor dgi;    // (m,k,l) = d_m g^kl
  Tensor d2gi;   // (p,m,k,l)
};

Derived derive(const MetricJet& jet, int order) {
  const int n = jet.dim();
  Derived d{n, checked_inverse(jet.g), {}, {}, {}, {}, {}};
  d.C = Tensor(n, {kCo, kCo, kCo});
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d.C(l, i, j) = 0.5 * (jet.dg(i, j, l) + jet.dg(j, i, l) - jet.dg(l, i, j));
  d.dgi = Tensor(n, {kCo, kContra, kContra});
  for (int m = 0; m < n; ++m) {
    const Eigen::MatrixXd dgm = [&] {
      Eigen::MatrixXd out(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out(a, b) = jet.dg(m, a, b);
      return out;
    }();
    const Eigen::MatrixXd x = -d.gi * dgm * d.gi;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) d.dgi(m, k, l) = x(k, l);
  }
  if (order < 3) return d;
  d.dC = Tensor(n, {kCo, kCo, kCo, kCo});
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          d.dC(m, l, i, j) =
              0.5 * (jet.d2g(m, i, j, l) + jet.d2g(m, j, i, l) - jet.d2g(m, l, i, j));
  d.d2C = Tensor(n, {kCo, kCo, kCo, kCo, kCo});
  for (int p = 0; p < n; ++p)
    for (int m = 0; m < n; ++m)
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            d.d2C(p, m, l, i, j) = 0.5 * (jet.d3g(p, m, i, j, l) + jet.d3g(p, m, j, i, l) -
                                          jet.d3g(p, m, l, i, j));
  // d_p d_m g^kl = -(d_p g^ka d_m g_ab g^bl + g^ka d_p d_m g_ab g^bl + g^ka d_m g_ab d_p g^bl)
  d.d2gi = Tensor(n, {kCo, kCo, kContra, kContra});
  Eigen::MatrixXd dgm(n, n), dgp_inv(n, n), d2g_pm(n, n), dgm_inv(n, n);
  for (int p = 0; p < n; ++p) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dgp_inv(a, b) = d.dgi(p, a, b);
    for (int m = 0; m < n; ++m) {
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          dgm(a, b) = jet.dg(m, a, b);
          d2g_pm(a, b) = jet.d2g(p, m, a, b);
        }
      const Eigen::MatrixXd x =
          -(dgp_inv * dgm * d.gi + d.gi * d2g_pm * d.gi + d.gi * dgm * dgp_inv);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) d.d2gi(p, m, k, l) = x(k, l);
    }
  }
  return d;
}

Tensor christoffel_from(const Derived& d) {
  const int n = d.n;
  Tensor gam(n, {kContra, kCo, kCo});
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l) sum += d.gi(k, l) * d.C(l, i, j);
        gam(k, i, j) = gam(k, j, i) = sum;
      }
  return gam;
}

// d_m G^k_ij = d_m g^kl C_lij + g^kl d_m C_lij, with d_m C_lij from d2g.
Tensor dchristoffel_from(const MetricJet& jet, const Derived& d) {
  const int n = d.n;
  Tensor out(n, {kCo, kContra, kCo, kCo});
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double dc =
              0.5 * (jet.d2g(m, i, j, l) + jet.d2g(m, j, i, l) - jet.d2g(m, l, i, j));
          if (dc == 0.0 && d.C(l, i, j) == 0.0) continue;
          for (int k = 0; k < n; ++k) {
            out(m, k, i, j) += d.dgi(m, k, l) * d.C(l, i, j) + d.gi(k, l) * dc;
          }
        }
  return out;
}

Tensor d2christoffel_from(const Derived& d) {
  const int n = d.n;
  Tensor out(n, {kCo, kCo, kContra, kCo, kCo});
  for (int p = 0; p < n; ++p)
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double sum = 0.0;
            for (int l = 0; l < n; ++l) {
              sum += d.d2gi(p, m, k, l) * d.C(l, i, j) + d.dgi(m, k, l) * d.dC(p, l, i, j) +
                     d.dgi(p, k, l) * d.dC(m, l, i, j) + d.gi(k, l) * d.d2C(p, m, l, i, j);
            }
            out(p, m, k, i, j) = sum;
          }
  return out;
}

Tensor riemann13_from(const Tensor& gam, const Tensor& dgam) {
  const int n = gam.dim();
  Tensor R(n, {kCo, kCo, kCo, kContra});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = dgam(j, l, i, k) - dgam(i, l, j, k);
          for (int m = 0; m < n; ++m) v += gam(m, i, k) * gam(l, j, m) - gam(m, j, k) * gam(l, i, m);
          R(i, j, k, l) = v;
        }
  return R;
}

// d_p of riemann13.
Tensor d_riemann13_from(const Tensor& gam, const Tensor& dgam, const Tensor& d2gam) {
  const int n = gam.dim();
  Tensor dR(n, {kCo, kCo, kCo, kCo, kContra});
  for (int p = 0; p < n; ++p)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = d2gam(p, j, l, i, k) - d2gam(p, i, l, j, k);
            for (int m = 0; m < n; ++m) {
              v += dgam(p, m, i, k) * gam(l, j, m) + gam(m, i, k) * dgam(p, l, j, m) -
                   dgam(p, m, j, k) * gam(l, i, m) - gam(m, j, k) * dgam(p, l, i, m);
            }
            dR(p, i, j, k, l) = v;
          }
  return dR;
}

Tensor lower_last(const Tensor& R13, const Eigen::MatrixXd& g) {
  const int n = R13.dim();
  Tensor R(n, {kCo, kCo, kCo, kCo});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0.0;
          for (int a = 0; a < n; ++a) v += R13(i, j, k, a) * g(a, l);
          R(i, j, k, l) = v;
        }
  return R;
}

Tensor ricci_from(const Tensor& R13) {
  const int n = R13.dim();
  Tensor ric(n, {kCo, kCo});
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += R13(j, i, k, i);
      ric(j, k) = v;
    }
  return ric;
}

double trace_with(const Tensor& b, const Eigen::MatrixXd& gi) {
  double s = 0.0;
  for (int j = 0; j < b.dim(); ++j)
    for (int k = 0; k < b.dim(); ++k) s += gi(j, k) * b(j, k);
  return s;
}

Tensor slice(const Tensor& t, int first) {
  // Drops the leading slot by fixing it to `first`.
  std::vector<Slot> var(t.variance().begin() + 1, t.variance().end());
  Tensor out(t.dim(), var);
  const std::size_t block = out.size();
  std::copy_n(t.components().begin() + static_cast<std::ptrdiff_t>(block * first), block,
              out.components().begin());
  return out;
}

}  // namespace

Tensor christoffel(const MetricJet& jet) {
  require_order(jet, 1, "christoffel");
  return christoffel_from(derive(jet, 1));
}

std::pair<Tensor, Tensor> riemann(const MetricJet& jet) {
  require_order(jet, 2, "riemann");
  const Derived d = derive(jet, 2);
  const Tensor gam = christoffel_from(d);
  Tensor R13 = riemann13_from(gam, dchristoffel_from(jet, d));
  Tensor R04 = lower_last(R13, jet.g);
  return {std::move(R13), std::move(R04)};
}

RicciData ricci_scalar_schouten(const MetricJet& jet, const Tensor& riemann13) {
  const int n = jet.dim();
  RicciData out;
  out.ricci = ricci_from(riemann13);
  out.scalar = trace_with(out.ricci, checked_inverse(jet.g));
  out.schouten = out.ricci;
  const double c = out.scalar / (2.0 * n - 2.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) out.schouten(j, k) -= c * jet.g(j, k);
  return out;
}

Tensor kulkarni_nomizu(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim() != b.dim()) {
    throw std::invalid_argument("kulkarni_nomizu: expected two (0,2) tensors of equal dimension");
  }
  const int n = a.dim();
  Tensor out(n, {kCo, kCo, kCo, kCo});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out(i, j, k, l) = a(i, k) * b(j, l) + a(j, l) * b(i, k) - a(i, l) * b(j, k) -
                            a(j, k) * b(i, l);
  return out;
}

Tensor weyl(const MetricJet& jet, const CurvaturePack& pack) {
  const int n = jet.dim();
  if (n < 4) throw std::invalid_argument("weyl: dimension must be at least 4");
  Tensor w = pack.riemann04;
  w -= (1.0 / (n - 2)) *
       kulkarni_nomizu(Tensor::from_matrix(jet.g, kCo, kCo), pack.schouten);
  return w;
}

Tensor covariant_derivative(const Tensor& T, const Tensor& gam, const Tensor& dT) {
  const int n = T.dim();
  const int r = T.rank();
  if (dT.rank() != r + 1 || dT.dim() != n) {
    throw std::invalid_argument("covariant_derivative: derivative data has the wrong shape");
  }
  if (gam.rank() != 3 || gam.dim() != n) {
    throw std::invalid_argument("covariant_derivative: missing connection coefficients");
  }
  std::vector<Slot> var{kCo};
  var.insert(var.end(), T.variance().begin(), T.variance().end());
  Tensor out(n, var);
  std::vector<int> sub(static_cast<std::size_t>(r));
  for_each_index(n, r + 1, [&](std::span<const int> idx) {
    const int m = idx[0];
    double v = dT.at(idx);
    std::copy(idx.begin() + 1, idx.end(), sub.begin());
    for (int s = 0; s < r; ++s) {
      const int is = idx[static_cast<std::size_t>(s) + 1];
      double corr = 0.0;
      for (int a = 0; a < n; ++a) {
        sub[static_cast<std::size_t>(s)] = a;
        const double ta = T.at(sub);
        if (ta == 0.0) continue;
        corr += (T.variance()[static_cast<std::size_t>(s)] == kCo ? -gam(a, m, is)
                                                                   : gam(is, m, a)) *
                ta;
      }
      sub[static_cast<std::size_t>(s)] = is;
      v += corr;
    }
    out.at(idx) = v;
  });
  return out;
}

CurvaturePack compute_curvature(const MetricJet& jet) {
  const int n = jet.dim();
  if (n < 4) throw std::invalid_argument("curvature: dimension must be at least 4");
  require_order(jet, 2, "curvature");
  const bool full = jet.order >= 3;
  const Derived d = derive(jet, full ? 3 : 2);

  CurvaturePack pack;
  pack.point = jet.point;
  pack.g = jet.g;
  pack.g_inv = d.gi;
  pack.christoffel = christoffel_from(d);
  pack.dchristoffel = dchristoffel_from(jet, d);
  pack.riemann13 = riemann13_from(pack.christoffel, pack.dchristoffel);
  pack.riemann04 = lower_last(pack.riemann13, jet.g);
  RicciData rd = ricci_scalar_schouten(jet, pack.riemann13);
  pack.ricci = std::move(rd.ricci);
  pack.scalar = rd.scalar;
  pack.schouten = std::move(rd.schouten);
  pack.weyl = weyl(jet, pack);
  if (!full) return pack;

  pack.has_derivatives = true;
  pack.d2christoffel = d2christoffel_from(d);
  const Tensor dR13 = d_riemann13_from(pack.christoffel, pack.dchristoffel, pack.d2christoffel);

  // Coordinate derivatives of R04, ricci, scalar, schouten and W.
  Tensor dR04(n, {kCo, kCo, kCo, kCo, kCo});
  Tensor dric(n, {kCo, kCo, kCo});
  Tensor dW(n, {kCo, kCo, kCo, kCo, kCo});
  const Tensor g = pack.metric_tensor();
  for (int p = 0; p < n; ++p) {
    const Tensor dR13p = slice(dR13, p);
    Tensor dR04p = lower_last(dR13p, jet.g);
    Eigen::MatrixXd dgp(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dgp(a, b) = jet.dg(p, a, b);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = 0.0;
            for (int a = 0; a < n; ++a) v += pack.riemann13(i, j, k, a) * dgp(a, l);
            dR04p(i, j, k, l) += v;
          }
    const Tensor dricp = ricci_from(dR13p);
    double ds = trace_with(dricp, d.gi);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) ds += d.dgi(p, j, k) * pack.ricci(j, k);
    Tensor dsigma = dricp;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        dsigma(j, k) -= (ds * jet.g(j, k) + pack.scalar * dgp(j, k)) / (2.0 * n - 2.0);
    Tensor dWp = dR04p;
    dWp -= (1.0 / (n - 2)) * (kulkarni_nomizu(Tensor::from_matrix(dgp, kCo, kCo), pack.schouten) +
                               kulkarni_nomizu(g, dsigma));
    const std::size_t b4 = dR04p.size();
    std::copy_n(dR04p.components().begin(), b4,
                dR04.components().begin() + static_cast<std::ptrdiff_t>(b4 * p));
    std::copy_n(dWp.components().begin(), b4,
                dW.components().begin() + static_cast<std::ptrdiff_t>(b4 * p));
    const std::size_t b2 = dricp.size();
    std::copy_n(dricp.components().begin(), b2,
                dric.components().begin() + static_cast<std::ptrdiff_t>(b2 * p));
  }
  pack.nabla_riemann = covariant_derivative(pack.riemann04, pack.christoffel, dR04);
  pack.nabla_ricci = covariant_derivative(pack.ricci, pack.christoffel, dric);
  pack.nabla_weyl = covariant_derivative(pack.weyl, pack.christoffel, dW);
  return pack;
}

double relative(double residual_max_abs, double reference_max_abs) {
  return residual_max_abs / std::max(1.0, reference_max_abs);
}

double relative(const Tensor& residual, const Tensor& reference) {
  return relative(residual.max_abs(), reference.max_abs());
}

double riemann_pair_symmetry_residual(const Tensor& R) {
  const int n = R.dim();
  double worst = 0.0;
  for_each_index(n, 4, [&](std::span<const int> x) {
    const int i = x[0], j = x[1], k = x[2], l = x[3];
    const double r = R(i, j, k, l);
    worst = std::max({worst, std::abs(r + R(j, i, k, l)), std::abs(r + R(i, j, l, k)),
                      std::abs(r - R(k, l, i, j))});
  });
  return worst;
}

double first_bianchi_residual(const Tensor& R) {
  const int n = R.dim();
  double worst = 0.0;
  for_each_index(n, 4, [&](std::span<const int> x) {
    const int i = x[0], j = x[1], k = x[2], l = x[3];
    worst = std::max(worst, std::abs(R(i, j, k, l) + R(j, k, i, l) + R(k, i, j, l)));
  });
  return worst;
}

double trace_residual(const Tensor& T, const Eigen::MatrixXd& g_inv) {
  const Tensor gi = Tensor::from_matrix(g_inv, kContra, kContra);
  double worst = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) worst = std::max(worst, contract(T, a, b, &gi).max_abs());
  return worst;
}

double second_bianchi_residual(const Tensor& D) {
  const int n = D.dim();
  double worst = 0.0;
  for_each_index(n, 5, [&](std::span<const int> x) {
    const int m = x[0], i = x[1], j = x[2], k = x[3], l = x[4];
    worst = std::max(worst, std::abs(D(m, i, j, k, l) + D(i, j, m, k, l) + D(j, m, i, k, l)));
  });
  return worst;
}

double total_symmetry_residual(const Tensor& T) {
  const int n = T.dim();
  double worst = 0.0;
  for_each_index(n, 3, [&](std::span<const int> x) {
    const int a = x[0], b = x[1], c = x[2];
    const double t = T(a, b, c);
    worst = std::max({worst, std::abs(t - T(b, a, c)), std::abs(t - T(a, c, b))});
  });
  return worst;
}

}  // namespace ecsw
