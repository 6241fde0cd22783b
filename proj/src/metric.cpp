#include "ecsw/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ecsw/errors.hpp"
#include "ecsw/rng.hpp"

namespace ecsw {

// ---------------------------------------------------------------------------
// ScalarProfile

ScalarProfile ScalarProfile::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  return ScalarProfile(Family::Polynomial, std::move(coeffs));
}

ScalarProfile ScalarProfile::sinusoid(double amplitude, double frequency, double phase) {
  return ScalarProfile(Family::Sinusoid, {amplitude, frequency, phase});
}

ScalarProfile ScalarProfile::exponential(double amplitude, double rate) {
  return ScalarProfile(Family::Exponential, {amplitude, rate});
}

double ScalarProfile::derivative(double t, int k) const {
  if (k < 0) throw std::invalid_argument("derivative order must be nonnegative");
  switch (family_) {
    case Family::Polynomial: {
      double sum = 0.0;
      for (std::size_t i = params_.size(); i-- > static_cast<std::size_t>(k);) {
        double falling = 1.0;
        for (int j = 0; j < k; ++j) falling *= static_cast<double>(i) - j;
        sum = sum * t + params_[i] * falling;
      }
      return sum;
    }
    case Family::Sinusoid: {
      const double a = params_[0], w = params_[1], phi = params_[2];
      const double arg = w * t + phi;
      const double scale = a * std::pow(w, k);
      switch (k % 4) {
        case 0: return scale * std::sin(arg);
        case 1: return scale * std::cos(arg);
        case 2: return -scale * std::sin(arg);
        default: return -scale * std::cos(arg);
      }
    }
    case Family::Exponential: {
      const double a = params_[0], r = params_[1];
      return a * std::pow(r, k) * std::exp(r * t);
    }
  }
  return 0.0;
}

bool ScalarProfile::nonconstant() const {
  switch (family_) {
    case Family::Polynomial:
      return std::any_of(params_.begin() + 1, params_.end(), [](double c) { return c != 0.0; });
    case Family::Sinusoid:
      return params_[0] != 0.0 && params_[1] != 0.0;
    case Family::Exponential:
      return params_[0] != 0.0 && params_[1] != 0.0;
  }
  return false;
}

std::optional<double> ScalarProfile::period() const {
  if (family_ == Family::Sinusoid && params_[1] != 0.0 && params_[0] != 0.0) {
    return 2.0 * std::numbers::pi / std::abs(params_[1]);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// RoterSpec

RoterSpec::RoterSpec(FibreMetric inner_product, Eigen::MatrixXd op, ScalarProfile profile)
    : n(inner_product.dim() + 2), inner(std::move(inner_product)), A(std::move(op)),
      f(std::move(profile)) {
  validate();
}

Eigen::MatrixXd RoterSpec::lowered_A() const {
  const Eigen::MatrixXd q = A.transpose() * inner.matrix();
  return 0.5 * (q + q.transpose());
}

void RoterSpec::validate() const {
  const int k = inner.dim();
  if (n != k + 2 || n < 4) {
    throw SpecError("RoterSpec: n must be at least 4 and equal dim(V) + 2 (got n = " +
                    std::to_string(n) + ", dim V = " + std::to_string(k) + ")");
  }
  if (n > kMaxDim) throw SpecError("RoterSpec: n exceeds the supported maximum");
  if (A.rows() != k || A.cols() != k) {
    throw SpecError("RoterSpec: A must be a (n-2)x(n-2) matrix");
  }
  const Eigen::MatrixXd q = A.transpose() * inner.matrix();
  const double skew = (q - q.transpose()).cwiseAbs().maxCoeff();
  if (skew >= 1e-12) {
    std::ostringstream os;
    os << "RoterSpec: A is not self-adjoint relative to the inner product (residual " << skew
       << ")";
    throw SpecError(os.str());
  }
  const double tr = A.trace();
  if (std::abs(tr) >= 1e-12) {
    std::ostringstream os;
    os << "RoterSpec: A must be traceless (trace = " << tr << ")";
    throw SpecError(os.str());
  }
  if (A.cwiseAbs().maxCoeff() == 0.0) throw SpecError("RoterSpec: A must be nonzero");
  if (!f.nonconstant()) throw SpecError("RoterSpec: profile f must be nonconstant");
}

// ---------------------------------------------------------------------------
// Jets

namespace {

MetricJet empty_jet(const ChartPoint& p, int n, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("jet order must lie in [0, 3]");
  MetricJet jet;
  jet.point = p;
  jet.order = order;
  jet.g = Eigen::MatrixXd::Zero(n, n);
  if (order >= 1) jet.dg = Tensor::covariant(n, 3);
  if (order >= 2) jet.d2g = Tensor::covariant(n, 4);
  if (order >= 3) jet.d3g = Tensor::covariant(n, 5);
  return jet;
}

// d^{derivs} kappa for the Roter metric.
double kappa_partial(const RoterSpec& spec, const Eigen::MatrixXd& q, const Eigen::VectorXd& v,
                     double t, std::span<const int> derivs) {
  int t_order = 0;
  int vs[2] = {0, 0};
  int nv = 0;
  for (int d : derivs) {
    if (d == 1) return 0.0;
    if (d == 0) {
      ++t_order;
    } else {
      if (nv == 2) return 0.0;
      vs[nv++] = d - 2;
    }
  }
  const double fk = spec.f.derivative(t, t_order);
  const bool pure = t_order == 0;
  const Eigen::MatrixXd& G = spec.inner.matrix();
  switch (nv) {
    case 0: return fk * v.dot(G * v) + (pure ? v.dot(q * v) : 0.0);
    case 1: return 2.0 * fk * G.row(vs[0]).dot(v) + (pure ? 2.0 * q.row(vs[0]).dot(v) : 0.0);
    default: return 2.0 * fk * G(vs[0], vs[1]) + (pure ? 2.0 * q(vs[0], vs[1]) : 0.0);
  }
}

}  // namespace

MetricJet roter_jet(const RoterSpec& spec, const ChartPoint& p, int order) {
  const int n = spec.n;
  if (p.dim() != n) {
    throw std::invalid_argument("roter_jet: point has dimension " + std::to_string(p.dim()) +
                                ", spec has n = " + std::to_string(n));
  }
  MetricJet jet = empty_jet(p, n, order);
  const Eigen::MatrixXd q = spec.lowered_A();
  const Eigen::VectorXd v = p.v();
  const double t = p.t();

  jet.g(0, 1) = jet.g(1, 0) = 0.5;
  jet.g.bottomRightCorner(n - 2, n - 2) = spec.inner.matrix();
  jet.g(0, 0) = kappa_partial(spec, q, v, t, {});
  for (int k = 0; k < n && order >= 1; ++k) {
    const int d1[] = {k};
    jet.dg(k, 0, 0) = kappa_partial(spec, q, v, t, d1);
    for (int l = 0; l < n && order >= 2; ++l) {
      const int d2[] = {k, l};
      jet.d2g(k, l, 0, 0) = kappa_partial(spec, q, v, t, d2);
      for (int m = 0; m < n && order >= 3; ++m) {
        const int d3[] = {k, l, m};
        jet.d3g(k, l, m, 0, 0) = kappa_partial(spec, q, v, t, d3);
      }
    }
  }
  return jet;
}

RoterMetric::RoterMetric(RoterSpec spec) : spec_(std::move(spec)) {}

Eigen::MatrixXd RoterMetric::metric(const ChartPoint& p) const { return roter_jet(spec_, p, 0).g; }

MetricJet const_curvature_jet(double K, int n, const ChartPoint& p, int order) {
  if (p.dim() != n) throw std::invalid_argument("const_curvature_jet: dimension mismatch");
  const Eigen::VectorXd& x = p.coords;
  const double q = 1.0 + 0.25 * K * x.squaredNorm();
  if (q <= 1e-6) throw std::domain_error("const_curvature_jet: conformal factor near zero");
  MetricJet jet = empty_jet(p, n, order);
  // phi = q^-2 with q_k = K x_k / 2, q_kl = K delta_kl / 2, q_klm = 0.
  auto qk = [&](int k) { return 0.5 * K * x(k); };
  auto qkl = [&](int k, int l) { return k == l ? 0.5 * K : 0.0; };
  const double phi = 1.0 / (q * q);
  const double q3 = phi / q, q4 = q3 / q, q5 = q4 / q;
  for (int i = 0; i < n; ++i) jet.g(i, i) = phi;
  for (int k = 0; k < n && order >= 1; ++k) {
    const double d1 = -2.0 * q3 * qk(k);
    for (int i = 0; i < n; ++i) jet.dg(k, i, i) = d1;
    for (int l = 0; l < n && order >= 2; ++l) {
      const double d2 = 6.0 * q4 * qk(k) * qk(l) - 2.0 * q3 * qkl(k, l);
      for (int i = 0; i < n; ++i) jet.d2g(k, l, i, i) = d2;
      for (int m = 0; m < n && order >= 3; ++m) {
        const double d3 = -24.0 * q5 * qk(k) * qk(l) * qk(m) +
                          6.0 * q4 * (qkl(k, m) * qk(l) + qk(k) * qkl(l, m) + qkl(k, l) * qk(m));
        for (int i = 0; i < n; ++i) jet.d3g(k, l, m, i, i) = d3;
      }
    }
  }
  return jet;
}

ConstCurvatureMetric::ConstCurvatureMetric(double K, int n) : K_(K), n_(n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("ConstCurvatureMetric: bad dimension");
}

Eigen::MatrixXd ConstCurvatureMetric::metric(const ChartPoint& p) const {
  return const_curvature_jet(K_, n_, p, 0).g;
}

MetricJet FlatMetric::jet(const ChartPoint& p, int order) const {
  if (p.dim() != dim()) throw std::invalid_argument("FlatMetric: dimension mismatch");
  MetricJet jet = empty_jet(p, dim(), order);
  jet.g = g_.matrix();
  return jet;
}

// ---------------------------------------------------------------------------
// Polynomial perturbation fixture

void Polynomial::add_term(double coeff, std::vector<int> exponents) {
  if (static_cast<int>(exponents.size()) != vars_) {
    throw std::invalid_argument("Polynomial: exponent vector has the wrong length");
  }
  terms_.push_back({coeff, std::move(exponents)});
}

double Polynomial::derivative(const Eigen::VectorXd& x, std::span<const int> derivs) const {
  double sum = 0.0;
  std::vector<int> e;
  for (const Term& term : terms_) {
    e = term.exponents;
    double c = term.coeff;
    for (int d : derivs) {
      c *= e[static_cast<std::size_t>(d)];
      --e[static_cast<std::size_t>(d)];
      if (c == 0.0) break;
    }
    if (c == 0.0) continue;
    for (int i = 0; i < vars_; ++i) {
      for (int j = 0; j < e[static_cast<std::size_t>(i)]; ++j) c *= x(i);
    }
    sum += c;
  }
  return sum;
}

RandomPerturbationMetric::RandomPerturbationMetric(std::uint64_t seed, double amplitude, int n,
                                                   std::optional<FibreMetric> background)
    : n_(n), amplitude_(amplitude) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("RandomPerturbationMetric: bad dimension");
  background_ = background ? background->matrix() : Eigen::MatrixXd::Identity(n, n);
  if (background_.rows() != n) {
    throw std::invalid_argument("RandomPerturbationMetric: background dimension mismatch");
  }
  // All monomials of total degree <= 3, in a fixed enumeration order.
  std::vector<std::vector<int>> monomials;
  std::vector<int> e(static_cast<std::size_t>(n), 0);
  monomials.push_back(e);
  for (int a = 0; a < n; ++a) {
    std::vector<int> ea = e;
    ++ea[static_cast<std::size_t>(a)];
    monomials.push_back(ea);
    for (int b = a; b < n; ++b) {
      std::vector<int> eb = ea;
      ++eb[static_cast<std::size_t>(b)];
      monomials.push_back(eb);
      for (int c = b; c < n; ++c) {
        std::vector<int> ec = eb;
        ++ec[static_cast<std::size_t>(c)];
        monomials.push_back(ec);
      }
    }
  }
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Polynomial poly(n);
      for (const auto& mono : monomials) poly.add_term(rng.uniform(-1.0, 1.0), mono);
      entries_.push_back(std::move(poly));
    }
  }
}

MetricJet RandomPerturbationMetric::jet(const ChartPoint& p, int order) const {
  if (p.dim() != n_) throw std::invalid_argument("RandomPerturbationMetric: dimension mismatch");
  MetricJet jet = empty_jet(p, n_, order);
  const Eigen::VectorXd& x = p.coords;
  std::size_t e = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j, ++e) {
      const Polynomial& poly = entries_[e];
      const double gij = background_(i, j) + amplitude_ * poly(x);
      jet.g(i, j) = jet.g(j, i) = gij;
      for (int k = 0; k < n_ && order >= 1; ++k) {
        const int d1[] = {k};
        jet.dg(k, i, j) = jet.dg(k, j, i) = amplitude_ * poly.derivative(x, d1);
        for (int l = 0; l < n_ && order >= 2; ++l) {
          const int d2[] = {k, l};
          jet.d2g(k, l, i, j) = jet.d2g(k, l, j, i) = amplitude_ * poly.derivative(x, d2);
          for (int m = 0; m < n_ && order >= 3; ++m) {
            const int d3[] = {k, l, m};
            jet.d3g(k, l, m, i, j) = jet.d3g(k, l, m, j, i) = amplitude_ * poly.derivative(x, d3);
          }
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jet.g, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd abs_ev = es.eigenvalues().cwiseAbs();
  if (abs_ev.minCoeff() <= 1e-12 * abs_ev.maxCoeff() || std::abs(jet.g.determinant()) <= 1e-12) {
    throw std::domain_error("random perturbation: metric is degenerate at the requested point");
  }
  return jet;
}

Eigen::MatrixXd RandomPerturbationMetric::metric(const ChartPoint& p) const {
  return jet(p, 0).g;
}

MetricJet random_perturbation_jet(std::uint64_t seed, double amplitude, int n, const ChartPoint& p,
                                  int order) {
  return RandomPerturbationMetric(seed, amplitude, n).jet(p, order);
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

// Fourth-order accurate central stencils for derivative orders 1..3.
const Stencil& stencil(int order) {
  static const Stencil d1{{-2, -1, 1, 2}, {1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12}};
  static const Stencil d2{{-2, -1, 0, 1, 2}, {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12}};
  static const Stencil d3{{-3, -2, -1, 1, 2, 3}, {1.0 / 8, -1.0, 13.0 / 8, -13.0 / 8, 1.0, -1.0 / 8}};
  switch (order) {
    case 1: return d1;
    case 2: return d2;
    default: return d3;
  }
}

// Tensor-product stencil over the distinct variables in `derivs`.
Eigen::MatrixXd fd_partial(const MetricProvider& provider, const ChartPoint& p,
                           std::span<const int> derivs, double h) {
  std::vector<std::pair<int, int>> vars;  // (variable, multiplicity)
  for (int d : derivs) {
    auto it = std::find_if(vars.begin(), vars.end(), [d](const auto& v) { return v.first == d; });
    if (it == vars.end()) vars.emplace_back(d, 1); else ++it->second;
  }
  const int n = provider.dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  ChartPoint q = p;
  auto recurse = [&](auto&& self, std::size_t level, double weight) -> void {
    if (level == vars.size()) {
      acc += weight * provider.metric(q);
      return;
    }
    const auto [var, mult] = vars[level];
    const Stencil& st = stencil(mult);
    const double base = p.coords(var);
    for (std::size_t s = 0; s < st.offsets.size(); ++s) {
      q.coords(var) = base + st.offsets[s] * h;
      self(self, level + 1, weight * st.weights[s]);
    }
    q.coords(var) = base;
  };
  recurse(recurse, 0, 1.0);
  return acc / std::pow(h, static_cast<double>(derivs.size()));
}

}  // namespace

MetricJet fd_jet_oracle(const MetricProvider& provider, const ChartPoint& p, double step, int order) {
  if (!(step >= 1e-5 && step <= 1e-2)) {
    throw std::invalid_argument("fd_jet_oracle: step must lie in [1e-5, 1e-2]");
  }
  const int n = provider.dim();
  MetricJet jet = empty_jet(p, n, order);
  jet.g = provider.metric(p);
  auto store = [&](Tensor& block, std::span<const int> derivs, const Eigen::MatrixXd& m) {
    std::vector<int> perm(derivs.begin(), derivs.end());
    std::sort(perm.begin(), perm.end());
    std::vector<int> idx(perm.size() + 2);
    do {
      std::copy(perm.begin(), perm.end(), idx.begin());
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          idx[perm.size()] = i;
          idx[perm.size() + 1] = j;
          block.at(idx) = 0.5 * (m(i, j) + m(j, i));
        }
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  };
  for (int k = 0; k < n && order >= 1; ++k) {
    const int d1[] = {k};
    store(jet.dg, d1, fd_partial(provider, p, d1, step));
    for (int l = k; l < n && order >= 2; ++l) {
      const int d2[] = {k, l};
      store(jet.d2g, d2, fd_partial(provider, p, d2, step));
      for (int m = l; m < n && order >= 3; ++m) {
        const int d3[] = {k, l, m};
        store(jet.d3g, d3, fd_partial(provider, p, d3, step));
      }
    }
  }
  return jet;
}

std::vector<double> jet_relative_errors(const MetricJet& a, const MetricJet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("jet_relative_errors: dimension mismatch");
  const int order = std::min(a.order, b.order);
  std::vector<double> out;
  out.push_back((a.g - b.g).cwiseAbs().maxCoeff() / std::max(1.0, b.g.cwiseAbs().maxCoeff()));
  const Tensor* blocks_a[] = {&a.dg, &a.d2g, &a.d3g};
  const Tensor* blocks_b[] = {&b.dg, &b.d2g, &b.d3g};
  for (int k = 0; k < order; ++k) {
    out.push_back((*blocks_a[k] - *blocks_b[k]).max_abs() / std::max(1.0, blocks_b[k]->max_abs()));
  }
  return out;
}

}  // namespace ecsw
