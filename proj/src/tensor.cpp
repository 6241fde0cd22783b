#include "ecsw/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ecsw {

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("tensor dimension must lie in [1, " +
                                std::to_string(kMaxDim) + "], got " +
                                std::to_string(dim));
  }
}

}  // namespace

Tensor::Tensor(int dim, std::vector<Slot> variance)
    : dim_(dim), variance_(std::move(variance)) {
  check_dim(dim);
  components_.assign(ipow(dim, rank()), 0.0);
}

Tensor::Tensor(int dim, std::vector<Slot> variance, std::vector<double> components)
    : dim_(dim), variance_(std::move(variance)), components_(std::move(components)) {
  check_dim(dim);
  if (components_.size() != ipow(dim, rank())) {
    throw std::invalid_argument("component count " + std::to_string(components_.size()) +
                                " does not equal dim^rank = " +
                                std::to_string(ipow(dim, rank())));
  }
}

Tensor Tensor::scalar(int dim, double value) { return Tensor(dim, {}, {value}); }

Tensor Tensor::covariant(int dim, int rank) {
  return Tensor(dim, std::vector<Slot>(static_cast<std::size_t>(rank), Slot::Covariant));
}

Tensor Tensor::identity(int dim) {
  Tensor t(dim, {Slot::Contravariant, Slot::Covariant});
  for (int i = 0; i < dim; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m, Slot first, Slot second) {
  if (m.rows() != m.cols()) throw std::invalid_argument("from_matrix: matrix not square");
  const int n = static_cast<int>(m.rows());
  Tensor t(n, {first, second});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = m(i, j);
  return t;
}

Tensor Tensor::from_vector(const Eigen::VectorXd& v, Slot slot) {
  const int n = static_cast<int>(v.size());
  Tensor t(n, {slot});
  for (int i = 0; i < n; ++i) t(i) = v(i);
  return t;
}

double Tensor::value() const {
  if (rank() != 0) throw std::logic_error("value() requires a rank-0 tensor");
  return components_[0];
}

Eigen::MatrixXd Tensor::to_matrix() const {
  if (rank() != 2) throw std::logic_error("to_matrix() requires a rank-2 tensor");
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double c : components_) m = std::max(m, std::abs(c));
  return m;
}

std::size_t Tensor::offset(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != rank()) {
    throw std::out_of_range("index arity " + std::to_string(idx.size()) +
                            " does not match rank " + std::to_string(rank()));
  }
  std::size_t off = 0;
  for (int i : idx) {
    if (i < 0 || i >= dim_) throw std::out_of_range("tensor index out of range");
    off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
  }
  return off;
}

void Tensor::check_compatible(const Tensor& other) const {
  if (dim_ != other.dim_ || variance_ != other.variance_) {
    throw std::invalid_argument("tensor shapes differ");
  }
}

Tensor& Tensor::operator+=(const Tensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < components_.size(); ++i) components_[i] += other.components_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < components_.size(); ++i) components_[i] -= other.components_[i];
  return *this;
}

Tensor& Tensor::operator*=(double factor) {
  for (double& c : components_) c *= factor;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double factor, Tensor a) { return a *= factor; }

int permutation_sign(std::span<const int> perm) {
  int inversions = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) ++inversions;
  return inversions % 2 == 0 ? 1 : -1;
}

Tensor contract(const Tensor& t, int slot_a, int slot_b, const Tensor* metric) {
  const int r = t.rank();
  if (slot_a < 0 || slot_a >= r || slot_b < 0 || slot_b >= r) {
    throw std::out_of_range("contract: slot out of range");
  }
  if (slot_a == slot_b) throw std::invalid_argument("contract: slots must differ");
  const Slot va = t.variance()[static_cast<std::size_t>(slot_a)];
  const Slot vb = t.variance()[static_cast<std::size_t>(slot_b)];
  const bool needs_metric = va == vb;
  if (needs_metric) {
    if (metric == nullptr) {
      throw std::invalid_argument("contract: slots share a variance; a metric is required");
    }
    const Slot expected = va == Slot::Covariant ? Slot::Contravariant : Slot::Covariant;
    if (metric->rank() != 2 || metric->dim() != t.dim() ||
        metric->variance()[0] != expected || metric->variance()[1] != expected) {
      throw std::invalid_argument("contract: metric has the wrong shape or variance");
    }
  }

  const int lo = std::min(slot_a, slot_b);
  const int hi = std::max(slot_a, slot_b);
  std::vector<Slot> out_var;
  for (int s = 0; s < r; ++s)
    if (s != lo && s != hi) out_var.push_back(t.variance()[static_cast<std::size_t>(s)]);
  Tensor out(t.dim(), out_var);

  const int n = t.dim();
  std::vector<int> full(static_cast<std::size_t>(r));
  for_each_index(n, r - 2, [&](std::span<const int> idx) {
    for (int s = 0, k = 0; s < r; ++s)
      if (s != lo && s != hi) full[static_cast<std::size_t>(s)] = idx[static_cast<std::size_t>(k++)];
    double sum = 0.0;
    if (!needs_metric) {
      for (int i = 0; i < n; ++i) {
        full[static_cast<std::size_t>(lo)] = i;
        full[static_cast<std::size_t>(hi)] = i;
        sum += t.at(full);
      }
    } else {
      for (int i = 0; i < n; ++i) {
        full[static_cast<std::size_t>(slot_a)] = i;
        for (int j = 0; j < n; ++j) {
          const double m = (*metric)(i, j);
          if (m == 0.0) continue;
          full[static_cast<std::size_t>(slot_b)] = j;
          sum += m * t.at(full);
        }
      }
    }
    out.at(idx) = sum;
  });
  return out;
}

Tensor alternate(const Tensor& t) {
  for (Slot s : t.variance()) {
    if (s != Slot::Covariant) throw std::invalid_argument("alternate: all slots must be covariant");
  }
  const int k = t.rank();
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::vector<std::pair<std::vector<int>, int>> perms;
  std::iota(perm.begin(), perm.end(), 0);
  do {
    perms.emplace_back(perm, permutation_sign(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double norm = 1.0 / static_cast<double>(perms.size());

  Tensor out(t.dim(), t.variance());
  std::vector<int> permuted(static_cast<std::size_t>(k));
  for_each_index(t.dim(), k, [&](std::span<const int> idx) {
    double sum = 0.0;
    for (const auto& [p, sign] : perms) {
      for (int s = 0; s < k; ++s)
        permuted[static_cast<std::size_t>(s)] = idx[static_cast<std::size_t>(p[static_cast<std::size_t>(s)])];
      sum += sign * t.at(permuted);
    }
    out.at(idx) = norm * sum;
  });
  return out;
}

Tensor tensor_product(const Tensor& a, const Tensor& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("tensor_product: dimensions differ");
  std::vector<Slot> var = a.variance();
  var.insert(var.end(), b.variance().begin(), b.variance().end());
  std::vector<double> comps;
  comps.reserve(a.size() * b.size());
  for (double x : a.components())
    for (double y : b.components()) comps.push_back(x * y);
  return Tensor(a.dim(), std::move(var), std::move(comps));
}

namespace {

Tensor move_index(const Tensor& t, int slot, const Tensor& m, Slot from, Slot to) {
  if (slot < 0 || slot >= t.rank()) throw std::out_of_range("index slot out of range");
  if (t.variance()[static_cast<std::size_t>(slot)] != from) {
    throw std::invalid_argument("index slot has the wrong variance");
  }
  if (m.rank() != 2 || m.dim() != t.dim() || m.variance()[0] != to || m.variance()[1] != to) {
    throw std::invalid_argument("metric has the wrong shape or variance");
  }
  std::vector<Slot> var = t.variance();
  var[static_cast<std::size_t>(slot)] = to;
  Tensor out(t.dim(), var);
  std::vector<int> src;
  const int n = t.dim();
  for_each_index(n, t.rank(), [&](std::span<const int> idx) {
    src.assign(idx.begin(), idx.end());
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      src[static_cast<std::size_t>(slot)] = a;
      sum += m(idx[static_cast<std::size_t>(slot)], a) * t.at(src);
    }
    out.at(idx) = sum;
  });
  return out;
}

}  // namespace

Tensor lower_index(const Tensor& t, int slot, const Tensor& g) {
  return move_index(t, slot, g, Slot::Contravariant, Slot::Covariant);
}

Tensor raise_index(const Tensor& t, int slot, const Tensor& g_inverse) {
  return move_index(t, slot, g_inverse, Slot::Covariant, Slot::Contravariant);
}

namespace {

double pair_residual(const Tensor& t, int i, int j, double sign) {
  if (i < 0 || j < 0 || i >= t.rank() || j >= t.rank()) {
    throw std::out_of_range("symmetry check: slot out of range");
  }
  double worst = 0.0;
  std::vector<int> swapped;
  for_each_index(t.dim(), t.rank(), [&](std::span<const int> idx) {
    swapped.assign(idx.begin(), idx.end());
    std::swap(swapped[static_cast<std::size_t>(i)], swapped[static_cast<std::size_t>(j)]);
    worst = std::max(worst, std::abs(t.at(idx) - sign * t.at(swapped)));
  });
  return worst;
}

}  // namespace

double symmetry_residual(const Tensor& t, int slot_i, int slot_j) {
  return pair_residual(t, slot_i, slot_j, 1.0);
}

double antisymmetry_residual(const Tensor& t, int slot_i, int slot_j) {
  return pair_residual(t, slot_i, slot_j, -1.0);
}

namespace {

// Sums over ordered assignments of disjoint pairs (a_j < b_j) to the forms.
// The sign of the permutation (a_1 b_1 a_2 b_2 ...) is accumulated by
// counting unused indices below each chosen one.
double wedge_recurse(std::span<const Eigen::MatrixXd> zetas, std::size_t level,
                     std::vector<bool>& used, int dim) {
  if (level == zetas.size()) return 1.0;
  const Eigen::MatrixXd& z = zetas[level];
  double total = 0.0;
  for (int a = 0; a < dim; ++a) {
    if (used[static_cast<std::size_t>(a)]) continue;
    int below_a = 0;
    for (int c = 0; c < a; ++c)
      if (!used[static_cast<std::size_t>(c)]) ++below_a;
    used[static_cast<std::size_t>(a)] = true;
    for (int b = a + 1; b < dim; ++b) {
      if (used[static_cast<std::size_t>(b)]) continue;
      const double zab = z(a, b);
      if (zab == 0.0) continue;
      int below_b = 0;
      for (int c = 0; c < b; ++c)
        if (!used[static_cast<std::size_t>(c)]) ++below_b;
      used[static_cast<std::size_t>(b)] = true;
      const double sign = ((below_a + below_b) % 2 == 0) ? 1.0 : -1.0;
      total += sign * zab * wedge_recurse(zetas, level + 1, used, dim);
      used[static_cast<std::size_t>(b)] = false;
    }
    used[static_cast<std::size_t>(a)] = false;
  }
  return total;
}

}  // namespace

double wedge_on_basis(std::span<const Eigen::MatrixXd> zetas) {
  if (zetas.empty()) return 1.0;
  const int dim = static_cast<int>(zetas.front().rows());
  if (dim != 2 * static_cast<int>(zetas.size())) {
    throw std::invalid_argument("wedge_on_basis: dimension must equal 2m");
  }
  std::vector<bool> used(static_cast<std::size_t>(dim), false);
  return wedge_recurse(zetas, 0, used, dim);
}

double wedge_power_coefficient(std::span<const Tensor> zetas, double orientation_value) {
  const std::size_t m = zetas.size();
  if (m == 0) throw std::invalid_argument("wedge_power_coefficient: empty form list");
  const int dim = zetas.front().dim();
  if (dim != 2 * static_cast<int>(m)) {
    throw std::invalid_argument("wedge_power_coefficient: ambient dimension " +
                                std::to_string(dim) + " is not 2m = " + std::to_string(2 * m));
  }
  if (orientation_value == 0.0) {
    throw std::invalid_argument("wedge_power_coefficient: zero orientation form");
  }
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(m);
  for (const Tensor& z : zetas) {
    if (z.dim() != dim || z.rank() != 2 || z.variance()[0] != Slot::Covariant ||
        z.variance()[1] != Slot::Covariant) {
      throw std::invalid_argument("wedge_power_coefficient: expected (0,2) tensors");
    }
    if (antisymmetry_residual(z, 0, 1) > 1e-10 * std::max(1.0, z.max_abs())) {
      throw std::invalid_argument("wedge_power_coefficient: form is not alternating");
    }
    mats.push_back(z.to_matrix());
  }
  return wedge_on_basis(mats) / orientation_value;
}

double wedge_power_coefficient(std::span<const Tensor> zetas, const Tensor& orientation_form) {
  const int r = orientation_form.rank();
  if (r != 2 * static_cast<int>(zetas.size()) || orientation_form.dim() != r) {
    throw std::invalid_argument("wedge_power_coefficient: orientation form must be a top form");
  }
  std::vector<int> basis(static_cast<std::size_t>(r));
  std::iota(basis.begin(), basis.end(), 0);
  return wedge_power_coefficient(zetas, orientation_form.at(basis));
}

ChartPoint::ChartPoint(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
  Eigen::Index i = 0;
  for (double x : c) coords(i++) = x;
}

std::pair<int, int> signature(const Eigen::MatrixXd& symmetric, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  int neg = 0, pos = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol * scale) ++neg;
    if (ev(i) > tol * scale) ++pos;
  }
  return {neg, pos};
}

FibreMetric::FibreMetric(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw std::invalid_argument("fibre metric must be a nonempty square matrix");
  }
  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) {
    throw std::invalid_argument("fibre metric is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd abs_ev = es.eigenvalues().cwiseAbs();
  if (abs_ev.minCoeff() <= 1e-12 * abs_ev.maxCoeff()) {
    throw std::invalid_argument("fibre metric is degenerate");
  }
  std::tie(negatives_, positives_) = signature(matrix_);
  inverse_ = matrix_.inverse();
}

FibreMetric FibreMetric::diagonal(std::initializer_list<double> entries) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double e : entries) d(i++) = e;
  return FibreMetric(d.asDiagonal().toDenseMatrix());
}

}  // namespace ecsw
