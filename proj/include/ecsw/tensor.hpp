#pragma once

// Dense multilinear algebra on a fixed chart dimension.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ecsw {

/// Largest chart dimension accepted anywhere in the toolkit.
inline constexpr int kMaxDim = 12;

enum class Slot { Covariant, Contravariant };

/// Dense tensor over an n-dimensional chart. Components are stored row-major
/// by slot order, so the last slot varies fastest.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, std::vector<Slot> variance);
  Tensor(int dim, std::vector<Slot> variance, std::vector<double> components);

  static Tensor scalar(int dim, double value);
  static Tensor covariant(int dim, int rank);
  static Tensor identity(int dim);
  static Tensor from_matrix(const Eigen::MatrixXd& m, Slot first, Slot second);
  static Tensor from_vector(const Eigen::VectorXd& v, Slot slot);

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(variance_.size()); }
  const std::vector<Slot>& variance() const { return variance_; }
  std::span<const double> components() const { return components_; }
  std::span<double> components() { return components_; }
  std::size_t size() const { return components_.size(); }

  template <class... I>
  double& operator()(I... idx) {
    return components_[offset({static_cast<int>(idx)...})];
  }
  template <class... I>
  double operator()(I... idx) const {
    return components_[offset({static_cast<int>(idx)...})];
  }
  double& at(std::span<const int> idx) { return components_[offset(idx)]; }
  double at(std::span<const int> idx) const { return components_[offset(idx)]; }

  /// Value of a rank-0 tensor.
  double value() const;
  /// Rank-2 tensors only.
  Eigen::MatrixXd to_matrix() const;

  /// Largest absolute component (0 for an empty tensor).
  double max_abs() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double factor);

  std::size_t offset(std::span<const int> idx) const;
  std::size_t offset(std::initializer_list<int> idx) const {
    return offset(std::span<const int>(idx.begin(), idx.size()));
  }

 private:
  void check_compatible(const Tensor& other) const;

  int dim_ = 0;
  std::vector<Slot> variance_;
  std::vector<double> components_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double factor, Tensor a);

/// Calls fn(idx) for every multi-index of the given rank over dim values,
/// in row-major order.
template <class Fn>
void for_each_index(int dim, int rank, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  if (dim <= 0) return;
  while (true) {
    fn(std::span<const int>(idx));
    int pos = rank - 1;
    while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == dim) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

/// Sign of a permutation given as a sequence of distinct integers.
int permutation_sign(std::span<const int> perm);

/// Trace over slots a and b. When both slots share a variance, `metric`
/// must be a rank-2 tensor of the opposite variance (the inverse metric for
/// two covariant slots, the metric for two contravariant ones).
Tensor contract(const Tensor& t, int slot_a, int slot_b,
                const Tensor* metric = nullptr);

/// Alternation of an all-covariant tensor, normalized by 1/k!.
Tensor alternate(const Tensor& t);

Tensor tensor_product(const Tensor& a, const Tensor& b);

/// Lowers contravariant slot `slot` with the (0,2) metric g.
Tensor lower_index(const Tensor& t, int slot, const Tensor& g);
/// Raises covariant slot `slot` with the (2,0) inverse metric.
Tensor raise_index(const Tensor& t, int slot, const Tensor& g_inverse);

/// Max-abs difference between t and t with slots i and j transposed.
double symmetry_residual(const Tensor& t, int slot_i, int slot_j);
/// Max-abs of t + (t with slots i and j transposed).
double antisymmetry_residual(const Tensor& t, int slot_i, int slot_j);

/// Scalar s with zeta_1 ^ ... ^ zeta_m = s * Theta, where Theta is the
/// alternating (0,2m) orientation form. Both sides are evaluated on the
/// canonical basis tuple (e_1, ..., e_2m); wedge products use the
/// determinant normalization, so (e^1 ^ e^2)(e_1, e_2) = 1.
double wedge_power_coefficient(std::span<const Tensor> zetas,
                               const Tensor& orientation_form);

/// Same, with the orientation form given by its value Theta(e_1, ..., e_2m).
double wedge_power_coefficient(std::span<const Tensor> zetas,
                               double orientation_value);

/// (zeta_1 ^ ... ^ zeta_m)(e_1, ..., e_2m) for 2-forms given as
/// antisymmetric matrices.
double wedge_on_basis(std::span<const Eigen::MatrixXd> zetas);

struct ChartPoint {
  Eigen::VectorXd coords;

  ChartPoint() = default;
  explicit ChartPoint(Eigen::VectorXd c) : coords(std::move(c)) {}
  ChartPoint(std::initializer_list<double> c);

  int dim() const { return static_cast<int>(coords.size()); }
  double t() const { return coords(0); }
  double s() const { return coords(1); }
  /// The V-factor coordinates (v^1, ..., v^{n-2}).
  Eigen::VectorXd v() const { return coords.tail(coords.size() - 2); }
};

/// Nondegenerate symmetric bilinear form with its recorded signature.
class FibreMetric {
 public:
  /// Throws std::invalid_argument when the matrix is not symmetric or is
  /// degenerate (min |eigenvalue| <= 1e-12 * max |eigenvalue|).
  explicit FibreMetric(Eigen::MatrixXd matrix);
  static FibreMetric diagonal(std::initializer_list<double> entries);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  int negatives() const { return negatives_; }
  int positives() const { return positives_; }
  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(matrix_ * b);
  }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd inverse_;
  int negatives_ = 0;
  int positives_ = 0;
};

/// (negatives, positives) of a symmetric matrix; eigenvalues with
/// |lambda| <= tol * max|lambda| are not counted.
std::pair<int, int> signature(const Eigen::MatrixXd& symmetric, double tol = 1e-12);

}  // namespace ecsw
