#pragma once

// Metric component jets: the Roter family and oracle fixtures.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecsw/tensor.hpp"

namespace ecsw {

/// Closed-form scalar function of t with derivatives of any order.
class ScalarProfile {
 public:
  enum class Family { Polynomial, Sinusoid, Exponential };

  /// f(t) = sum_i coeffs[i] t^i
  static ScalarProfile polynomial(std::vector<double> coeffs);
  /// f(t) = amplitude * sin(frequency * t + phase)
  static ScalarProfile sinusoid(double amplitude, double frequency, double phase);
  /// f(t) = amplitude * exp(rate * t)
  static ScalarProfile exponential(double amplitude, double rate);

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

  double operator()(double t) const { return derivative(t, 0); }
  /// k-th derivative at t.
  double derivative(double t, int k) const;
  bool nonconstant() const;
  /// Smallest positive period, when the family advertises one.
  std::optional<double> period() const;

 private:
  ScalarProfile(Family family, std::vector<double> params)
      : family_(family), params_(std::move(params)) {}

  Family family_;
  std::vector<double> params_;
};

/// Construction data of the Roter metric
///   g = kappa dt^2 + dt ds + h,  kappa(t, s, v) = f(t) <v,v> + <Av, v>
/// on R^2 x V, in coordinates (t, s, v^1, ..., v^{n-2}).
struct RoterSpec {
  int n = 0;
  FibreMetric inner;
  Eigen::MatrixXd A;
  ScalarProfile f;

  RoterSpec(FibreMetric inner_product, Eigen::MatrixXd op, ScalarProfile profile);

  /// Throws SpecError naming the violated invariant.
  void validate() const;
  /// Matrix of the symmetric bilinear form <A., .>, i.e. A^T G.
  Eigen::MatrixXd lowered_A() const;
};

/// Metric components and coordinate partials up to `order` at a point.
/// dg(k,i,j) = d_k g_ij, d2g(k,l,i,j) = d_k d_l g_ij, d3g(k,l,m,i,j).
struct MetricJet {
  ChartPoint point;
  int order = 0;
  Eigen::MatrixXd g;
  Tensor dg;
  Tensor d2g;
  Tensor d3g;

  int dim() const { return static_cast<int>(g.rows()); }
};

class MetricProvider {
 public:
  virtual ~MetricProvider() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  /// Zeroth-order values.
  virtual Eigen::MatrixXd metric(const ChartPoint& p) const = 0;
  virtual MetricJet jet(const ChartPoint& p, int order = 3) const = 0;
};

MetricJet roter_jet(const RoterSpec& spec, const ChartPoint& p, int order = 3);
MetricJet const_curvature_jet(double K, int n, const ChartPoint& p, int order = 3);

class RoterMetric final : public MetricProvider {
 public:
  explicit RoterMetric(RoterSpec spec);
  int dim() const override { return spec_.n; }
  std::string name() const override { return "roter"; }
  Eigen::MatrixXd metric(const ChartPoint& p) const override;
  MetricJet jet(const ChartPoint& p, int order = 3) const override {
    return roter_jet(spec_, p, order);
  }
  const RoterSpec& spec() const { return spec_; }

 private:
  RoterSpec spec_;
};

/// g_ij = delta_ij / (1 + K|x|^2/4)^2, sectional curvature K.
class ConstCurvatureMetric final : public MetricProvider {
 public:
  ConstCurvatureMetric(double K, int n);
  int dim() const override { return n_; }
  std::string name() const override { return "const_curvature"; }
  Eigen::MatrixXd metric(const ChartPoint& p) const override;
  MetricJet jet(const ChartPoint& p, int order = 3) const override {
    return const_curvature_jet(K_, n_, p, order);
  }
  double K() const { return K_; }

 private:
  double K_;
  int n_;
};

/// Constant metric.
class FlatMetric final : public MetricProvider {
 public:
  explicit FlatMetric(FibreMetric g) : g_(std::move(g)) {}
  int dim() const override { return g_.dim(); }
  std::string name() const override { return "flat"; }
  Eigen::MatrixXd metric(const ChartPoint&) const override { return g_.matrix(); }
  MetricJet jet(const ChartPoint& p, int order = 3) const override;

 private:
  FibreMetric g_;
};

/// Real polynomial in n variables.
class Polynomial {
 public:
  struct Term {
    double coeff;
    std::vector<int> exponents;
  };

  explicit Polynomial(int vars) : vars_(vars) {}
  void add_term(double coeff, std::vector<int> exponents);
  int vars() const { return vars_; }
  /// Partial derivative d^|alpha| / dx^alpha, where `derivs` lists the
  /// differentiation variables (with repetition).
  double derivative(const Eigen::VectorXd& x, std::span<const int> derivs) const;
  double operator()(const Eigen::VectorXd& x) const { return derivative(x, {}); }

 private:
  int vars_;
  std::vector<Term> terms_;
};

/// Flat metric plus amplitude * (seeded symmetric polynomial matrix of
/// degree <= 3).
class RandomPerturbationMetric final : public MetricProvider {
 public:
  RandomPerturbationMetric(std::uint64_t seed, double amplitude, int n,
                           std::optional<FibreMetric> background = std::nullopt);
  int dim() const override { return n_; }
  std::string name() const override { return "random_perturbation"; }
  Eigen::MatrixXd metric(const ChartPoint& p) const override;
  MetricJet jet(const ChartPoint& p, int order = 3) const override;

 private:
  int n_;
  double amplitude_;
  Eigen::MatrixXd background_;
  std::vector<Polynomial> entries_;  // upper triangle, row-major
};

/// Jet at p of the seeded perturbation fixture; throws when the perturbed
/// metric is degenerate at p.
MetricJet random_perturbation_jet(std::uint64_t seed, double amplitude, int n,
                                  const ChartPoint& p, int order = 3);

/// Jet whose derivative blocks are 4th-order central finite differences of
/// the provider's zeroth-order values with spacing `step`.
MetricJet fd_jet_oracle(const MetricProvider& provider, const ChartPoint& p,
                        double step, int order = 3);

/// Per-block relative error max|a - b| / max(1, max|b|) between two jets,
/// indexed by derivative order (0..order).
std::vector<double> jet_relative_errors(const MetricJet& a, const MetricJet& b);

}  // namespace ecsw
