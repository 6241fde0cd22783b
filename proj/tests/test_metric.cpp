#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ecsw/errors.hpp"
#include "ecsw/metric.hpp"
#include "fixtures.hpp"

using ecsw::ChartPoint;
using ecsw::Rng;

TEST(ScalarProfile, ClosedFormDerivatives) {
  const auto p = ecsw::ScalarProfile::polynomial({1.0, -2.0, 0.5, 3.0});
  const double t = 0.7;
  EXPECT_DOUBLE_EQ(p(t), 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t);
  EXPECT_DOUBLE_EQ(p.derivative(t, 1), -2.0 + t + 9.0 * t * t);
  EXPECT_DOUBLE_EQ(p.derivative(t, 2), 1.0 + 18.0 * t);
  EXPECT_DOUBLE_EQ(p.derivative(t, 3), 18.0);
  EXPECT_DOUBLE_EQ(p.derivative(t, 4), 0.0);
  EXPECT_FALSE(p.period().has_value());

  const auto s = ecsw::ScalarProfile::sinusoid(2.0, 3.0, 0.4);
  EXPECT_NEAR(s(t), 2.0 * std::sin(3.0 * t + 0.4), 1e-15);
  EXPECT_NEAR(s.derivative(t, 1), 6.0 * std::cos(3.0 * t + 0.4), 1e-14);
  EXPECT_NEAR(s.derivative(t, 2), -18.0 * std::sin(3.0 * t + 0.4), 1e-13);
  EXPECT_NEAR(s.derivative(t, 3), -54.0 * std::cos(3.0 * t + 0.4), 1e-13);
  ASSERT_TRUE(s.period().has_value());
  EXPECT_NEAR(*s.period(), 2.0 * std::numbers::pi / 3.0, 1e-15);

  const auto e = ecsw::ScalarProfile::exponential(0.5, -1.5);
  EXPECT_NEAR(e.derivative(t, 2), 0.5 * 2.25 * std::exp(-1.5 * t), 1e-15);
  EXPECT_THROW(e.derivative(t, -1), std::invalid_argument);
}

TEST(ScalarProfile, DerivativesAgreeWithDifferences) {
  const std::vector<ecsw::ScalarProfile> profiles{fixture::sine(), fixture::cubic(),
                                                  ecsw::ScalarProfile::exponential(1.0, 0.3)};
  const double h = 1e-4;
  Rng rng(6);
  for (const auto& f : profiles)
    for (int i = 0; i < 20; ++i) {
      const double t = rng.uniform(-3, 3);
      for (int k = 0; k < 3; ++k) {
        const double fd = (f.derivative(t + h, k) - f.derivative(t - h, k)) / (2 * h);
        EXPECT_NEAR(f.derivative(t, k + 1), fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
}

TEST(RoterSpec, Validation) {
  const auto I2 = ecsw::FibreMetric::diagonal({1, 1});
  EXPECT_THROW(ecsw::RoterSpec(I2, Eigen::MatrixXd(Eigen::Vector2d(1, 1).asDiagonal()), fixture::sine()),
               ecsw::SpecError);
  Eigen::MatrixXd nonsym(2, 2);
  nonsym << 1, 1, 0, -1;
  EXPECT_THROW(ecsw::RoterSpec(I2, nonsym, fixture::sine()), ecsw::SpecError);
  EXPECT_THROW(ecsw::RoterSpec(I2, Eigen::MatrixXd::Zero(2, 2), fixture::sine()), ecsw::SpecError);
  EXPECT_THROW(ecsw::RoterSpec(I2, Eigen::MatrixXd(Eigen::Vector2d(1, -1).asDiagonal()),
                               ecsw::ScalarProfile::polynomial({2.0})),
               ecsw::SpecError);
  EXPECT_THROW(ecsw::RoterSpec(ecsw::FibreMetric::diagonal({1}), Eigen::MatrixXd::Ones(1, 1), fixture::sine()),
               ecsw::SpecError);
  EXPECT_THROW(ecsw::RoterSpec(I2, Eigen::MatrixXd::Identity(3, 3), fixture::sine()), ecsw::SpecError);
  EXPECT_NO_THROW(fixture::n6());
}

TEST(RoterMetric, ComponentsAtKnownPoint) {
  const auto spec = fixture::n4();
  const auto jet = ecsw::roter_jet(spec, ChartPoint{0, 0, 1, 0});
  EXPECT_DOUBLE_EQ(jet.g(0, 0), 1.0);  // f(0) |v|^2 + <Av, v> = 0 + 1
  EXPECT_DOUBLE_EQ(jet.g(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(jet.g(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(jet.g(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(jet.dg(0, 0, 0), 1.0);  // f'(0) |v|^2
  EXPECT_DOUBLE_EQ(jet.dg(2, 0, 0), 2.0);  // 2 (f + 1) v^1
}

TEST(RoterMetric, DeterminantAndSignature) {
  Rng rng(31);
  for (const auto& spec : fixture::all_specs()) {
    const ecsw::RoterMetric m(spec);
    for (int i = 0; i < 20; ++i) {
      const auto p = fixture::random_point(rng, spec.n);
      const Eigen::MatrixXd g = m.metric(p);
      EXPECT_NEAR(g.determinant(), -0.25 * spec.inner.matrix().determinant(), 1e-10);
      const auto sig = ecsw::signature(g);
      EXPECT_EQ(sig.first, spec.inner.negatives() + 1);
      EXPECT_EQ(sig.second, spec.inner.positives() + 1);
    }
  }
}

TEST(RoterMetric, IndependentOfS) {
  Rng rng(32);
  const auto spec = fixture::n5();
  for (int i = 0; i < 20; ++i) {
    const auto jet = ecsw::roter_jet(spec, fixture::random_point(rng, 5));
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) {
        EXPECT_EQ(jet.dg(1, a, b), 0.0);
        for (int c = 0; c < 5; ++c) EXPECT_EQ(jet.d2g(1, c, a, b), 0.0);
      }
  }
}

TEST(Jets, AgreeWithFiniteDifferences) {
  Rng rng(40);
  for (const auto& spec : fixture::all_specs()) {
    const ecsw::RoterMetric m(spec);
    for (int i = 0; i < 50; ++i) {
      const auto p = fixture::random_point(rng, spec.n);
      const auto errs = ecsw::jet_relative_errors(m.jet(p), ecsw::fd_jet_oracle(m, p, 5e-3));
      for (double e : errs) EXPECT_LT(e, 1e-6);
    }
  }
}

TEST(Jets, FirstDerivativesAgreeWithCentralDifferences) {
  // Plain second-order differences, no shared code with the library oracle.
  Rng rng(41);
  const ecsw::RoterMetric m(fixture::n6());
  const double h = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const auto p = fixture::random_point(rng, 6);
    const auto jet = m.jet(p, 1);
    for (int k = 0; k < 6; ++k) {
      Eigen::VectorXd xp = p.coords, xm = p.coords;
      xp(k) += h;
      xm(k) -= h;
      const Eigen::MatrixXd d = (m.metric(ChartPoint(xp)) - m.metric(ChartPoint(xm))) / (2 * h);
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) EXPECT_NEAR(jet.dg(k, a, b), d(a, b), 1e-7);
    }
  }
}

TEST(Jets, SinusoidFarFromOrigin) {
  const ecsw::RoterMetric m(fixture::n4());
  const ChartPoint p{1e3, 0.5, 0.3, -0.4};
  for (double e : ecsw::jet_relative_errors(m.jet(p), ecsw::fd_jet_oracle(m, p, 5e-3))) EXPECT_LT(e, 1e-5);
}

TEST(Jets, FixtureProvidersAgreeWithFiniteDifferences) {
  Rng rng(42);
  for (int n = 4; n <= 6; ++n) {
    const ecsw::ConstCurvatureMetric sphere(1.0, n), hyper(-0.5, n);
    const ecsw::RandomPerturbationMetric pert(7, 0.1, n);
    for (int i = 0; i < 20; ++i) {
      const ChartPoint p(rng.uniform_vector(n, -0.5, 0.5));
      for (const ecsw::MetricProvider* m :
           std::initializer_list<const ecsw::MetricProvider*>{&sphere, &hyper, &pert})
        for (double e : ecsw::jet_relative_errors(m->jet(p), ecsw::fd_jet_oracle(*m, p, 5e-3)))
          EXPECT_LT(e, 1e-6) << m->name();
    }
  }
}

TEST(ConstCurvature, ConformalFactor) {
  const ecsw::ConstCurvatureMetric m(1.0, 4);
  EXPECT_TRUE(m.metric(ChartPoint{0, 0, 0, 0}).isApprox(Eigen::MatrixXd::Identity(4, 4)));
  const ChartPoint p{0.3, 0.1, 0.2, 0.0};
  const double q = 1.0 + 0.25 * (0.09 + 0.01 + 0.04);
  EXPECT_NEAR(m.metric(p)(2, 2), 1.0 / (q * q), 1e-15);
  EXPECT_NEAR(m.metric(p)(0, 1), 0.0, 1e-15);
  const ecsw::ConstCurvatureMetric flat(0.0, 5);
  EXPECT_TRUE(flat.metric(ChartPoint(Eigen::VectorXd::Constant(5, 3.0))).isApprox(Eigen::MatrixXd::Identity(5, 5)));
  EXPECT_THROW(ecsw::const_curvature_jet(-1.0, 4, ChartPoint{2, 0, 0, 0}), std::domain_error);
}

TEST(RandomPerturbation, DeterministicAndFlatAtZeroAmplitude) {
  const ChartPoint p{0.2, -0.3, 0.4, 0.1};
  const auto a = ecsw::random_perturbation_jet(5, 0.1, 4, p);
  const auto b = ecsw::random_perturbation_jet(5, 0.1, 4, p);
  EXPECT_EQ(a.g, b.g);
  for (std::size_t i = 0; i < a.d3g.size(); ++i) EXPECT_EQ(a.d3g.components()[i], b.d3g.components()[i]);
  const auto c = ecsw::random_perturbation_jet(6, 0.1, 4, p);
  EXPECT_GT((a.g - c.g).cwiseAbs().maxCoeff(), 0.0);

  const auto flat = ecsw::random_perturbation_jet(5, 0.0, 4, p);
  EXPECT_TRUE(flat.g.isApprox(Eigen::MatrixXd::Identity(4, 4)));
  EXPECT_EQ(flat.dg.max_abs(), 0.0);
}

TEST(FdOracle, StepRange) {
  const ecsw::RoterMetric m(fixture::n4());
  EXPECT_THROW(ecsw::fd_jet_oracle(m, ChartPoint{0, 0, 0, 0}, 1e-1), std::invalid_argument);
  EXPECT_THROW(ecsw::fd_jet_oracle(m, ChartPoint{0, 0, 0, 0}, 1e-7), std::invalid_argument);
}

TEST(FlatMetric, ZeroDerivatives) {
  const ecsw::FlatMetric m(ecsw::FibreMetric::diagonal({-1, 1, 1, 1}));
  const auto jet = m.jet(ChartPoint{1, 2, 3, 4});
  EXPECT_EQ(jet.dg.max_abs(), 0.0);
  EXPECT_EQ(jet.d3g.max_abs(), 0.0);
}
