#include <gtest/gtest.h>

#include <algorithm>

#include "ecsw/curvature.hpp"
#include "ecsw/olszak.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using ecsw::ChartPoint;
using ecsw::Rng;
using ecsw::Tensor;

namespace {

int operator_rank_oracle(const Tensor& W) {
  const int n = W.dim();
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  Eigen::MatrixXd M(pairs.size(), pairs.size());
  for (std::size_t r = 0; r < pairs.size(); ++r)
    for (std::size_t c = 0; c < pairs.size(); ++c)
      M(r, c) = W(pairs[r].first, pairs[r].second, pairs[c].first, pairs[c].second);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.rank());
}

Eigen::MatrixXd projector(const Eigen::MatrixXd& cols) {
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(cols).householderQ() *
                            Eigen::MatrixXd::Identity(cols.rows(), cols.cols());
  return q * q.transpose();
}

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& vs) {
  Eigen::MatrixXd m(vs.front().size(), vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) m.col(i) = vs[i];
  return m;
}

struct RoterSample {
  ecsw::MetricJet jet;
  ecsw::CurvaturePack pack;
  ecsw::DistributionBasis db;
};

RoterSample sample(const ecsw::RoterSpec& spec, const ChartPoint& p) {
  RoterSample s{ecsw::roter_jet(spec, p), {}, {}};
  s.pack = ecsw::compute_curvature(s.jet);
  s.db = ecsw::olszak_distribution(s.pack.weyl, s.pack.g, p);
  return s;
}

}  // namespace

TEST(WeylImage, SpanRankMatchesOperatorRank) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + trial % 3;
    const Tensor W = oracle::random_curvature_like(rng, n, 1 + trial % 3);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
    const int expect = operator_rank_oracle(W);
    EXPECT_EQ(ecsw::span_rank(ecsw::weyl_image_2forms(W, g)), expect);
    EXPECT_EQ(ecsw::two_form_operator_rank(W), expect);
  }
  EXPECT_TRUE(ecsw::weyl_image_2forms(Tensor::covariant(4, 4), Eigen::MatrixXd::Identity(4, 4)).empty());
}

TEST(WeylImage, RoterFormsContainDt) {
  Rng rng(6);
  for (const auto& spec : fixture::all_specs()) {
    const auto s = sample(spec, fixture::random_point(rng, spec.n));
    const auto forms = ecsw::weyl_image_2forms(s.pack.weyl, s.pack.g);
    ASSERT_FALSE(forms.empty());
    EXPECT_EQ(ecsw::span_rank(forms), operator_rank_oracle(s.pack.weyl));
    // every form is dt ^ alpha: it vanishes on pairs from Ker dt
    for (const auto& w : forms) EXPECT_LT(w.bottomRightCorner(spec.n - 1, spec.n - 1).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Distribution, RoterIsTheSLine) {
  Rng rng(7);
  for (const auto& spec : fixture::all_specs())
    for (int i = 0; i < 20; ++i) {
      const auto s = sample(spec, fixture::random_point(rng, spec.n));
      ASSERT_FALSE(s.db.degenerate);
      ASSERT_EQ(s.db.dim_D, 1);
      EXPECT_LT(ecsw::axis_misalignment(s.db.basis_D[0], 1), 1e-8);
      EXPECT_EQ(static_cast<int>(s.db.basis_Dperp.size()), spec.n - 1);
      for (const auto& r : ecsw::check_structure(s.db, s.pack, s.jet)) {
        EXPECT_TRUE(r.pass) << r.name << " " << r.residual;
        EXPECT_FALSE(r.skipped) << r.name;
      }
    }
}

TEST(Distribution, FlatIsDegenerate) {
  const ecsw::FlatMetric m(ecsw::FibreMetric::diagonal({-1, 1, 1, 1}));
  const ChartPoint p{0.1, 0.2, 0.3, 0.4};
  const auto jet = m.jet(p);
  const auto pack = ecsw::compute_curvature(jet);
  const auto db = ecsw::olszak_distribution(pack.weyl, pack.g, p);
  EXPECT_TRUE(db.degenerate);
  for (const auto& r : ecsw::check_structure(db, pack, jet)) EXPECT_TRUE(r.skipped) << r.name;
}

TEST(Distribution, TwoDimensionalSynthetic) {
  // Neutral flat background, W = eps omega (x) omega with omega = xi1 ^ xi2
  // built from orthogonal null covectors; D = (Ker omega)^perp.
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(4, 4);
    N.topRightCorner(2, 2) = Eigen::MatrixXd::Identity(2, 2);
    N.bottomLeftCorner(2, 2) = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd P = rng.uniform_matrix(4, 4, -1, 1) + 2.0 * Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd g = P.transpose() * N * P;
    const Eigen::VectorXd xi1 = P.row(0).transpose(), xi2 = P.row(1).transpose();
    const Eigen::MatrixXd omega = xi1 * xi2.transpose() - xi2 * xi1.transpose();
    const double eps = rng.uniform(0.5, 2.0);
    Tensor W = Tensor::covariant(4, 4);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          for (int d = 0; d < 4; ++d) W(a, b, c, d) = eps * omega(a, b) * omega(c, d);

    const auto db = ecsw::olszak_distribution(W, g, ChartPoint{0, 0, 0, 0});
    ASSERT_EQ(db.dim_D, 2);
    Eigen::MatrixXd expect(4, 2);
    expect.col(0) = g.inverse() * xi1;
    expect.col(1) = g.inverse() * xi2;
    EXPECT_LT((projector(stack(db.basis_D)) - projector(expect)).cwiseAbs().maxCoeff(), 1e-9);
    // D is totally null
    const Eigen::MatrixXd D = stack(db.basis_D);
    EXPECT_LT((D.transpose() * g * D).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Structure, InjectedFaultIsCaught) {
  auto s = sample(fixture::n4(), ChartPoint{0.4, 0.1, 0.5, -0.3});
  s.pack.weyl(2, 3, 2, 3) += 0.1;
  bool caught = false;
  for (const auto& r : ecsw::check_structure(s.db, s.pack, s.jet))
    if (r.name == "olszak_weyl_on_Dperp") {
      EXPECT_FALSE(r.pass);
      caught = true;
    }
  EXPECT_TRUE(caught);
}

TEST(Phi, RecoversA) {
  Rng rng(9);
  Eigen::MatrixXd A5(3, 3);
  A5 << 1.0, 0.5, -0.2, 0.5, 2.0, 0.3, -0.2, 0.3, -3.0;
  std::vector<ecsw::RoterSpec> specs = fixture::all_specs();
  specs.emplace_back(ecsw::FibreMetric::diagonal({1, 1, 1}), A5, fixture::sine());
  for (const auto& spec : specs) {
    std::vector<double> norms;
    for (int i = 0; i < 20; ++i) {
      const auto s = sample(spec, fixture::random_point(rng, spec.n));
      const auto [phi, A] = ecsw::phi_and_recover_A(s.pack, s.db, spec);
      EXPECT_LT((A - spec.A).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LT(std::abs(A.trace()), 1e-8);
      const Eigen::MatrixXd q = A.transpose() * spec.inner.matrix();
      EXPECT_LT((q - q.transpose()).cwiseAbs().maxCoeff(), 1e-8);
      norms.push_back(phi.norm_factor);
    }
    const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
    EXPECT_LT((*hi - *lo) / std::max(1.0, std::abs(*hi)), 1e-7);
  }
}

TEST(Phi, InvariantUnderRescaling) {
  auto s = sample(fixture::n6(), ChartPoint{0.7, -1.0, 0.2, 0.4, -0.3, 0.1});
  const Eigen::MatrixXd A1 = ecsw::phi_and_recover_A(s.pack, s.db, fixture::n6()).second;
  s.db.basis_D[0] *= 2.0;
  const Eigen::MatrixXd A2 = ecsw::phi_and_recover_A(s.pack, s.db, fixture::n6()).second;
  EXPECT_LT((A1 - A2).cwiseAbs().maxCoeff(), 1e-12);

  const Eigen::MatrixXd coset = Eigen::MatrixXd::Identity(6, 6).rightCols(4);
  const Eigen::VectorXd u = s.db.basis_D[0];
  const auto p1 = ecsw::phi_matrix(s.pack.weyl, s.pack.g, u, coset);
  const auto p2 = ecsw::phi_matrix(s.pack.weyl, s.pack.g, 2.0 * u, coset);
  EXPECT_LT((p2.matrix - 0.25 * p1.matrix).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, p1.matrix.norm()));
  EXPECT_LT((p1.gamma - p2.gamma).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Phi, RequiresLineDistribution) {
  auto s = sample(fixture::n4(), ChartPoint{0.4, 0.1, 0.5, -0.3});
  s.db.dim_D = 2;
  s.db.basis_D.push_back(Eigen::Vector4d(0, 0, 1, 0));
  EXPECT_THROW(ecsw::phi_and_recover_A(s.pack, s.db, fixture::n4()), std::invalid_argument);
}
