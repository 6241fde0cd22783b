#include <gtest/gtest.h>

#include <stdexcept>
#include <vector>

#include "ecsw/rng.hpp"
#include "ecsw/tensor.hpp"
#include "oracles.hpp"

using ecsw::Rng;
using ecsw::Slot;
using ecsw::Tensor;

namespace {

Tensor random_tensor(Rng& rng, int n, std::vector<Slot> variance) {
  Tensor t(n, variance);
  for (auto& c : t.components()) c = rng.uniform(-1, 1);
  return t;
}

Tensor form_from_matrix(const Eigen::MatrixXd& m) {
  return Tensor::from_matrix(m, Slot::Covariant, Slot::Covariant);
}

}  // namespace

TEST(Tensor, RejectsBadDimension) {
  EXPECT_THROW(Tensor(0, {Slot::Covariant}), std::invalid_argument);
  EXPECT_THROW(Tensor(ecsw::kMaxDim + 1, {Slot::Covariant}), std::invalid_argument);
  EXPECT_THROW(Tensor(3, {Slot::Covariant}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Tensor, IndexChecks) {
  Tensor t = Tensor::covariant(3, 2);
  EXPECT_THROW(t(0, 3), std::out_of_range);
  EXPECT_THROW(t(0), std::out_of_range);
  EXPECT_THROW(t.value(), std::logic_error);
  EXPECT_THROW(Tensor::covariant(3, 3).to_matrix(), std::logic_error);
}

TEST(Tensor, RowMajorLayout) {
  Tensor t = Tensor::covariant(3, 3);
  t(1, 2, 0) = 5.0;
  EXPECT_EQ(t.components()[1 * 9 + 2 * 3 + 0], 5.0);
}

TEST(Contract, IdentityTraceIsDimension) {
  for (int n = 1; n <= 6; ++n) EXPECT_DOUBLE_EQ(ecsw::contract(Tensor::identity(n), 0, 1).value(), n);
}

TEST(Contract, MetricWithInverseGivesDimension) {
  Rng rng(11);
  const int n = 5;
  Eigen::MatrixXd g = oracle::random_symmetric(rng, n) + 6.0 * Eigen::MatrixXd::Identity(n, n);
  const Tensor G = form_from_matrix(g);
  const Tensor Ginv = Tensor::from_matrix(g.inverse(), Slot::Contravariant, Slot::Contravariant);
  EXPECT_NEAR(ecsw::contract(G, 0, 1, &Ginv).value(), n, 1e-12);
}

TEST(Contract, MatchesExplicitLoop) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    const Tensor T = random_tensor(rng, n, {Slot::Covariant, Slot::Contravariant, Slot::Covariant, Slot::Covariant});
    const Tensor c = ecsw::contract(T, 1, 3);
    ASSERT_EQ(c.rank(), 2);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += T(a, i, b, i);
        EXPECT_NEAR(c(a, b), s, 1e-14);
      }
  }
}

TEST(Contract, CovariantPairUsesInverseMetric) {
  Rng rng(5);
  const int n = 4;
  const Tensor T = random_tensor(rng, n, {Slot::Covariant, Slot::Covariant, Slot::Covariant});
  const Eigen::MatrixXd h = oracle::random_symmetric(rng, n) + 5.0 * Eigen::MatrixXd::Identity(n, n);
  const Tensor H = Tensor::from_matrix(h, Slot::Contravariant, Slot::Contravariant);
  const Tensor c = ecsw::contract(T, 0, 2, &H);
  for (int b = 0; b < n; ++b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += h(i, j) * T(i, b, j);
    EXPECT_NEAR(c(b), s, 1e-13);
  }
}

TEST(Contract, Errors) {
  const Tensor T = Tensor::covariant(3, 2);
  EXPECT_THROW(ecsw::contract(T, 0, 0), std::invalid_argument);
  EXPECT_THROW(ecsw::contract(T, 0, 2), std::out_of_range);
  EXPECT_THROW(ecsw::contract(T, 0, 1), std::invalid_argument);
  const Tensor wrong = Tensor::covariant(3, 2);
  EXPECT_THROW(ecsw::contract(T, 0, 1, &wrong), std::invalid_argument);
}

TEST(Contract, LinearInTheTensor) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 3;
    const std::vector<Slot> v{Slot::Contravariant, Slot::Covariant, Slot::Covariant};
    const Tensor a = random_tensor(rng, n, v), b = random_tensor(rng, n, v);
    const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
    const Tensor lhs = ecsw::contract(alpha * a + beta * b, 0, 2);
    const Tensor rhs = alpha * ecsw::contract(a, 0, 2) + beta * ecsw::contract(b, 0, 2);
    EXPECT_LT((lhs - rhs).max_abs(), 1e-13);
  }
}

TEST(Alternate, SymmetricTensorVanishes) {
  Rng rng(2);
  const Tensor s = form_from_matrix(oracle::random_symmetric(rng, 4));
  EXPECT_LT(ecsw::alternate(s).max_abs(), 1e-15);
}

TEST(Alternate, MatchesPermutationSum) {
  Rng rng(8);
  for (int rank = 2; rank <= 4; ++rank) {
    const int n = 3;
    const Tensor T = random_tensor(rng, n, std::vector<Slot>(rank, Slot::Covariant));
    const Tensor A = ecsw::alternate(T);
    ecsw::for_each_index(n, rank, [&](std::span<const int> idx) {
      std::vector<int> perm(rank);
      std::iota(perm.begin(), perm.end(), 0);
      double s = 0.0;
      do {
        std::vector<int> moved(rank);
        for (int i = 0; i < rank; ++i) moved[i] = idx[perm[i]];
        s += oracle::sign_of(perm) * T.at(moved);
      } while (std::next_permutation(perm.begin(), perm.end()));
      EXPECT_NEAR(A.at(idx), s / oracle::factorial(rank), 1e-14);
    });
  }
}

TEST(Alternate, IdempotentAndAntisymmetric) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int rank = 2 + trial % 3;
    const Tensor A = ecsw::alternate(random_tensor(rng, 4, std::vector<Slot>(rank, Slot::Covariant)));
    EXPECT_LT((ecsw::alternate(A) - A).max_abs(), 1e-14);
    for (int i = 0; i < rank; ++i)
      for (int j = i + 1; j < rank; ++j) EXPECT_LT(ecsw::antisymmetry_residual(A, i, j), 1e-14);
  }
}

TEST(Alternate, RejectsMixedVariance) {
  EXPECT_THROW(ecsw::alternate(Tensor(3, {Slot::Covariant, Slot::Contravariant})), std::invalid_argument);
}

TEST(IndexGymnastics, LowerMatchesLoop) {
  Rng rng(4);
  const int n = 4;
  const Eigen::MatrixXd g = oracle::random_symmetric(rng, n) + 5.0 * Eigen::MatrixXd::Identity(n, n);
  const Tensor T = random_tensor(rng, n, {Slot::Covariant, Slot::Contravariant});
  const Tensor L = ecsw::lower_index(T, 1, form_from_matrix(g));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += g(b, k) * T(a, k);
      EXPECT_NEAR(L(a, b), s, 1e-13);
    }
  EXPECT_THROW(ecsw::lower_index(T, 0, form_from_matrix(g)), std::invalid_argument);
}

TEST(SymmetryResidual, DetectsAsymmetry) {
  Tensor t = Tensor::covariant(3, 2);
  t(0, 1) = 1.0;
  EXPECT_DOUBLE_EQ(ecsw::symmetry_residual(t, 0, 1), 1.0);
  t(1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(ecsw::symmetry_residual(t, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(ecsw::antisymmetry_residual(t, 0, 1), 2.0);
}

TEST(Wedge, CanonicalForms) {
  Eigen::MatrixXd z12 = Eigen::MatrixXd::Zero(4, 4), z34 = Eigen::MatrixXd::Zero(4, 4);
  z12(0, 1) = 1;
  z12(1, 0) = -1;
  z34(2, 3) = 1;
  z34(3, 2) = -1;
  const std::vector<Eigen::MatrixXd> zs{z12, z34};
  EXPECT_NEAR(ecsw::wedge_on_basis(zs), 1.0, 1e-15);

  Eigen::MatrixXd e12 = Eigen::MatrixXd::Zero(2, 2);
  e12(0, 1) = 1;
  e12(1, 0) = -1;
  const std::vector<Tensor> one{form_from_matrix(e12)};
  EXPECT_NEAR(ecsw::wedge_power_coefficient(one, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(ecsw::wedge_power_coefficient(one, form_from_matrix(e12)), 1.0, 1e-15);
}

TEST(Wedge, MatchesPermutationExpansion) {
  Rng rng(99);
  for (int m = 1; m <= 4; ++m) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Eigen::MatrixXd> zs;
      for (int j = 0; j < m; ++j) zs.push_back(oracle::random_antisymmetric(rng, 2 * m));
      const double expect = oracle::wedge_expansion(zs);
      EXPECT_NEAR(ecsw::wedge_on_basis(zs), expect, 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST(Wedge, SymmetricInFactorsAndOddInOrientation) {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 2;
    std::vector<Tensor> zs;
    for (int j = 0; j < m; ++j) zs.push_back(form_from_matrix(oracle::random_antisymmetric(rng, 2 * m)));
    const double theta = rng.uniform(0.5, 2.0);
    const double c = ecsw::wedge_power_coefficient(zs, theta);
    std::vector<Tensor> swapped = zs;
    std::swap(swapped.front(), swapped.back());
    EXPECT_NEAR(ecsw::wedge_power_coefficient(swapped, theta), c, 1e-12 * std::max(1.0, std::abs(c)));
    EXPECT_NEAR(ecsw::wedge_power_coefficient(zs, -theta), -c, 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST(Wedge, Errors) {
  Rng rng(1);
  std::vector<Tensor> zs{form_from_matrix(oracle::random_antisymmetric(rng, 4))};
  EXPECT_THROW(ecsw::wedge_power_coefficient(zs, 1.0), std::invalid_argument);
  std::vector<Tensor> ok{form_from_matrix(oracle::random_antisymmetric(rng, 2))};
  EXPECT_THROW(ecsw::wedge_power_coefficient(ok, 0.0), std::invalid_argument);
  std::vector<Tensor> sym{form_from_matrix(oracle::random_symmetric(rng, 2))};
  EXPECT_THROW(ecsw::wedge_power_coefficient(sym, 1.0), std::invalid_argument);
  EXPECT_THROW(ecsw::wedge_power_coefficient(std::vector<Tensor>{}, 1.0), std::invalid_argument);
}

TEST(PermutationSign, Transpositions) {
  const std::vector<int> id{0, 1, 2, 3}, swap{1, 0, 2, 3}, cyc{1, 2, 0, 3};
  EXPECT_EQ(ecsw::permutation_sign(id), 1);
  EXPECT_EQ(ecsw::permutation_sign(swap), -1);
  EXPECT_EQ(ecsw::permutation_sign(cyc), 1);
}

TEST(FibreMetric, SignatureAndValidation) {
  const auto m = ecsw::FibreMetric::diagonal({-1, 1, 1, 1});
  EXPECT_EQ(m.negatives(), 1);
  EXPECT_EQ(m.positives(), 3);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 0, 1;
  EXPECT_THROW(ecsw::FibreMetric{bad}, std::invalid_argument);
  Eigen::MatrixXd degenerate(2, 2);
  degenerate << 1, 1, 1, 1;
  EXPECT_THROW(ecsw::FibreMetric{degenerate}, std::invalid_argument);
  EXPECT_EQ(ecsw::signature(Eigen::MatrixXd{{0.0, 1.0}, {1.0, 0.0}}), std::make_pair(1, 1));
}
