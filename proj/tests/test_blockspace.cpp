#include "spgadmm/blockspace.hpp"
#include "spgadmm/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace spgadmm;
using spgadmm::testing::Sampler;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

BlockVector vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(vals.size());
  Index i = 0;
  for (double x : vals) v(i++) = x;
  return BlockVector({v.size()}, v);
}

}  // namespace

TEST(BlockVector, BlocksFollowDims) {
  BlockVector v({2, 3}, Eigen::VectorXd::LinSpaced(5, 0, 4));
  EXPECT_EQ(v.num_blocks(), 2u);
  EXPECT_EQ(v.offset(1), 2);
  EXPECT_EQ(v.block(1)(0), 2.0);
  EXPECT_THROW(BlockVector({2, 3}, Eigen::VectorXd::Zero(4)), DimensionError);
}

TEST(BlockVector, ArithmeticNeedsMatchingDims) {
  BlockVector a({2, 1}), b({1, 2});
  EXPECT_THROW(a += b, DimensionError);
  BlockVector c({2, 1}, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ((c + c).values(), Eigen::Vector3d(2, 4, 6));
  EXPECT_DOUBLE_EQ(dot(c, c), 14.0);
}

TEST(LinearMap, IdentityApply) {
  const auto id = LinearMap::identity({2});
  EXPECT_EQ(id.apply(vec({1, -3})).values(), vec({1, -3}).values());
}

TEST(LinearMap, HandProduct) {
  LinearMap m({2}, {2}, mat({{1, 2}, {3, 4}}));
  EXPECT_EQ(m.apply(vec({1, 1})).values(), vec({3, 7}).values());
}

TEST(LinearMap, AdjointMatchesTranspose) {
  Sampler rng(11);
  LinearMap m({7}, {5}, rng.matrix(5, 7));
  for (int trial = 0; trial < 100; ++trial) {
    BlockVector v({7}, rng.vector(7)), w({5}, rng.vector(5));
    EXPECT_NEAR(dot(m.apply(v), w), dot(v, m.adjoint_apply(w)), 1e-12);
  }
  EXPECT_THROW(m.apply(BlockVector({5})), DimensionError);
}

TEST(GramNorm, Examples) {
  EXPECT_DOUBLE_EQ(gram_norm(PsdOperator::identity({2}), vec({3, 4})), 5.0);
  EXPECT_DOUBLE_EQ(gram_norm(PsdOperator::zero({2}), vec({3, 4})), 0.0);
  EXPECT_DOUBLE_EQ(gram_norm(PsdOperator({2}, mat({{2, 0}, {0, 0}})), vec({1, 5})), std::sqrt(2.0));
}

TEST(PsdOperator, RejectsIndefinite) {
  EXPECT_THROW(PsdOperator({2}, mat({{1, 0}, {0, -1}})), PsdViolation);
  EXPECT_NO_THROW(PsdOperator({2}, mat({{1, 1}, {1, 1}})));
}

TEST(Spectral, SmallExamples) {
  EXPECT_NEAR(spectral_max(LinearMap::identity({3})), 1.0, 1e-15);
  EXPECT_NEAR(spectral_max(LinearMap({2}, {2}, mat({{1, 0}, {0, 3}}))), 3.0, 1e-15);
  EXPECT_NEAR(spectral_min(LinearMap::identity({3})), 1.0, 1e-15);
  EXPECT_NEAR(spectral_min(LinearMap({2}, {2}, mat({{-1, 0}, {0, 2}}))), -1.0, 1e-15);
}

TEST(Spectral, MatchesJacobiOracle) {
  Sampler rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd p = rng.psd(20, 20);
    const Eigen::VectorXd ev = spgadmm::testing::jacobi_eigenvalues(p);
    EXPECT_NEAR(spectral_max(p), ev(19), 1e-8 * ev(19));
    const Eigen::MatrixXd s = rng.symmetric(20);
    const Eigen::VectorXd es = spgadmm::testing::jacobi_eigenvalues(s);
    EXPECT_NEAR(spectral_min(s), es(0), 1e-8 * std::abs(es(0)));
    EXPECT_NEAR(spectral_max(s), es(19), 1e-8 * std::abs(es(19)));
  }
}

TEST(Spectral, PowerIterationOnLargeOperator) {
  Sampler rng(5);
  const Eigen::MatrixXd p = rng.psd(600, 40) + Eigen::MatrixXd::Identity(600, 600);
  const double ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p, Eigen::EigenvaluesOnly).eigenvalues()(599);
  EXPECT_NEAR(spectral_max(p), ref, 1e-8 * ref);
}
