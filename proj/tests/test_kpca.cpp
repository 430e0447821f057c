#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "supck/kpca.hpp"

using namespace supck;

namespace {

SimilarityMatrix from_scores(const Eigen::MatrixXd& s) {
  SimilarityMatrix m;
  m.scores = s;
  for (Eigen::Index i = 0; i < s.rows(); ++i) m.ids.push_back("p" + std::to_string(i));
  return m;
}

Eigen::MatrixXd pairwise(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (rows.row(i) - rows.row(j)).norm();
  return d;
}

}  // namespace

TEST(Kpca, GramMatrixRecoversDistances) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 5 + trial % 10;
    Eigen::MatrixXd pts(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) pts.row(i) << u(rng) + 3.0, u(rng) - 1.0;
    const Projection p = kpca_project(from_scores(pts * pts.transpose()), 2);
    ASSERT_EQ(p.coordinates.cols(), 2);
    EXPECT_LT((pairwise(p.coordinates) - pairwise(pts)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(p.discarded_negative_mass, 1e-12);
    EXPECT_FALSE(p.fewer_components);
    EXPECT_GE(p.eigenvalues[0], p.eigenvalues[1]);
    EXPECT_GT(p.eigenvalues[1], 0.0);
  }
}

TEST(Kpca, IdentityLikeMatrixIsASimplex) {
  const Eigen::Index n = 6;
  const Projection p = kpca_project(from_scores(2.5 * Eigen::MatrixXd::Identity(n, n)), static_cast<int>(n));
  // n - 1 equal positive eigenvalues after centering
  EXPECT_EQ(p.coordinates.cols(), n - 1);
  EXPECT_TRUE(p.fewer_components);
  const Eigen::MatrixXd d = pairwise(p.coordinates);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        EXPECT_NEAR(d(i, j), std::sqrt(5.0), 1e-9);
      }
}

TEST(Kpca, BlocksSeparateOnFirstComponent) {
  const Eigen::Index n = 8;
  Eigen::MatrixXd s(n, n);
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) s(i, j) = ((i < 4) == (j < 4) ? 1.0 : 0.0) + jitter(rng);
  const Projection p = kpca_project(from_scores(s), 2);
  const Eigen::VectorXd pc1 = p.coordinates.col(0);
  const Eigen::VectorXd a = pc1.head(4), b = pc1.tail(4);
  const double spread = std::max(a.maxCoeff() - a.minCoeff(), b.maxCoeff() - b.minCoeff());
  const double margin = std::max(a.minCoeff() - b.maxCoeff(), b.minCoeff() - a.maxCoeff());
  EXPECT_GT(margin, 10.0 * spread);
  EXPECT_TRUE(p.symmetrized);
}

TEST(Kpca, ConstantShiftLeavesCoordinatesUnchanged) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd s(7, 7);
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 7; ++j) s(i, j) = u(rng);
  const Projection a = kpca_project(from_scores(s), 3);
  const Projection b = kpca_project(from_scores(s.array() + 42.0), 3);
  ASSERT_EQ(a.coordinates.cols(), b.coordinates.cols());
  EXPECT_LT((a.coordinates - b.coordinates).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Kpca, ReorderingPermutesRows) {
  std::mt19937_64 rng(74);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Eigen::MatrixXd pts(9, 3);
  for (Eigen::Index i = 0; i < 9; ++i) pts.row(i) << u(rng), u(rng), u(rng);
  const Eigen::MatrixXd g = pts * pts.transpose();
  std::vector<Eigen::Index> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd gp(9, 9);
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 9; ++j) gp(i, j) = g(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  const Projection a = kpca_project(from_scores(g), 3);
  const Projection b = kpca_project(from_scores(gp), 3);
  for (Eigen::Index i = 0; i < 9; ++i)
    EXPECT_LT((b.coordinates.row(i) - a.coordinates.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff(),
              1e-9);
}

TEST(Kpca, IndefiniteInputReportsNegativeMass) {
  Eigen::MatrixXd s(3, 3);
  s << 0, 1, 1, 1, 0, -3, 1, -3, 0;
  const Projection p = kpca_project(from_scores(s), 2);
  EXPECT_GT(p.discarded_negative_mass, 0.0);
  EXPECT_LT(p.discarded_negative_mass, 1.0);
  for (double v : p.eigenvalues) EXPECT_GT(v, 0.0);
}

TEST(Kpca, SymmetrizesAndRejectsBadInput) {
  Eigen::MatrixXd s(4, 4);
  s << 4, 1, 0, 0, 3, 4, 0, 0, 0, 0, 4, 2, 0, 0, 2, 4;
  const Projection a = kpca_project(from_scores(s), 2);
  const Projection b = kpca_project(from_scores(0.5 * (s + s.transpose())), 2);
  EXPECT_LT((a.coordinates - b.coordinates).cwiseAbs().maxCoeff(), 1e-12);
  SimilarityMatrix d = from_scores(s);
  d.orientation = Orientation::Dissimilarity;
  EXPECT_THROW(kpca_project(d, 2), InputError);
  EXPECT_THROW(kpca_project(from_scores(s), 0), ParameterError);
}
