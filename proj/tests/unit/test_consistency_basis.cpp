#include <gtest/gtest.h>

#include "tasep/consistency_basis.hpp"
#include "tasep/correlations.hpp"

using namespace tasep;

TEST(ConsistencyBasis, OrthonormalKernel) {
  for (int n = 2; n <= 6; ++n) {
    for (int m = 1; m <= n; ++m) {
      const IndexLayout lay(n, m);
      const auto b = consistency_basis(lay);
      EXPECT_EQ(b.dimension(), consistent_space_dimension(n, m));
      const Eigen::SparseMatrix<double> c = consistency_matrix(lay);
      EXPECT_LT((c * b.basis).cwiseAbs().maxCoeff(), 1e-12);
      const Eigen::MatrixXd gram = b.basis.transpose() * b.basis;
      EXPECT_LT((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ConsistencyBasis, NullDimensionMatchesClosedForm) {
  for (int n = 2; n <= 7; ++n)
    for (int m = 2; m < n; ++m)
      EXPECT_EQ(consistency_null_dimension(IndexLayout(n, m)), consistent_space_dimension(n, m)) << n << "," << m;
}

TEST(ConsistencyBasis, RhsSatisfiedByEmbedding) {
  const IndexLayout lay(5, 3);
  const auto x = embed(MasterState::uniform(5), 3);
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.values.data(), static_cast<Eigen::Index>(x.size()));
  EXPECT_LT((consistency_matrix(lay) * v - consistency_rhs(lay)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ConsistencyBasis, SharedCacheReturnsSameInstance) {
  const IndexLayout lay(5, 2);
  const auto a = shared_consistency_basis(lay);
  const auto b = shared_consistency_basis(lay);
  EXPECT_EQ(a.get(), b.get());
}
