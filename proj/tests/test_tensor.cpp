#include "statsvd/tensor.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace statsvd;
using testing_support::Draw;
using testing_support::unravel;

namespace {

// Column of entry `idx` in the mode-k unfolding: modes k+1..d-1, 0..k-1, first fastest.
Index unfolding_column(const std::vector<Index>& idx, const Shape& shape, int k) {
  const int d = static_cast<int>(shape.size());
  Index col = 0, stride = 1;
  for (int step = 1; step < d; ++step) {
    const int m = (k + step) % d;
    col += idx[static_cast<std::size_t>(m)] * stride;
    stride *= shape[static_cast<std::size_t>(m)];
  }
  return col;
}

}  // namespace

TEST(DenseTensor, RejectsBadShapesAndData) {
  EXPECT_THROW(Tensor(Shape{4}), std::invalid_argument);
  EXPECT_THROW(Tensor(Shape{2, 0, 3}), std::invalid_argument);
  EXPECT_THROW(Tensor(Shape{2, 2}, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Tensor(Shape{2, 2}, bad), std::invalid_argument);
}

TEST(DenseTensor, RowMajorIndexing) {
  Tensor t(Shape{2, 3, 4});
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<double>(i);
  EXPECT_EQ(t({1, 2, 3}), 23.0);
  EXPECT_EQ(t({0, 1, 0}), 4.0);
  EXPECT_EQ(t({1, 0, 0}), 12.0);
  EXPECT_THROW(t({0, 0}), std::invalid_argument);
}

TEST(DenseTensor, NormAndArithmetic) {
  Tensor a(Shape{2, 2}, (Eigen::VectorXd(4) << 1, 2, 3, 4).finished());
  Tensor b(Shape{2, 2}, (Eigen::VectorXd(4) << 1, 1, 1, 1).finished());
  EXPECT_DOUBLE_EQ(a.squared_norm(), 30.0);
  EXPECT_EQ((a - b).data(), (Eigen::VectorXd(4) << 0, 1, 2, 3).finished());
  EXPECT_EQ((a * 2.0).data()[3], 8.0);
  EXPECT_THROW(a + Tensor(Shape{4, 1}), std::invalid_argument);
}

TEST(Matricize, ThreeWayLayout) {
  // 2x3x2 tensor with entry value 100 i + 10 j + l.
  Tensor t(Shape{2, 3, 2});
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index l = 0; l < 2; ++l) t({i, j, l}) = 100.0 * i + 10.0 * j + l;
  const Eigen::MatrixXd m0 = matricize(t, 0);
  ASSERT_EQ(m0.rows(), 2);
  ASSERT_EQ(m0.cols(), 6);
  // Mode 0: columns run over (j, l) with j fastest.
  EXPECT_EQ(m0(1, 0), 100.0);
  EXPECT_EQ(m0(0, 1), 10.0);
  EXPECT_EQ(m0(0, 3), 1.0);
  const Eigen::MatrixXd m1 = matricize(t, 1);
  // Mode 1: columns run over (l, i) with l fastest.
  EXPECT_EQ(m1(2, 1), 21.0);
  EXPECT_EQ(m1(2, 2), 120.0);
  const Eigen::MatrixXd m2 = matricize(t, 2);
  // Mode 2: columns run over (i, j) with i fastest.
  EXPECT_EQ(m2(1, 1), 101.0);
  EXPECT_EQ(m2(1, 2), 11.0);
}

TEST(Matricize, RandomAgreesWithIndexFormulaAndFoldInverts) {
  Draw draw(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int order = static_cast<int>(draw.integer(2, 4));
    const Shape shape = draw.shape(order, order == 4 ? 4 : 6);
    const Tensor t = draw.tensor(shape);
    for (int k = 0; k < order; ++k) {
      const Eigen::MatrixXd m = matricize(t, k);
      ASSERT_EQ(m.rows(), shape[static_cast<std::size_t>(k)]);
      ASSERT_EQ(m.rows() * m.cols(), t.size());
      for (Index lin = 0; lin < t.size(); ++lin) {
        const auto idx = unravel(lin, shape);
        ASSERT_EQ(m(idx[static_cast<std::size_t>(k)], unfolding_column(idx, shape, k)), t.data()[lin]);
      }
      ASSERT_EQ(fold(m, k, shape), t);
    }
  }
}

TEST(Matricize, FoldRejectsWrongSize) {
  EXPECT_THROW(fold(Eigen::MatrixXd::Zero(3, 5), 0, Shape{3, 2, 2}), std::invalid_argument);
  EXPECT_THROW(matricize(Tensor(Shape{2, 2}), 2), std::out_of_range);
}

TEST(ModeProduct, MatchesExplicitSum) {
  Draw draw(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int order = static_cast<int>(draw.integer(2, 4));
    const Shape shape = draw.shape(order, 4);
    const Tensor t = draw.tensor(shape);
    const int k = static_cast<int>(draw.integer(0, order - 1));
    const Index q = draw.integer(1, 4);
    const Eigen::MatrixXd m = draw.matrix(q, shape[static_cast<std::size_t>(k)]);
    const Tensor out = mode_product(t, k, m);
    for (Index lin = 0; lin < out.size(); ++lin) {
      auto idx = unravel(lin, out.shape());
      double acc = 0.0;
      const Index row = idx[static_cast<std::size_t>(k)];
      for (Index j = 0; j < shape[static_cast<std::size_t>(k)]; ++j) {
        idx[static_cast<std::size_t>(k)] = j;
        acc += m(row, j) * t(std::span<const Index>(idx));
      }
      ASSERT_NEAR(out.data()[lin], acc, 1e-12 * (1.0 + std::abs(acc)));
    }
  }
}

TEST(ModeProduct, UnfoldingIdentity) {
  // M_k(t x_k M) == M M_k(t)
  Draw draw(13);
  const Tensor t = draw.tensor({3, 4, 5});
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXd m = draw.matrix(2, t.dim(k));
    EXPECT_LE((matricize(mode_product(t, k, m), k) - m * matricize(t, k)).norm(), 1e-12);
  }
  EXPECT_THROW(mode_product(t, 0, Eigen::MatrixXd::Zero(2, 4)), std::invalid_argument);
}

TEST(KronChain, MatchesUnfoldingOfMultilinearProduct) {
  // M_0(t x_1 A x_2 B) == M_0(t) (A (x) B ordered with A fastest)^T
  Draw draw(14);
  const Tensor t = draw.tensor({3, 4, 5});
  const Eigen::MatrixXd a = draw.matrix(2, 4);
  const Eigen::MatrixXd b = draw.matrix(3, 5);
  const Tensor y = mode_product(mode_product(t, 1, a), 2, b);
  const Eigen::MatrixXd k = kron_chain<double>({a, b});
  EXPECT_EQ(k.rows(), 6);
  EXPECT_EQ(k.cols(), 20);
  EXPECT_LE((matricize(y, 0) - matricize(t, 0) * k.transpose()).norm(), 1e-12);
  // Mode 1 wraps around: factors in order (mode 2, mode 0).
  const Eigen::MatrixXd c = draw.matrix(2, 3);
  const Tensor z = mode_product(mode_product(t, 2, b), 0, c);
  EXPECT_LE((matricize(z, 1) - matricize(t, 1) * kron_chain<double>({b, c}).transpose()).norm(), 1e-12);
}

TEST(SelectMode, PicksRowsInOrder) {
  Draw draw(15);
  const Tensor t = draw.tensor({5, 3, 2});
  const std::vector<Index> rows{4, 1};
  const Tensor s = select_mode(t, 0, rows);
  const Eigen::MatrixXd m = matricize(t, 0);
  const Eigen::MatrixXd ms = matricize(s, 0);
  EXPECT_EQ(ms.row(0), m.row(4));
  EXPECT_EQ(ms.row(1), m.row(1));
  EXPECT_THROW(select_mode(t, 0, std::vector<Index>{}), std::invalid_argument);
  EXPECT_THROW(select_mode(t, 1, std::vector<Index>{3}), std::out_of_range);
}

TEST(RowStatistics, MatchUnfoldingRows) {
  Draw draw(16);
  const Tensor t = draw.tensor({4, 3, 5});
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXd m = matricize(t, k);
    EXPECT_LE((mode_row_squared_norms(t, k) - m.rowwise().squaredNorm()).norm(), 1e-12);
    EXPECT_EQ(mode_row_max_abs(t, k), m.cwiseAbs().rowwise().maxCoeff());
  }
}
