#include "statsvd/baselines.hpp"

#include "statsvd/simbench.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace statsvd;
using testing_support::Draw;

namespace {

SimInstance make(Shape p, std::vector<Index> r, std::vector<Index> s, double lambda, double sigma,
                 std::vector<int> sparse, std::uint64_t seed) {
  SimParams sp{std::move(p), std::move(r), std::move(s), lambda, sigma, NoiseFamily::kGaussian, std::move(sparse)};
  return gen_instance(sp, seed);
}

// Leading r eigenvectors of M M^T.
Frame gram_oracle(const Eigen::MatrixXd& m, Index r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m * m.transpose());
  return Frame(Eigen::MatrixXd(es.eigenvectors().rightCols(r)));
}

}  // namespace

TEST(Hosvd, ExactTuckerRecovered) {
  const auto inst = make({9, 8, 7}, {2, 3, 2}, {9, 8, 7}, 5.0, 0.0, {}, 1);
  const auto dec = hosvd(inst.y, {2, 3, 2});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(sin_theta_fro(dec.loadings[k], inst.loadings[k]), 1e-10);
  EXPECT_LE((expand(dec.core, dec.loadings) - inst.x).norm(), 1e-10 * inst.x.norm());
}

TEST(Hosvd, OrderTwoIsTruncatedSvd) {
  Tensor y(Shape{4, 4});
  y({0, 0}) = 5.0;
  y({1, 1}) = 3.0;
  y({2, 2}) = 2.0;
  y({3, 3}) = 1.0;
  const auto dec = hosvd(y, {2, 2});
  EXPECT_LE(sin_theta_fro(dec.loadings[0], Frame::canonical(4, 2)), 1e-14);
  EXPECT_LE(sin_theta_fro(dec.loadings[1], Frame::canonical(4, 2)), 1e-14);
  EXPECT_NEAR(dec.core.norm(), std::sqrt(34.0), 1e-12);
}

TEST(Hosvd, MatchesPerModeGramOracle) {
  Draw draw(51);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor y = draw.tensor({6, 6, 6});
    const auto dec = hosvd(y, {2, 2, 2});
    for (int k = 0; k < 3; ++k)
      EXPECT_LE(sin_theta_fro(dec.loadings[static_cast<std::size_t>(k)], gram_oracle(matricize(y, k), 2)), 1e-8);
  }
  EXPECT_THROW(hosvd(draw.tensor({3, 3, 3}), {4, 1, 1}), std::invalid_argument);
}

TEST(Hooi, ExactTuckerConvergesInOneSweep) {
  const auto inst = make({10, 9, 8}, {2, 2, 2}, {10, 9, 8}, 5.0, 0.0, {}, 2);
  const auto dec = hooi(inst.y, {2, 2, 2});
  EXPECT_TRUE(dec.converged);
  EXPECT_EQ(dec.sweeps, 1);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(sin_theta_fro(dec.loadings[k], inst.loadings[k]), 1e-10);
}

TEST(Hooi, FirstModeUpdateIsDenseUpdate) {
  Draw draw(52);
  const Tensor y = draw.tensor({7, 6, 5});
  const auto start = hosvd(y, {2, 2, 2});
  const Frame expect = dense_mode_update(y, 0, start.loadings, 2).loading;
  (void)hooi(y, {2, 2, 2}, 1, 0.0, [&](int, std::span<const Frame> f) { EXPECT_LE(sin_theta_fro(f[0], expect), 1e-12); });
}

TEST(Hooi, CoreNormNondecreasing) {
  Draw draw(53);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor y = draw.tensor({8, 7, 6});
    const auto dec = hooi(y, {3, 2, 2}, 30, 0.0);
    for (std::size_t t = 1; t < dec.core_norms.size(); ++t)
      ASSERT_GE(dec.core_norms[t], dec.core_norms[t - 1] - 1e-10);
    EXPECT_NEAR(dec.core.norm(), dec.core_norms.back(), 1e-10);
  }
}

TEST(Ssvd, ExactSparseRankR) {
  Draw draw(54);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(30, 2);
  const IndexSet rows{3, 7, 11, 20, 28};
  const Frame block = draw.frame(5, 2);
  for (std::size_t i = 0; i < rows.size(); ++i) u.row(rows[i]) = block.matrix().row(static_cast<Index>(i));
  const Frame v = draw.frame(40, 2);
  const Eigen::MatrixXd m = u * Eigen::Vector2d(500.0, 300.0).asDiagonal() * v.matrix().transpose();
  const auto res = ssvd_rank_r(m, 2, 1.0);
  EXPECT_EQ(res.support, rows);
  EXPECT_LE(sin_theta_fro(res.left, Frame(u)), 1e-8);
  EXPECT_FALSE(res.degenerate);
  EXPECT_TRUE(res.converged);
}

TEST(Ssvd, HugeSigmaFallsBack) {
  Draw draw(55);
  const auto res = ssvd_rank_r(draw.matrix(10, 20), 2, 1e6);
  EXPECT_TRUE(res.degenerate);
  EXPECT_EQ(res.support.size(), 2u);
  EXPECT_LE(Frame::orthonormality_defect(res.left.matrix()), 1e-12);
  EXPECT_THROW(ssvd_rank_r(draw.matrix(3, 3), 1, 0.0), std::invalid_argument);
}

TEST(Ssvd, PlantedSpikeMatchesBestSubsetOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Draw draw(560 + seed);
    Eigen::MatrixXd m = draw.matrix(10, 40);
    const IndexSet planted{1, 4, 8};
    const Eigen::MatrixXd v = draw.frame(40, 1).matrix();
    for (Index i : planted) m.row(i) += 12.0 * v.transpose();
    // Exhaustive search: the 3-subset whose submatrix has the largest leading singular value.
    double best = -1.0;
    IndexSet best_rows;
    for (Index a = 0; a < 10; ++a)
      for (Index b = a + 1; b < 10; ++b)
        for (Index c = b + 1; c < 10; ++c) {
          Eigen::MatrixXd sub(3, 40);
          sub << m.row(a), m.row(b), m.row(c);
          const double s1 = singular_values(sub)[0];
          if (s1 > best) {
            best = s1;
            best_rows = {a, b, c};
          }
        }
    const auto res = ssvd_rank_r(m, 1, 1.0);
    EXPECT_EQ(res.support, best_rows) << "seed " << seed;
    EXPECT_EQ(res.support, planted);
  }
}

TEST(SparseBaselines, ExactSparseRecovery) {
  const auto inst = make({20, 20, 20}, {2, 2, 2}, {5, 5, 20}, 200.0, 0.0, {0, 1}, 3);
  const BaselineConfig cfg{{2, 2, 2}, {0, 1}, 0.01, 20, 1e-10};
  for (const auto& dec : {s_hosvd(inst.y, cfg), s_hooi(inst.y, cfg)})
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_LE(sin_theta_fro(dec.loadings[k], inst.loadings[k]), 1e-8);
      if (k < 2) EXPECT_EQ(dec.loadings[k].support(), inst.supports[k]);
    }
}

TEST(SparseBaselines, NoSparseModesReduceBitExactly) {
  Draw draw(57);
  const Tensor y = draw.tensor({9, 8, 7});
  const BaselineConfig cfg{{3, 2, 2}, {}, 1.0, 7, 1e-10};
  const auto a = s_hosvd(y, cfg), b = hosvd(y, {3, 2, 2});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.loadings[k], b.loadings[k]);
  EXPECT_EQ(a.core, b.core);
  const auto c = s_hooi(y, cfg), e = hooi(y, {3, 2, 2}, 7, 1e-10);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(c.loadings[k], e.loadings[k]);
  EXPECT_EQ(c.core, e.core);
  EXPECT_EQ(c.core_norms, e.core_norms);
}

TEST(SparseBaselines, OrthonormalEverySweepAndDeterministic) {
  const auto inst = make({15, 15, 15}, {2, 2, 2}, {5, 5, 5}, 20.0, 1.0, {0, 1, 2}, 4);
  const BaselineConfig cfg{{2, 2, 2}, {0, 1, 2}, 1.0, 10, 1e-10};
  const auto a = s_hooi(inst.y, cfg, [](int, std::span<const Frame> f) {
    for (const auto& u : f) EXPECT_LE(Frame::orthonormality_defect(u.matrix()), 1e-10);
  });
  const auto b = s_hooi(inst.y, cfg);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.loadings[k], b.loadings[k]);
  EXPECT_EQ(a.core, b.core);
  EXPECT_THROW(s_hooi(inst.y, BaselineConfig{{2, 2, 2}, {0}, 0.0, 10, 1e-10}), std::invalid_argument);
  EXPECT_THROW(s_hooi(inst.y, BaselineConfig{{2, 2, 2}, {5}, 1.0, 10, 1e-10}), std::invalid_argument);
}

TEST(SingleThreshold, NoiselessMatchesDoubleThreshold) {
  const auto inst = make({20, 20, 20}, {3, 3, 3}, {6, 6, 6}, 50.0, 0.0, {0, 1, 2}, 5);
  StatSvdConfig cfg{{3, 3, 3}, 1e-6, {0, 1, 2}};
  const auto single = stat_svd_single_threshold(inst.y, cfg);
  const auto dbl = fit(inst.y, cfg);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_LE(sin_theta_fro(single.loadings[k], dbl.loadings[k]), 1e-10);
    EXPECT_EQ(single.supports[k].first, inst.supports[k]);
    EXPECT_EQ(dbl.supports[k].second, inst.supports[k]);
  }
}

TEST(SingleThreshold, VanishingThresholdsFollowDensePath) {
  Draw draw(58);
  const Tensor y = draw.tensor({10, 9, 8});
  StatSvdConfig single_cfg{{2, 2, 2}, 1e-200, {0, 1, 2}, 3, 0.0};
  StatSvdConfig dense_cfg{{2, 2, 2}, 1.0, {}, 3, 0.0};
  const auto a = stat_svd_single_threshold(y, single_cfg);
  const auto b = fit(y, dense_cfg);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(sin_theta_fro(a.loadings[k], b.loadings[k]), 1e-10);
}

TEST(SingleThreshold, WeakRowsFavourDoubleThreshold) {
  const WeakRowParams wp;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = gen_weak_row_instance(wp, seed);
    const StatSvdConfig cfg{{wp.r0, wp.r_dense, wp.r_dense}, wp.sigma, {0}};
    const auto dbl = fit(inst.y, cfg);
    const auto single = stat_svd_single_threshold(inst.y, cfg);
    if ((single.denoised - inst.x).norm() > (dbl.denoised - inst.x).norm()) ++wins;
  }
  EXPECT_GE(wins, 16);
}
