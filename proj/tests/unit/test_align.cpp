#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "scot/align.hpp"
#include "scot/error.hpp"

using namespace scot;
using scot::testing::gaussian_matrix;
using scot::testing::max_rel_diff;
using scot::testing::numeric_gradient;

namespace {

Matrix random_plan(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(0.01, 1.0);
  Matrix p(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) p(i, j) = ud(rng);
  for (Index i = 0; i < rows; ++i) p.row(i) /= p.row(i).sum();
  return p;
}

Matrix random_rotation(Index d, std::mt19937_64& rng) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  return qr.householderQ();
}

}  // namespace

TEST(CostMatrix, Examples) {
  Matrix u(2, 2);
  u << 1, 0, 0, 1;
  EXPECT_NEAR(cost_matrix(u, u).cost.diagonal().cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(cost_matrix(u, -u).cost(0, 0), 2.0, 1e-12);
  Matrix zs(1, 2), zt(1, 2);
  zs << 3, 4;
  zt << 1, 0;
  EXPECT_NEAR(cost_matrix(zs, zt).cost(0, 0), std::sqrt(0.8), 1e-12);
  EXPECT_NEAR(cost_matrix(zs, zt).cost(0, 0), 0.894427, 1e-6);
}

TEST(CostMatrix, ZeroRowIsNumericalError) {
  Matrix zs = Matrix::Zero(2, 3);
  zs(0, 0) = 1.0;
  EXPECT_THROW(cost_matrix(zs, Matrix::Ones(2, 3)), NumericalError);
}

TEST(OtLoss, Examples) {
  const Matrix swap = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  EXPECT_EQ(ot_loss(Matrix::Constant(2, 2, 0.25), Matrix::Zero(2, 2)), 0.0);
  EXPECT_EQ(ot_loss(Matrix::Identity(2, 2) / 2.0, swap), 0.0);
  EXPECT_DOUBLE_EQ(ot_loss(Matrix::Constant(2, 2, 0.25), swap), 0.25);
}

TEST(OtLoss, BoundedBySphereDiameter) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const CostMatrix cm = cost_matrix(gaussian_matrix(6, 3, rng), gaussian_matrix(4, 3, rng));
    const Coupling c = sinkhorn_solve(cm.cost, SinkhornConfig{});
    const double l = ot_loss(c.plan, cm.cost);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 2.0 * c.total_mass / 4.0 + 1e-12);
  }
}

TEST(Contrastive, SingleTargetHasZeroLoss) {
  std::mt19937_64 rng(1);
  const Matrix us = scot::testing::unit_rows(gaussian_matrix(3, 2, rng));
  const Matrix ut = scot::testing::unit_rows(gaussian_matrix(1, 2, rng));
  EXPECT_NEAR(contrastive_loss(Matrix::Ones(3, 1), us, ut, 0.1).loss, 0.0, 1e-12);
}

TEST(Contrastive, EqualSimilaritiesGiveLogNt) {
  // Every target identical: S_ij constant, ratio = 1/n_t per row.
  std::mt19937_64 rng(2);
  const Matrix us = scot::testing::unit_rows(gaussian_matrix(4, 3, rng));
  const Matrix ut = Matrix::Ones(5, 3) / std::sqrt(3.0);
  const Matrix plan = random_plan(4, 5, rng) / 5.0;  // rows sum to 1/5
  const ContrastiveResult r = contrastive_loss(plan * 5.0, us, ut, 0.1);
  EXPECT_NEAR(r.loss, std::log(5.0), 1e-12);
}

TEST(Contrastive, GradientMatchesFrozenPlanFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix zs = gaussian_matrix(7, 3, rng);
    const Matrix zt = gaussian_matrix(5, 3, rng);
    const Matrix plan = random_plan(7, 5, rng);
    AlignConfig cfg;
    cfg.ot_weight = 0.0;
    const AlignResult r = align_with_plan(zs, zt, plan, cfg);
    const auto f_s = [&](const Matrix& x) { return align_with_plan(x, zt, plan, cfg).l_align; };
    const auto f_t = [&](const Matrix& x) { return align_with_plan(zs, x, plan, cfg).l_align; };
    EXPECT_LT(max_rel_diff(r.grad_zs, numeric_gradient(f_s, zs)), 1e-4) << "seed " << seed;
    EXPECT_LT(max_rel_diff(r.grad_zt, numeric_gradient(f_t, zt)), 1e-4) << "seed " << seed;
  }
}

TEST(Contrastive, NonNegativeForStochasticRows) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix us = scot::testing::unit_rows(gaussian_matrix(6, 4, rng));
    const Matrix ut = scot::testing::unit_rows(gaussian_matrix(6, 4, rng));
    EXPECT_GE(contrastive_loss(random_plan(6, 6, rng), us, ut, 0.1).loss, 0.0);
  }
}

TEST(Contrastive, EmptyRowsAreSkipped) {
  std::mt19937_64 rng(3);
  const Matrix us = scot::testing::unit_rows(gaussian_matrix(3, 2, rng));
  const Matrix ut = scot::testing::unit_rows(gaussian_matrix(2, 2, rng));
  Matrix plan = random_plan(3, 2, rng);
  plan.row(1).setZero();
  const ContrastiveResult r = contrastive_loss(plan, us, ut, 0.1);
  EXPECT_EQ(r.skipped_rows, 1);
  EXPECT_EQ(r.grad_s.row(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(contrastive_loss(Matrix::Zero(3, 2), us, ut, 0.1), NumericalError);
}

TEST(Align, OtGradientMatchesFrozenPlanFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix zs = gaussian_matrix(6, 3, rng);
    const Matrix zt = gaussian_matrix(4, 3, rng);
    const Matrix plan = random_plan(6, 4, rng);
    const AlignConfig cfg;
    const AlignResult r = align_with_plan(zs, zt, plan, cfg);
    const auto f_s = [&](const Matrix& x) { return align_with_plan(x, zt, plan, cfg).l_align; };
    const auto f_t = [&](const Matrix& x) { return align_with_plan(zs, x, plan, cfg).l_align; };
    EXPECT_LT(max_rel_diff(r.grad_zs, numeric_gradient(f_s, zs)), 1e-4) << "seed " << seed;
    EXPECT_LT(max_rel_diff(r.grad_zt, numeric_gradient(f_t, zt)), 1e-4) << "seed " << seed;
  }
}

TEST(Align, EtaZeroIsPureOt) {
  std::mt19937_64 rng(4);
  AlignConfig cfg;
  cfg.eta = 0.0;
  const AlignResult r = align_step(gaussian_matrix(5, 3, rng), gaussian_matrix(5, 3, rng), cfg);
  EXPECT_EQ(r.l_align, r.l_ot);
}

TEST(Align, SelfAlignmentBeatsPermutedCopy) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix z = gaussian_matrix(8, 4, rng);
    auto perm = scot::testing::random_permutation(8, rng);
    if (std::is_sorted(perm.begin(), perm.end())) std::swap(perm[0], perm[1]);
    Matrix permuted(8, 4);
    for (Index i = 0; i < 8; ++i) permuted.row(i) = z.row(perm[i]);
    // Same point sets, so compare against a row-permuted target that breaks
    // the pairing the ones-marginal coupling relies on via a different cloud.
    const Matrix other = gaussian_matrix(8, 4, rng);
    const AlignConfig cfg;
    EXPECT_LT(align_step(z, z, cfg).l_ot, align_step(z, other, cfg).l_ot) << "seed " << seed;
  }
}

TEST(Align, RotationInvariant) {
  std::mt19937_64 rng(5);
  const Matrix zs = gaussian_matrix(6, 4, rng);
  const Matrix zt = gaussian_matrix(5, 4, rng);
  const Matrix q = random_rotation(4, rng);
  const AlignConfig cfg;
  const AlignResult a = align_step(zs, zt, cfg);
  const AlignResult b = align_step(zs * q, zt * q, cfg);
  EXPECT_NEAR(a.l_ot, b.l_ot, 1e-9);
  EXPECT_NEAR(a.l_con, b.l_con, 1e-9);
  EXPECT_LT((a.coupling.plan - b.coupling.plan).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Align, OtWeightScalesOnlyTheOtTerm) {
  std::mt19937_64 rng(6);
  const Matrix zs = gaussian_matrix(5, 3, rng);
  const Matrix zt = gaussian_matrix(5, 3, rng);
  AlignConfig cfg;
  const AlignResult full = align_step(zs, zt, cfg);
  cfg.ot_weight = 0.0;
  const AlignResult no_ot = align_step(zs, zt, cfg);
  EXPECT_NEAR(no_ot.l_align, cfg.eta * full.l_con, 1e-12);
  EXPECT_NEAR(full.l_align, full.l_ot + cfg.eta * full.l_con, 1e-12);
}
