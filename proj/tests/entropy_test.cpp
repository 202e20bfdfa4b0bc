// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mle_uvad/entropy.hpp"
#include "mle_uvad/error.hpp"
#include "mle_uvad/rng.hpp"
#include "oracles.hpp"

namespace mle_uvad {
namespace {

using testing::Rows;

Rows to_rows(const Matrix& m) {
  Rows out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

Matrix from_flat(std::size_t r, std::size_t c, const std::vector<double>& flat) {
  return Matrix(r, c, flat);
}

Matrix random_batch(std::size_t n, std::size_t d, double scale, Rng& rng) {
  Matrix m(n, d);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

TEST(GaussianKernel, PeakValue) {
  EXPECT_NEAR(gaussian_kernel(0.0, Bandwidth(1.0), 1), 1.0 / std::sqrt(2.0 * std::numbers::pi),
              1e-15);
  EXPECT_NEAR(gaussian_kernel(0.0, Bandwidth(1.0), 1), 0.398942, 1e-6);
}

TEST(GaussianKernel, DirectFormula) {
  const double expected = std::exp(-1.0) / std::sqrt(2.0 * std::numbers::pi);
  EXPECT_NEAR(gaussian_kernel(2.0, Bandwidth(1.0), 1), expected, 1e-15);
  EXPECT_NEAR(gaussian_kernel(2.0, Bandwidth(1.0), 1), 0.146763, 1e-6);
}

TEST(GaussianKernel, MonotoneDecay) {
  const Bandwidth bw(0.3);
  for (double s : {0.0, 0.01, 0.5, 2.0}) {
    for (double eps : {1e-6, 1e-3, 0.1}) {
      EXPECT_GT(gaussian_kernel(s, bw, 3), gaussian_kernel(s + eps, bw, 3));
    }
  }
}

TEST(Bandwidth, RejectsNonPositive) {
  EXPECT_THROW(Bandwidth(0.0), ConfigError);
  EXPECT_THROW(Bandwidth(-0.1), ConfigError);
  EXPECT_THROW(Bandwidth(std::nan("")), ConfigError);
}

TEST(InformationPotential, CoincidentPointsClosedForm) {
  const Matrix z(5, 2, 0.25);
  const double expected = 1.0 / (4.0 * std::numbers::pi * 0.01);
  EXPECT_NEAR(information_potential(z, Bandwidth(0.1)), expected, 1e-12 * expected);
  EXPECT_NEAR(information_potential(z, Bandwidth(0.1)), 7.95775, 1e-5);
}

TEST(InformationPotential, TwoPointsMatchesOracle) {
  const Matrix z{{0.0}, {1.0}};
  const double oracle = testing::naive_information_potential({{0.0}, {1.0}}, 0.5);
  EXPECT_LE(testing::relative_error(information_potential(z, Bandwidth(0.5)), oracle), 1e-12);
}

TEST(InformationPotential, PermutationInvariant) {
  Rng rng(17);
  const Matrix z = random_batch(12, 4, 0.3, rng);
  std::vector<std::size_t> order(12);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  const Matrix permuted = gather_rows(z, order);
  const Bandwidth bw(0.2);
  EXPECT_LE(testing::relative_error(information_potential(z, bw),
                                    information_potential(permuted, bw)),
            1e-12);
  EXPECT_LE(testing::relative_error(mle_loss(z, bw), mle_loss(permuted, bw)), 1e-12);
}

TEST(InformationPotential, BruteForceEquivalenceOnRandomBatches) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(64);
    const std::size_t d = 1 + rng.index(16);
    const double sigma = rng.uniform(0.05, 2.0);
    const Matrix z = random_batch(n, d, rng.uniform(0.1, 1.0), rng);
    const Rows rows = to_rows(z);
    EXPECT_LE(testing::relative_error(information_potential(z, Bandwidth(sigma)),
                                      testing::naive_information_potential(rows, sigma)),
              1e-12)
        << "n=" << n << " d=" << d;
    EXPECT_LE(testing::relative_error(mle_loss(z, Bandwidth(sigma)),
                                      testing::naive_mle_loss(rows, sigma)),
              1e-12)
        << "n=" << n << " d=" << d;
  }
}

TEST(MleLoss, CoincidentSamplesClosedForm) {
  const Matrix z(8, 2, -0.5);
  const double expected = std::log(4.0 * std::numbers::pi * 0.01);
  EXPECT_NEAR(mle_loss(z, Bandwidth(0.1)), expected, 1e-12);
  EXPECT_NEAR(mle_loss(z, Bandwidth(0.1)), -2.07430, 2e-4);
}

TEST(MleLoss, SpreadingTwoPointsIncreasesLoss) {
  const Bandwidth bw(0.3);
  double previous = mle_loss(Matrix{{0.0}, {0.0}}, bw);
  for (double gap = 0.05; gap < 3.0; gap += 0.05) {
    const double current = mle_loss(Matrix{{0.0}, {gap}}, bw);
    EXPECT_GT(current, previous) << "gap=" << gap;
    previous = current;
  }
}

TEST(MleLoss, UnitGaussianRenyiEntropy) {
  const double analytic = std::log(2.0 * std::sqrt(std::numbers::pi));
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Matrix z(512, 1);
    for (double& v : z.values()) v = rng.normal();
    sum += mle_loss(z, Bandwidth(0.25));
  }
  EXPECT_NEAR(sum / 5.0, analytic, 0.15);
}

TEST(MleLoss, TranslationInvariantExactlyOnDyadicGrid) {
  // Dyadic coordinates keep every difference exact, so the sums match bit for bit.
  const Matrix z{{0.5, -0.25}, {0.125, 0.75}, {-1.0, 0.0}, {0.375, 0.625}};
  Matrix shifted = z;
  const double c[2] = {3.0, -0.5};
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < 2; ++j) shifted(i, j) += c[j];
  EXPECT_EQ(mle_loss(z, Bandwidth(0.4)), mle_loss(shifted, Bandwidth(0.4)));
}

TEST(MleLoss, TranslationInvariantOnRandomBatches) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_batch(16, 3, 0.5, rng);
    Matrix shifted = z;
    const double c[3] = {rng.normal(), rng.normal(), rng.normal()};
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < 3; ++j) shifted(i, j) += c[j];
    EXPECT_NEAR(mle_loss(z, Bandwidth(0.3)), mle_loss(shifted, Bandwidth(0.3)), 1e-12);
  }
}

TEST(MleLoss, ConcentrationMonotoneInSeparation) {
  const Bandwidth bw(0.2);
  double previous = mle_loss(Matrix{{0.0}, {2.0}}, bw);
  for (double gap = 1.9; gap >= 0.0; gap -= 0.1) {
    const double current = mle_loss(Matrix{{0.0}, {gap}}, bw);
    EXPECT_LE(current, previous) << "gap=" << gap;
    previous = current;
  }
}

TEST(MleLoss, UnderflowStaysFinite) {
  // Points far apart relative to sigma: the potential is only the diagonal.
  const Matrix z{{0.0}, {100.0}};
  const double loss = mle_loss(z, Bandwidth(1e-3));
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(0.5 / std::sqrt(4.0 * std::numbers::pi * 1e-6)), 1e-9);
}

TEST(MleGrad, CoincidentPointsGiveZero) {
  const Matrix g = mle_grad(Matrix(6, 3, 0.7), Bandwidth(0.1));
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(MleGrad, MatchesCentralDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_batch(8, 3, 0.3, rng);
    const Bandwidth bw(0.25);
    const Matrix g = mle_grad(z, bw);
    std::vector<double> flat(z.values().begin(), z.values().end());
    const auto f = [&](std::vector<double>& x) { return mle_loss(from_flat(8, 3, x), bw); };
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double numeric = testing::central_difference(f, flat, i, 1e-6);
      const double analytic = g.values()[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
      EXPECT_LE(std::abs(numeric - analytic) / scale, 1e-6) << "trial " << trial << " i=" << i;
    }
  }
}

TEST(MleGrad, RowsSumToZero) {
  Rng rng(5);
  const Matrix z = random_batch(20, 4, 0.5, rng);
  const std::vector<double> sums = column_sums(mle_grad(z, Bandwidth(0.3)));
  for (double v : sums) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(MleGrad, LossAndGradAgreeWithSeparateCalls) {
  Rng rng(9);
  const Matrix z = random_batch(10, 2, 0.4, rng);
  const MleEvaluation both = mle_loss_and_grad(z, Bandwidth(0.2));
  EXPECT_EQ(both.loss, mle_loss(z, Bandwidth(0.2)));
  EXPECT_EQ(both.grad, mle_grad(z, Bandwidth(0.2)));
}

TEST(MleGrad, DescentCollapsesTwoClusters) {
  Rng rng(12);
  Matrix z(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    const bool minority = i >= 45;
    z(i, 0) = (minority ? 1.0 : 0.0) + 0.1 * rng.normal();
    z(i, 1) = 0.1 * rng.normal();
  }
  const auto gap = [&] {
    double a[2] = {0, 0};
    double b[2] = {0, 0};
    for (std::size_t i = 0; i < 50; ++i) {
      double* t = i >= 45 ? b : a;
      t[0] += z(i, 0);
      t[1] += z(i, 1);
    }
    return std::hypot(a[0] / 45 - b[0] / 5, a[1] / 45 - b[1] / 5);
  };
  const double before = gap();
  const Bandwidth bw(0.5);
  for (int step = 0; step < 200; ++step) {
    const Matrix g = mle_grad(z, bw);
    for (std::size_t k = 0; k < z.size(); ++k) z.values()[k] -= 0.5 * g.values()[k];
  }
  EXPECT_LT(gap(), 0.5 * before);
}

TEST(PairwiseAffinities, UnitDiagonalAndSymmetric) {
  Rng rng(3);
  const Matrix w = pairwise_affinities(random_batch(7, 3, 1.0, rng), Bandwidth(0.5));
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(w(i, i), 1.0);
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(w(i, j), w(j, i));
  }
}

TEST(PairwiseAffinities, DirectFormula) {
  const double sigma = 0.3;
  const Matrix w = pairwise_affinities(Matrix{{0.0}, {2.0 * sigma}}, Bandwidth(sigma));
  EXPECT_NEAR(w(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(w(0, 1), 0.367879, 1e-6);
}

TEST(PairwiseAffinities, BandwidthLimits) {
  const Matrix z{{0.0, 0.0}, {0.5, -0.2}, {1.0, 1.0}};
  const Matrix sharp = pairwise_affinities(z, Bandwidth(1e-3));
  const Matrix wide = pairwise_affinities(z, Bandwidth(1e3));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      EXPECT_LT(sharp(i, j), 1e-100);
      EXPECT_GT(wide(i, j), 1.0 - 1e-6);
    }
  }
}

}  // namespace
}  // namespace mle_uvad
