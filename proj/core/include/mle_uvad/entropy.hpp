// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "mle_uvad/matrix.hpp"

namespace mle_uvad {

/// Gaussian kernel width. Construction rejects non-positive or non-finite
/// values with ConfigError.
class Bandwidth {
 public:
  explicit Bandwidth(double sigma);
  double sigma() const { return sigma_; }

 private:
  double sigma_;
};

/// Isotropic d-variate Gaussian density at squared distance `sq_dist`:
/// (2 pi sigma^2)^(-d/2) exp(-sq_dist / (2 sigma^2)).
double gaussian_kernel(double sq_dist, Bandwidth bandwidth, std::size_t d);

/// Quadratic information potential of a latent batch (N x d rows):
///
///   V = (1/N^2) sum_i sum_j K_{sqrt(2) sigma}(||z_i - z_j||^2)
///
/// which is the integral of the squared Parzen estimate with kernel width
/// sigma. Diagonal terms are included. The pairwise sum runs over (i, j) in
/// ascending order.
double information_potential(const Matrix& latents, Bandwidth bandwidth);

/// Renyi order-2 entropy estimate -ln V.
///
/// Evaluated as -ln C - ln(mean_ij w_ij) with C the kernel normalisation and
/// w_ij the affinities below, so it stays finite even where V itself would
/// underflow (a warning is logged in that case).
double mle_loss(const Matrix& latents, Bandwidth bandwidth);

/// Gradient of mle_loss with respect to every latent row:
///
///   dL/dz_k = (1 / (sigma^2 S)) sum_j (z_k - z_j) w_kj,   S = sum_ij w_ij
///
/// The normalisation constant cancels, so only the affinities enter.
/// Descending this gradient moves each row toward its kernel-weighted
/// neighbourhood mean.
Matrix mle_grad(const Matrix& latents, Bandwidth bandwidth);

/// Loss and gradient from one pass over the pairs.
struct MleEvaluation {
  double loss;
  Matrix grad;
};
MleEvaluation mle_loss_and_grad(const Matrix& latents, Bandwidth bandwidth);

/// w_ij = exp(-||z_i - z_j||^2 / (4 sigma^2)); symmetric, unit diagonal.
Matrix pairwise_affinities(const Matrix& latents, Bandwidth bandwidth);

}  // namespace mle_uvad
