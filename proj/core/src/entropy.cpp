// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "mle_uvad/entropy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mle_uvad/error.hpp"
#include "mle_uvad/log.hpp"

namespace mle_uvad {
namespace {

constexpr double kPotentialFloor = 1e-300;

void check_latents(const Matrix& latents, const char* op) {
  if (latents.rows() == 0 || latents.cols() == 0) {
    throw ShapeError(std::string(op) + ": latent batch must have at least one row and column");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

// ln of (4 pi sigma^2)^(-d/2), the peak of K_{sqrt(2) sigma} in d dimensions.
double log_merged_kernel_peak(Bandwidth bw, std::size_t d) {
  const double s = bw.sigma();
  return -0.5 * static_cast<double>(d) * std::log(4.0 * std::numbers::pi * s * s);
}

// Sum over all ordered pairs of w_ij, ascending (i, j).
double affinity_sum(const Matrix& latents, Bandwidth bw) {
  const double inv = 1.0 / (4.0 * bw.sigma() * bw.sigma());
  const std::size_t n = latents.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      total += std::exp(-squared_distance(latents.row(i), latents.row(j)) * inv);
    }
  }
  return total;
}

double loss_from_affinity_sum(double sum, const Matrix& latents, Bandwidth bw) {
  const double n = static_cast<double>(latents.rows());
  const double log_mean = std::log(sum) - 2.0 * std::log(n);
  const double log_potential = log_merged_kernel_peak(bw, latents.cols()) + log_mean;
  if (log_potential < std::log(kPotentialFloor)) {
    log::warn("information potential below 1e-300 (ln V = " + std::to_string(log_potential) +
              "); sigma=" + std::to_string(bw.sigma()) + " is badly matched to the latent scale");
  }
  return -log_potential;
}

}  // namespace

Bandwidth::Bandwidth(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("kernel bandwidth sigma must be positive and finite, got " +
                      std::to_string(sigma));
  }
}

double gaussian_kernel(double sq_dist, Bandwidth bandwidth, std::size_t d) {
  if (sq_dist < 0.0) throw ConfigError("gaussian_kernel: negative squared distance");
  const double var = bandwidth.sigma() * bandwidth.sigma();
  const double norm = std::pow(2.0 * std::numbers::pi * var, -0.5 * static_cast<double>(d));
  return norm * std::exp(-sq_dist / (2.0 * var));
}

double information_potential(const Matrix& latents, Bandwidth bandwidth) {
  check_latents(latents, "information_potential");
  const Bandwidth merged(std::numbers::sqrt2 * bandwidth.sigma());
  const std::size_t n = latents.rows();
  const std::size_t d = latents.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      total += gaussian_kernel(squared_distance(latents.row(i), latents.row(j)), merged, d);
    }
  }
  const double nn = static_cast<double>(n);
  return total / (nn * nn);
}

double mle_loss(const Matrix& latents, Bandwidth bandwidth) {
  check_latents(latents, "mle_loss");
  return loss_from_affinity_sum(affinity_sum(latents, bandwidth), latents, bandwidth);
}

MleEvaluation mle_loss_and_grad(const Matrix& latents, Bandwidth bandwidth) {
  check_latents(latents, "mle_grad");
  const std::size_t n = latents.rows();
  const std::size_t d = latents.cols();
  const double sigma2 = bandwidth.sigma() * bandwidth.sigma();
  const Matrix w = pairwise_affinities(latents, bandwidth);

  double total = 0.0;
  for (double v : w.values()) total += v;

  MleEvaluation out{loss_from_affinity_sum(total, latents, bandwidth), Matrix(n, d)};
  const double scale = 1.0 / (sigma2 * total);
  for (std::size_t k = 0; k < n; ++k) {
    const auto zk = latents.row(k);
    auto gk = out.grad.row(k);
    for (std::size_t j = 0; j < n; ++j) {
      const double wkj = w(k, j);
      if (wkj == 0.0 || j == k) continue;
      const auto zj = latents.row(j);
      for (std::size_t c = 0; c < d; ++c) gk[c] += (zk[c] - zj[c]) * wkj;
    }
    for (double& g : gk) g *= scale;
  }
  return out;
}

Matrix mle_grad(const Matrix& latents, Bandwidth bandwidth) {
  return mle_loss_and_grad(latents, bandwidth).grad;
}

Matrix pairwise_affinities(const Matrix& latents, Bandwidth bandwidth) {
  check_latents(latents, "pairwise_affinities");
  const std::size_t n = latents.rows();
  const double inv = 1.0 / (4.0 * bandwidth.sigma() * bandwidth.sigma());
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    w(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(-squared_distance(latents.row(i), latents.row(j)) * inv);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

}  // namespace mle_uvad
