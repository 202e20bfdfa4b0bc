// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mle_uvad/dataio.hpp"
#include "mle_uvad/matrix.hpp"
#include "mle_uvad/model.hpp"

namespace mle_uvad {

/// Hyperparameters of one training run. Defaults follow the reference
/// setting: 70 epochs of Adam at 5e-4, batch 64, latent width 32,
/// lambda = 1, sigma = 0.1, kappa = 0.5.
struct TrainConfig {
  double lambda = 1.0;
  double sigma = 0.1;
  double kappa = 0.5;
  double learning_rate = 5e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 70;
  std::uint64_t seed = 7;
  std::vector<std::size_t> layer_sizes = {128, 64, 32};
  MseVariant mse_variant = MseVariant::norm;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  ParamGradients first_moment;
  ParamGradients second_moment;
  std::uint64_t step = 0;

  explicit AdamState(const AutoencoderParams& params);
};

/// Bias-corrected Adam step on every weight and bias.
void adam_update(AdamState& adam, AutoencoderParams& params, const ParamGradients& grads,
                 double learning_rate);

struct StepMetrics {
  double mse = 0.0;
  double mle = 0.0;
  double total = 0.0;
};

/// One forward pass, L = mse + lambda * mle(sigma) on the batch latents,
/// backward with the entropy gradient injected at the latent layer, one Adam
/// update. Reported losses are those of the pre-update forward pass. Throws
/// NumericError naming the component if a loss is non-finite; params and
/// adam are untouched in that case.
StepMetrics train_step(AutoencoderParams& params, AdamState& adam, const Matrix& batch,
                       const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mse = 0.0;
  double mle = 0.0;
  double total = 0.0;
  double mean_pcc = 0.0;
  std::optional<double> auc;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  AutoencoderParams params;
  std::vector<EpochLog> logs;
  /// pcc per frame after the final epoch, in dataset order.
  std::vector<double> final_pcc;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains from a seeded initialisation on `dataset` (T x D). Frames are
/// reshuffled every epoch and split into full batches; the last short batch
/// is dropped. After each epoch the whole dataset is scored in order. Labels
/// feed the AUC column only.
TrainResult run_training(const Matrix& dataset, const TrainConfig& config,
                         const std::optional<std::vector<bool>>& labels = std::nullopt,
                         const EpochCallback& on_epoch = {});

void write_epoch_log_csv(const std::vector<EpochLog>& logs, const std::filesystem::path& path);

struct SweepCell {
  double sigma = 0.0;
  double lambda = 0.0;
  double ratio = 0.0;  // anomaly ratio of the training data
  std::optional<double> auc;
  std::optional<double> pcc_gap;
  std::optional<double> mean_pcc;
  std::string status = "ok";
};

struct SweepOptions {
  /// Number of cells trained concurrently. Output order never depends on it.
  std::size_t jobs = 1;
  EpochCallback on_epoch;
};

/// One run_training per (sigma, lambda) pair, sigma-major. Every cell starts
/// from base_config.seed, so a 1x1 sweep reproduces run_training. A failing
/// cell is recorded with its error as status and the sweep continues.
std::vector<SweepCell> sweep(const Matrix& dataset, const TrainConfig& base_config,
                             const std::vector<double>& sigma_grid,
                             const std::vector<double>& lambda_grid,
                             const std::optional<std::vector<bool>>& labels,
                             const SweepOptions& options = {});

/// One run per anomaly ratio, each on subsample_to_ratio(source, ratio, seed).
std::vector<SweepCell> sweep_ratio(const Dataset& source, const TrainConfig& base_config,
                                   const std::vector<double>& ratio_grid,
                                   const SweepOptions& options = {});

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::filesystem::path& path);

}  // namespace mle_uvad
