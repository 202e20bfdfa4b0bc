// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mle_uvad/matrix.hpp"
#include "mle_uvad/model.hpp"

namespace mle_uvad {

struct PccResult {
  double value = 0.0;
  /// One of the inputs has zero variance; value is then 0.
  bool degenerate = false;
};

/// Pearson correlation between a frame and its reconstruction. Inputs must
/// have equal length of at least 2. The result is clamped to [-1, 1].
PccResult pcc(std::span<const double> frame, std::span<const double> recon);

struct Threshold {
  double mu = 0.0;
  double sd = 0.0;  // population standard deviation
  double kappa = 0.0;
  double tau = 0.0;
};

/// Per-frame reconstruction quality over a video.
struct ScoreSeries {
  std::vector<double> pcc;
  std::vector<double> anomaly_score;  // 1 - pcc
  std::size_t degenerate_frames = 0;
  std::optional<Threshold> threshold;
  std::vector<bool> flags;
};

/// Reconstructs every row of `dataset` and scores it, in row order.
ScoreSeries score_series(const AutoencoderParams& params, const Matrix& dataset);

/// mu = mean, sd = sqrt(mean squared deviation), tau = mu - kappa * sd.
Threshold threshold(std::span<const double> pcc_series, double kappa);

/// flags[i] = pcc[i] < tau.
std::vector<bool> classify(std::span<const double> pcc_series, double tau);

/// Computes the threshold and flags in place.
void apply_threshold(ScoreSeries& series, double kappa);

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from midranks. Throws NumericError when either
/// class is empty.
double roc_auc(std::span<const double> scores, const std::vector<bool>& labels);

/// mean pcc of normal frames minus mean pcc of anomalous frames.
double pcc_gap(std::span<const double> pcc_series, const std::vector<bool>& labels);

/// Score CSV: frame_index,pcc,anomaly_score,flagged[,label]
struct ScoreRow {
  std::size_t frame_index = 0;
  double pcc = 0.0;
  double anomaly_score = 0.0;
  bool flagged = false;
  std::optional<bool> label;
};

void write_scores_csv(const std::filesystem::path& path, const ScoreSeries& series,
                      const std::optional<std::vector<bool>>& labels);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);
/// Two-line CSV "mu,sd,kappa,tau".
void write_threshold_csv(const std::filesystem::path& path, const Threshold& t);

}  // namespace mle_uvad
