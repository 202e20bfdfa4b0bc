// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "mle_uvad/matrix.hpp"

namespace mle_uvad {

/// A video as T flattened frames with pixels in [0, 1].
///
/// Labels (true = anomaly) are optional and only ever used for metrics.
struct Dataset {
  std::uint32_t channels = 1;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  Matrix frames;
  std::optional<std::vector<bool>> labels;

  std::size_t frame_count() const { return frames.rows(); }
  std::size_t frame_dim() const { return frames.cols(); }
  std::size_t anomaly_count() const;
  /// Throws ShapeError / ConfigError when an invariant does not hold.
  void validate() const;
};

enum class AnomalyMode { occlusion, intensity, texture };

std::string_view to_string(AnomalyMode m);
AnomalyMode anomaly_mode_from_string(std::string_view name);

struct SyntheticSpec {
  std::size_t height = 24;
  std::size_t width = 24;
  std::size_t frame_count = 2000;
  double anomaly_ratio = 0.125;
  AnomalyMode anomaly_mode = AnomalyMode::occlusion;
  double noise_std = 0.02;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Single-channel synthetic video. Normal frames show a Gaussian blob on a
/// shaded background drifting along a smooth closed path; anomalous frames
/// come in contiguous events and add the chosen anomaly on top. Exactly
/// round(anomaly_ratio * frame_count) frames are labelled anomalous.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Same T, anomaly fraction round(target_ratio * T) / T. Anomalies and
/// normals are drawn without replacement; when more normals are needed than
/// exist, extra copies of uniformly drawn normals are inserted right after
/// their source frame. Survivors keep their temporal order. Throws
/// ConfigError when the source lacks enough anomalies.
Dataset subsample_to_ratio(const Dataset& dataset, double target_ratio, std::uint64_t seed);

/// "MLEDS1", u32 T, u32 C, u32 H, u32 W, u8 has_labels, T*D little-endian
/// f64 pixels, then T bytes of 0/1 when labelled.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// One-column CSV with header "label" and one 0/1 row per frame.
std::vector<bool> load_labels_csv(const std::filesystem::path& path, std::size_t expected_rows);
void save_labels_csv(const std::vector<bool>& labels, const std::filesystem::path& path);

/// Affine map of [lo, hi] onto [0, 1], clamped outside. Requires hi > lo.
Matrix normalize(const Matrix& raw, double lo, double hi);

}  // namespace mle_uvad
