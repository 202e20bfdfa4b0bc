// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "mle_uvad/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "binary_io.hpp"
#include "mle_uvad/error.hpp"
#include "mle_uvad/rng.hpp"

namespace mle_uvad {
namespace {

constexpr std::string_view kDatasetMagic = "MLEDS1";

// Mean event length, in frames, of generated anomaly runs.
constexpr double kMeanEventLength = 40.0;

struct Event {
  std::size_t start;
  std::size_t length;
};

// Splits `total` into `parts` positive integers at random.
std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts,
                                            std::size_t min_each, Rng& rng) {
  std::vector<std::size_t> out(parts, min_each);
  for (std::size_t i = 0; i < total - parts * min_each; ++i) ++out[rng.index(parts)];
  return out;
}

std::vector<Event> layout_events(std::size_t frames, std::size_t anomalies, Rng& rng) {
  if (anomalies == 0) return {};
  const std::size_t normals = frames - anomalies;
  std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(anomalies) / kMeanEventLength)));
  k = std::min({k, anomalies, normals + 1});
  const auto lengths = random_composition(anomalies, k, 1, rng);
  // k + 1 gaps; the k - 1 interior gaps hold at least one normal frame.
  std::vector<std::size_t> gaps(k + 1, 0);
  for (std::size_t i = 1; i < k; ++i) gaps[i] = 1;
  const std::size_t spare = normals - (k - 1);
  for (std::size_t i = 0; i < spare; ++i) ++gaps[rng.index(k + 1)];
  std::vector<Event> events;
  std::size_t t = 0;
  for (std::size_t e = 0; e < k; ++e) {
    t += gaps[e];
    events.push_back({t, lengths[e]});
    t += lengths[e];
  }
  return events;
}

struct Scene {
  double phase_x;
  double phase_y;
  double period_x;
  double period_y;
  double freq_x;
  double freq_y;
  double texture_phase;
  std::size_t bar_row;
};

Scene draw_scene(std::size_t h, Rng& rng) {
  Scene s;
  s.phase_x = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.phase_y = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.period_x = rng.uniform(180.0, 260.0);
  s.period_y = rng.uniform(120.0, 170.0);
  s.freq_x = rng.uniform(1.5, 2.5);
  s.freq_y = rng.uniform(1.0, 2.0);
  s.texture_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.bar_row = static_cast<std::size_t>(rng.uniform(0.6, 0.8) * static_cast<double>(h));
  return s;
}

// Clean normal frame at time t, row-major H x W: a static shaded scene with
// one bright bar, plus a blob moving along a Lissajous path.
void render_normal(const Scene& scene, std::size_t t, std::size_t h, std::size_t w,
                   std::span<double> out) {
  const double ft = static_cast<double>(t);
  const double fh = static_cast<double>(h);
  const double fw = static_cast<double>(w);
  const double two_pi = 2.0 * std::numbers::pi;
  const double cx = 0.5 * (fw - 1.0) + 0.3 * fw * std::sin(two_pi * ft / scene.period_x + scene.phase_x);
  const double cy = 0.5 * (fh - 1.0) + 0.3 * fh * std::sin(two_pi * ft / scene.period_y + scene.phase_y);
  const double radius = 0.12 * std::min(fh, fw);
  const double inv = 1.0 / (2.0 * radius * radius);
  const std::size_t bar_half = std::max<std::size_t>(1, h / 16);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / fw;
      const double v = static_cast<double>(y) / fh;
      double bg = 0.3 + 0.15 * v +
                  0.12 * std::sin(two_pi * scene.freq_x * u + scene.texture_phase) *
                      std::cos(two_pi * scene.freq_y * v);
      if (y + bar_half >= scene.bar_row && y < scene.bar_row + bar_half) bg += 0.25;
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      out[y * w + x] = bg + 0.35 * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
}

// Per-event anomaly parameters.
struct AnomalyParams {
  double cx = 0.0;
  double cy = 0.0;
  double gamma = 1.0;
};

AnomalyParams draw_anomaly(AnomalyMode mode, const std::vector<AnomalyParams>& sites,
                           std::size_t h, std::size_t w, Rng& rng) {
  AnomalyParams p = sites[rng.index(sites.size())];
  p.cx += rng.uniform(-0.02, 0.02) * static_cast<double>(w - 1);
  p.cy += rng.uniform(-0.02, 0.02) * static_cast<double>(h - 1);
  if (mode == AnomalyMode::intensity) p.gamma = rng.uniform() < 0.5 ? 0.4 : 2.5;
  return p;
}

// Smallest radius whose disk covers at least 10% of the frame.
double occlusion_radius(std::size_t h, std::size_t w) {
  return std::ceil(std::sqrt(0.1 * static_cast<double>(h * w) / std::numbers::pi)) + 0.5;
}

void apply_anomaly(AnomalyMode mode, const AnomalyParams& p, std::size_t h, std::size_t w,
                   std::span<double> frame) {
  switch (mode) {
    case AnomalyMode::occlusion: {
      const double r = occlusion_radius(h, w);
      // Keep the whole disk inside the frame.
      const double cx = std::clamp(p.cx, r, static_cast<double>(w - 1) - r);
      const double cy = std::clamp(p.cy, r, static_cast<double>(h - 1) - r);
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double dx = static_cast<double>(x) - cx;
          const double dy = static_cast<double>(y) - cy;
          if (dx * dx + dy * dy <= r * r) frame[y * w + x] = 0.02;
        }
      }
      break;
    }
    case AnomalyMode::intensity:
      for (double& v : frame) v = std::pow(std::clamp(v, 0.0, 1.0), p.gamma);
      break;
    case AnomalyMode::texture: {
      const std::size_t side = std::max<std::size_t>(2, std::min(h, w) / 3);
      const auto x0 = static_cast<std::size_t>(
          std::clamp(p.cx - static_cast<double>(side) / 2.0, 0.0, static_cast<double>(w - side)));
      const auto y0 = static_cast<std::size_t>(
          std::clamp(p.cy - static_cast<double>(side) / 2.0, 0.0, static_cast<double>(h - side)));
      for (std::size_t y = y0; y < y0 + side; ++y) {
        for (std::size_t x = x0; x < x0 + side; ++x) {
          frame[y * w + x] = ((x + y) % 2 == 0) ? 0.95 : 0.05;
        }
      }
      break;
    }
  }
}

void check_pixels(const Matrix& frames, const std::string& where) {
  const auto v = frames.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw IoError(where + ": pixel " + std::to_string(i % frames.cols()) + " of frame " +
                    std::to_string(i / frames.cols()) + " is " + std::to_string(v[i]) +
                    ", outside [0,1]");
    }
  }
}

}  // namespace

std::size_t Dataset::anomaly_count() const {
  if (!labels) return 0;
  return static_cast<std::size_t>(std::count(labels->begin(), labels->end(), true));
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(channels) * height * width != frame_dim()) {
    throw ShapeError("dataset: C*H*W = " +
                     std::to_string(static_cast<std::size_t>(channels) * height * width) +
                     " but frame dim is " + std::to_string(frame_dim()));
  }
  if (labels && labels->size() != frame_count()) {
    throw ShapeError("dataset: " + std::to_string(labels->size()) + " labels for " +
                     std::to_string(frame_count()) + " frames");
  }
  for (double v : frames.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("dataset: pixel value outside [0,1]");
  }
}

std::string_view to_string(AnomalyMode m) {
  switch (m) {
    case AnomalyMode::occlusion:
      return "occlusion";
    case AnomalyMode::intensity:
      return "intensity";
    case AnomalyMode::texture:
      return "texture";
  }
  return "unknown";
}

AnomalyMode anomaly_mode_from_string(std::string_view name) {
  if (name == "occlusion") return AnomalyMode::occlusion;
  if (name == "intensity") return AnomalyMode::intensity;
  if (name == "texture") return AnomalyMode::texture;
  throw ConfigError("unknown anomaly mode '" + std::string(name) +
                    "' (expected occlusion|intensity|texture)");
}

void SyntheticSpec::validate() const {
  if (height < 4 || width < 4) throw ConfigError("synthetic frames must be at least 4x4");
  if (frame_count < 2) throw ConfigError("synthetic video needs at least 2 frames");
  if (!(anomaly_ratio >= 0.0 && anomaly_ratio < 1.0)) {
    throw ConfigError("anomaly ratio must lie in [0, 1), got " + std::to_string(anomaly_ratio));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("noise_std must be non-negative");
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed + seed_offset::generator);
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  const std::size_t t_count = spec.frame_count;
  const auto anomalies = static_cast<std::size_t>(
      std::llround(spec.anomaly_ratio * static_cast<double>(t_count)));
  if (anomalies >= t_count) throw ConfigError("anomaly ratio leaves no normal frames");

  const Scene scene = draw_scene(h, rng);

  const auto events = layout_events(t_count, anomalies, rng);
  // Anomalies recur at a few fixed spots of the scene, picked per event.
  constexpr std::size_t k = 6;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<AnomalyParams> sites(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double a = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    sites[i].cx = (0.5 + 0.3 * std::cos(a)) * static_cast<double>(w - 1);
    sites[i].cy = (0.5 + 0.3 * std::sin(a)) * static_cast<double>(h - 1);
  }
  std::vector<AnomalyParams> event_params;
  for (std::size_t e = 0; e < events.size(); ++e) {
    event_params.push_back(draw_anomaly(spec.anomaly_mode, sites, h, w, rng));
  }

  Dataset ds;
  ds.channels = 1;
  ds.height = static_cast<std::uint32_t>(h);
  ds.width = static_cast<std::uint32_t>(w);
  ds.frames = Matrix(t_count, h * w);
  ds.labels = std::vector<bool>(t_count, false);
  std::vector<const AnomalyParams*> active(t_count, nullptr);
  for (std::size_t e = 0; e < events.size(); ++e) {
    for (std::size_t t = events[e].start; t < events[e].start + events[e].length; ++t) {
      (*ds.labels)[t] = true;
      active[t] = &event_params[e];
    }
  }
  for (std::size_t t = 0; t < t_count; ++t) {
    auto frame = ds.frames.row(t);
    render_normal(scene, t, h, w, frame);
    if (active[t] != nullptr) apply_anomaly(spec.anomaly_mode, *active[t], h, w, frame);
    for (double& v : frame) {
      v = std::clamp(v + spec.noise_std * rng.normal(), 0.0, 1.0);
    }
  }
  return ds;
}

Dataset subsample_to_ratio(const Dataset& dataset, double target_ratio, std::uint64_t seed) {
  if (!dataset.labels) throw ConfigError("subsample_to_ratio: dataset has no labels");
  if (!(target_ratio >= 0.0 && target_ratio < 1.0)) {
    throw ConfigError("subsample_to_ratio: target ratio must lie in [0, 1)");
  }
  const std::size_t t_count = dataset.frame_count();
  std::vector<std::size_t> anomalies;
  std::vector<std::size_t> normals;
  for (std::size_t i = 0; i < t_count; ++i) {
    ((*dataset.labels)[i] ? anomalies : normals).push_back(i);
  }
  const auto want_anomalies = static_cast<std::size_t>(
      std::llround(target_ratio * static_cast<double>(t_count)));
  const std::size_t want_normals = t_count - want_anomalies;
  if (want_anomalies > anomalies.size()) {
    throw ConfigError("subsample_to_ratio: ratio " + std::to_string(target_ratio) + " needs " +
                      std::to_string(want_anomalies) + " anomalous frames but only " +
                      std::to_string(anomalies.size()) + " are available (" +
                      std::to_string(normals.size()) + " normal)");
  }
  if (want_normals > 0 && normals.empty()) {
    throw ConfigError("subsample_to_ratio: no normal frames available");
  }

  Rng rng(seed + seed_offset::subsample);
  // copies[i] = how many times source frame i appears in the output.
  std::vector<std::size_t> copies(t_count, 0);
  auto pick_without_replacement = [&](std::vector<std::size_t> pool, std::size_t k) {
    // Partial Fisher-Yates: the first k entries become the sample.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      ++copies[pool[i]];
    }
  };
  pick_without_replacement(anomalies, want_anomalies);
  if (want_normals <= normals.size()) {
    pick_without_replacement(normals, want_normals);
  } else {
    for (std::size_t i : normals) copies[i] = 1;
    for (std::size_t i = normals.size(); i < want_normals; ++i) {
      ++copies[normals[rng.index(normals.size())]];
    }
  }

  Dataset out;
  out.channels = dataset.channels;
  out.height = dataset.height;
  out.width = dataset.width;
  out.frames = Matrix(t_count, dataset.frame_dim());
  out.labels = std::vector<bool>();
  out.labels->reserve(t_count);
  std::size_t row = 0;
  for (std::size_t i = 0; i < t_count; ++i) {
    for (std::size_t c = 0; c < copies[i]; ++c) {
      const auto src = dataset.frames.row(i);
      std::copy(src.begin(), src.end(), out.frames.row(row++).begin());
      out.labels->push_back((*dataset.labels)[i]);
    }
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  binary::Writer w;
  w.bytes(kDatasetMagic);
  w.u32(static_cast<std::uint32_t>(dataset.frame_count()));
  w.u32(dataset.channels);
  w.u32(dataset.height);
  w.u32(dataset.width);
  w.u8(dataset.labels ? 1 : 0);
  for (double v : dataset.frames.values()) w.f64(v);
  if (dataset.labels) {
    for (bool b : *dataset.labels) w.u8(b ? 1 : 0);
  }
  binary::write_file(path, w.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
  const std::string bytes = binary::read_file(path);
  const std::string what = "dataset " + path.string();
  binary::Reader r(bytes, what);
  if (bytes.size() < kDatasetMagic.size() || r.bytes(kDatasetMagic.size()) != kDatasetMagic) {
    throw IoError(what + ": bad magic (expected MLEDS1)");
  }
  const std::uint32_t t_count = r.u32();
  Dataset ds;
  ds.channels = r.u32();
  ds.height = r.u32();
  ds.width = r.u32();
  const std::uint8_t has_labels = r.u8();
  if (has_labels > 1) throw IoError(what + ": has_labels byte must be 0 or 1");
  const std::uint64_t dim = static_cast<std::uint64_t>(ds.channels) * ds.height * ds.width;
  if (dim == 0) throw IoError(what + ": zero frame dimension");
  const std::uint64_t pixel_count = dim * t_count;
  if (pixel_count > r.remaining() / 8) {
    throw IoError(what + ": truncated payload (" + std::to_string(t_count) + " frames of " +
                  std::to_string(dim) + " pixels need " + std::to_string(pixel_count * 8) +
                  " bytes, " + std::to_string(r.remaining()) + " remain)");
  }
  std::vector<double> pixels(pixel_count);
  for (double& v : pixels) v = r.f64();
  ds.frames = Matrix(t_count, dim, std::move(pixels));
  check_pixels(ds.frames, what);
  if (has_labels == 1) {
    std::vector<bool> labels(t_count);
    for (std::uint32_t i = 0; i < t_count; ++i) {
      const std::uint8_t b = r.u8();
      if (b > 1) throw IoError(what + ": label byte " + std::to_string(i) + " is not 0/1");
      labels[i] = b == 1;
    }
    ds.labels = std::move(labels);
  }
  if (r.remaining() != 0) {
    throw IoError(what + ": " + std::to_string(r.remaining()) + " unexpected trailing bytes");
  }
  return ds;
}

std::vector<bool> load_labels_csv(const std::filesystem::path& path, std::size_t expected_rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty labels file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "label") {
    throw IoError(path.string() + ": expected header 'label', got '" + line + "'");
  }
  std::vector<bool> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line != "0" && line != "1") {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 0 or 1, got '" +
                    line + "'");
    }
    labels.push_back(line == "1");
  }
  if (labels.size() != expected_rows) {
    throw IoError(path.string() + ": " + std::to_string(labels.size()) +
                  " label rows but the dataset has " + std::to_string(expected_rows) + " frames");
  }
  return labels;
}

void save_labels_csv(const std::vector<bool>& labels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "label\n";
  for (bool b : labels) out << (b ? 1 : 0) << '\n';
  if (!out) throw IoError("error while writing " + path.string());
}

Matrix normalize(const Matrix& raw, double lo, double hi) {
  if (!(hi > lo)) {
    throw ConfigError("normalize: hi (" + std::to_string(hi) + ") must exceed lo (" +
                      std::to_string(lo) + ")");
  }
  const double span = hi - lo;
  return elementwise(raw, [&](double v) { return std::clamp((v - lo) / span, 0.0, 1.0); });
}

}  // namespace mle_uvad
