// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "mle_uvad/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "mle_uvad/error.hpp"
#include "mle_uvad/log.hpp"

namespace mle_uvad {
namespace {

constexpr std::size_t kScoreChunk = 256;

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(where + ": cannot parse number '" + s + "'");
  }
}

bool parse_bit(const std::string& s, const std::string& where) {
  if (s == "0" || s == "false") return false;
  if (s == "1" || s == "true") return true;
  throw IoError(where + ": expected 0 or 1, got '" + s + "'");
}

}  // namespace

PccResult pcc(std::span<const double> frame, std::span<const double> recon) {
  if (frame.size() != recon.size()) {
    throw ShapeError("pcc: length " + std::to_string(frame.size()) + " vs " +
                     std::to_string(recon.size()));
  }
  if (frame.size() < 2) throw ShapeError("pcc: need at least 2 values");
  const double n = static_cast<double>(frame.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    mean_x += frame[i];
    mean_y += recon[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double dx = frame[i] - mean_x;
    const double dy = recon[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const auto constant = [](std::span<const double> x) {
    return std::ranges::all_of(x, [&](double v) { return v == x.front(); });
  };
  if (sxx == 0.0 || syy == 0.0 || constant(frame) || constant(recon)) return {0.0, true};
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return {std::clamp(r, -1.0, 1.0), false};
}

ScoreSeries score_series(const AutoencoderParams& params, const Matrix& dataset) {
  if (dataset.cols() != params.input_dim()) {
    throw ShapeError("score_series: dataset frame dim " + std::to_string(dataset.cols()) +
                     " does not match model input dim " + std::to_string(params.input_dim()));
  }
  if (dataset.rows() < 2) throw ShapeError("score_series: need at least 2 frames");
  ScoreSeries s;
  s.pcc.reserve(dataset.rows());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.rows(); start += kScoreChunk) {
    const std::size_t end = std::min(dataset.rows(), start + kScoreChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Matrix chunk = gather_rows(dataset, idx);
    const Matrix recon = reconstruct(params, chunk);
    for (std::size_t r = 0; r < chunk.rows(); ++r) {
      const PccResult p = pcc(chunk.row(r), recon.row(r));
      if (p.degenerate) ++s.degenerate_frames;
      s.pcc.push_back(p.value);
    }
  }
  if (s.degenerate_frames > 0) {
    log::warn(std::to_string(s.degenerate_frames) +
              " frame(s) or reconstruction(s) are constant; their pcc is set to 0");
  }
  s.anomaly_score.reserve(s.pcc.size());
  for (double p : s.pcc) s.anomaly_score.push_back(1.0 - p);
  return s;
}

Threshold threshold(std::span<const double> pcc_series, double kappa) {
  if (pcc_series.size() < 2) throw ShapeError("threshold: need at least 2 values");
  const double n = static_cast<double>(pcc_series.size());
  double sum = 0.0;
  for (double v : pcc_series) sum += v;
  const double mu = sum / n;
  double ss = 0.0;
  for (double v : pcc_series) ss += (v - mu) * (v - mu);
  Threshold t;
  t.mu = mu;
  t.sd = std::sqrt(ss / n);
  // The summed mean of a constant series can miss the value by an ulp.
  if (std::ranges::all_of(pcc_series, [&](double v) { return v == pcc_series.front(); })) {
    t.mu = pcc_series.front();
    t.sd = 0.0;
  }
  t.kappa = kappa;
  t.tau = t.mu - kappa * t.sd;
  return t;
}

std::vector<bool> classify(std::span<const double> pcc_series, double tau) {
  std::vector<bool> flags(pcc_series.size());
  for (std::size_t i = 0; i < pcc_series.size(); ++i) flags[i] = pcc_series[i] < tau;
  return flags;
}

void apply_threshold(ScoreSeries& series, double kappa) {
  series.threshold = threshold(series.pcc, kappa);
  series.flags = classify(series.pcc, series.threshold->tau);
}

double roc_auc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("roc_auc: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(labels.size()) + " labels");
  }
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw NumericError("AUC undefined: labels contain a single class");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of 1-based midranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double pcc_gap(std::span<const double> pcc_series, const std::vector<bool>& labels) {
  if (pcc_series.size() != labels.size()) {
    throw ShapeError("pcc_gap: " + std::to_string(pcc_series.size()) + " values but " +
                     std::to_string(labels.size()) + " labels");
  }
  double sum_normal = 0.0;
  double sum_anomaly = 0.0;
  std::size_t n_normal = 0;
  std::size_t n_anomaly = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      sum_anomaly += pcc_series[i];
      ++n_anomaly;
    } else {
      sum_normal += pcc_series[i];
      ++n_normal;
    }
  }
  if (n_normal == 0 || n_anomaly == 0) {
    throw NumericError("pcc gap undefined: labels contain a single class");
  }
  return sum_normal / static_cast<double>(n_normal) -
         sum_anomaly / static_cast<double>(n_anomaly);
}

void write_scores_csv(const std::filesystem::path& path, const ScoreSeries& series,
                      const std::optional<std::vector<bool>>& labels) {
  if (labels && labels->size() != series.pcc.size()) {
    throw ShapeError("write_scores_csv: " + std::to_string(labels->size()) + " labels for " +
                     std::to_string(series.pcc.size()) + " frames");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "frame_index,pcc,anomaly_score,flagged" << (labels ? ",label" : "") << '\n';
  for (std::size_t i = 0; i < series.pcc.size(); ++i) {
    const bool flagged = i < series.flags.size() && series.flags[i];
    out << i << ',' << format_double(series.pcc[i]) << ','
        << format_double(series.anomaly_score[i]) << ',' << (flagged ? 1 : 0);
    if (labels) out << ',' << ((*labels)[i] ? 1 : 0);
    out << '\n';
  }
  if (!out) throw IoError("error while writing " + path.string());
}

std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty score file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> base = {"frame_index", "pcc", "anomaly_score", "flagged"};
  if (header.size() < 4 || !std::equal(base.begin(), base.end(), header.begin()) ||
      (header.size() == 5 && header[4] != "label") || header.size() > 5) {
    throw IoError(path.string() + ": unexpected header '" + line + "'");
  }
  const bool has_label = header.size() == 5;
  std::vector<ScoreRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) {
      throw IoError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(f.size()));
    }
    ScoreRow row;
    row.frame_index = static_cast<std::size_t>(parse_double(f[0], where));
    row.pcc = parse_double(f[1], where);
    row.anomaly_score = parse_double(f[2], where);
    row.flagged = parse_bit(f[3], where);
    if (has_label) row.label = parse_bit(f[4], where);
    rows.push_back(row);
  }
  return rows;
}

void write_threshold_csv(const std::filesystem::path& path, const Threshold& t) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "mu,sd,kappa,tau\n"
      << format_double(t.mu) << ',' << format_double(t.sd) << ',' << format_double(t.kappa) << ','
      << format_double(t.tau) << '\n';
  if (!out) throw IoError("error while writing " + path.string());
}

}  // namespace mle_uvad
