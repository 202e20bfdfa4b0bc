// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "mle_uvad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "mle_uvad/detect.hpp"
#include "mle_uvad/entropy.hpp"
#include "mle_uvad/error.hpp"
#include "mle_uvad/log.hpp"
#include "mle_uvad/rng.hpp"

namespace mle_uvad {
namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void adam_update_tensor(std::span<double> param, std::span<const double> grad,
                        std::span<double> m, std::span<double> v, double step_size,
                        double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * g;
    v[i] = AdamState::beta2 * v[i] + (1.0 - AdamState::beta2) * g * g;
    const double v_hat = v[i] / bias2;
    param[i] -= step_size * m[i] / (std::sqrt(v_hat) + AdamState::epsilon);
  }
}

void update_chain(std::vector<DenseLayer>& layers, const std::vector<LayerGradient>& grads,
                  std::vector<LayerGradient>& m, std::vector<LayerGradient>& v,
                  double step_size, double bias2) {
  if (grads.size() != layers.size() || m.size() != layers.size() || v.size() != layers.size()) {
    throw ShapeError("adam_update: gradient and parameter layer counts differ");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (grads[l].weight.rows() != layers[l].weight.rows() ||
        grads[l].weight.cols() != layers[l].weight.cols() ||
        grads[l].bias.size() != layers[l].bias.size()) {
      throw ShapeError("adam_update: gradient shape mismatch in layer " + std::to_string(l));
    }
    adam_update_tensor(layers[l].weight.values(), grads[l].weight.values(), m[l].weight.values(),
                       v[l].weight.values(), step_size, bias2);
    adam_update_tensor(layers[l].bias, grads[l].bias, m[l].bias, v[l].bias, step_size, bias2);
  }
}

SweepCell run_cell(const Matrix& dataset, const TrainConfig& config,
                   const std::optional<std::vector<bool>>& labels, const EpochCallback& on_epoch) {
  SweepCell cell;
  cell.sigma = config.sigma;
  cell.lambda = config.lambda;
  if (labels) {
    const auto n = static_cast<double>(std::count(labels->begin(), labels->end(), true));
    cell.ratio = n / static_cast<double>(labels->size());
  }
  try {
    const TrainResult result = run_training(dataset, config, labels, on_epoch);
    cell.mean_pcc = result.logs.back().mean_pcc;
    cell.auc = result.logs.back().auc;
    if (labels && cell.auc) cell.pcc_gap = pcc_gap(result.final_pcc, *labels);
  } catch (const Error& e) {
    cell.status = e.what();
    log::warn("sweep cell sigma=" + format_double(config.sigma) +
              " lambda=" + format_double(config.lambda) + " failed: " + e.what());
  }
  return cell;
}

std::vector<SweepCell> run_cells(std::vector<std::function<SweepCell()>> tasks, std::size_t jobs) {
  std::vector<SweepCell> cells(tasks.size());
  jobs = std::max<std::size_t>(1, jobs);
  for (std::size_t start = 0; start < tasks.size(); start += jobs) {
    const std::size_t end = std::min(tasks.size(), start + jobs);
    std::vector<std::future<SweepCell>> running;
    for (std::size_t i = start; i < end; ++i) {
      running.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, tasks[i]));
    }
    for (std::size_t i = start; i < end; ++i) cells[i] = running[i - start].get();
  }
  return cells;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a non-negative number");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
  if (!std::isfinite(kappa)) throw ConfigError("kappa must be finite");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (lambda > 0.0 && batch_size < 2) {
    throw ConfigError("batch size must be at least 2 when lambda > 0 (entropy of one sample)");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (layer_sizes.empty()) throw ConfigError("layer sizes must name at least the latent width");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("layer sizes must be positive");
  }
}

AdamState::AdamState(const AutoencoderParams& params)
    : first_moment(zero_gradients(params)), second_moment(zero_gradients(params)) {}

void adam_update(AdamState& adam, AutoencoderParams& params, const ParamGradients& grads,
                 double learning_rate) {
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double bias1 = 1.0 - std::pow(AdamState::beta1, t);
  const double bias2 = 1.0 - std::pow(AdamState::beta2, t);
  const double step_size = learning_rate / bias1;
  update_chain(params.encoder, grads.encoder, adam.first_moment.encoder,
               adam.second_moment.encoder, step_size, bias2);
  update_chain(params.decoder, grads.decoder, adam.first_moment.decoder,
               adam.second_moment.decoder, step_size, bias2);
}

StepMetrics train_step(AutoencoderParams& params, AdamState& adam, const Matrix& batch,
                       const TrainConfig& config) {
  if (batch.rows() == 0) throw ShapeError("train_step: empty batch");
  auto [latents, enc_cache] = encode(params, batch);
  auto [recon, dec_cache] = decode(params, latents);

  StepMetrics m;
  m.mse = mse_loss(batch, recon, config.mse_variant);
  if (!std::isfinite(m.mse)) throw NumericError("reconstruction loss is not finite");

  Matrix grad_latent(latents.rows(), latents.cols());
  if (config.lambda > 0.0) {
    MleEvaluation mle = mle_loss_and_grad(latents, Bandwidth(config.sigma));
    if (!std::isfinite(mle.loss) || !mle.grad.all_finite()) {
      throw NumericError("latent entropy loss is not finite");
    }
    m.mle = mle.loss;
    grad_latent = std::move(mle.grad);
    for (double& g : grad_latent.values()) g *= config.lambda;
  } else if (batch.rows() >= 2) {
    // Logged for comparison only; contributes no gradient.
    m.mle = mle_loss(latents, Bandwidth(config.sigma));
  }
  m.total = m.mse + config.lambda * m.mle;
  if (!std::isfinite(m.total)) throw NumericError("total loss is not finite");

  const Matrix grad_recon = mse_loss_grad(batch, recon, config.mse_variant);
  const ParamGradients grads = backward(params, enc_cache, dec_cache, grad_recon, grad_latent);
  adam_update(adam, params, grads, config.learning_rate);
  return m;
}

TrainResult run_training(const Matrix& dataset, const TrainConfig& config,
                         const std::optional<std::vector<bool>>& labels,
                         const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.rows() == 0) throw ConfigError("run_training: empty dataset");
  if (dataset.rows() < config.batch_size) {
    throw ConfigError("run_training: " + std::to_string(dataset.rows()) +
                      " frames is fewer than batch size " + std::to_string(config.batch_size));
  }
  if (labels && labels->size() != dataset.rows()) {
    throw ShapeError("run_training: " + std::to_string(labels->size()) + " labels for " +
                     std::to_string(dataset.rows()) + " frames");
  }
  bool labels_usable = false;
  if (labels) {
    const auto pos = std::count(labels->begin(), labels->end(), true);
    labels_usable = pos > 0 && static_cast<std::size_t>(pos) < labels->size();
  }

  Rng init_rng(config.seed + seed_offset::init_weights);
  Rng shuffle_rng(config.seed + seed_offset::shuffle);
  TrainResult result;
  result.params = make_autoencoder(dataset.cols(), config.layer_sizes, init_rng);
  AdamState adam(result.params);

  std::vector<std::size_t> order(dataset.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches = dataset.rows() / config.batch_size;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    EpochLog log_row;
    log_row.epoch = epoch;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::span<const std::size_t> idx(order.data() + b * config.batch_size,
                                             config.batch_size);
      const Matrix batch = gather_rows(dataset, idx);
      StepMetrics m;
      try {
        m = train_step(result.params, adam, batch, config);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                           ": " + e.what());
      }
      log_row.mse += m.mse;
      log_row.mle += m.mle;
      log_row.total += m.total;
    }
    const double nb = static_cast<double>(batches);
    log_row.mse /= nb;
    log_row.mle /= nb;
    log_row.total /= nb;

    ScoreSeries scores = score_series(result.params, dataset);
    log_row.mean_pcc = threshold(scores.pcc, config.kappa).mu;
    if (labels_usable) log_row.auc = roc_auc(scores.anomaly_score, *labels);
    if (epoch == config.epochs) result.final_pcc = std::move(scores.pcc);

    result.logs.push_back(log_row);
    if (on_epoch) on_epoch(log_row);
  }
  return result;
}

void write_epoch_log_csv(const std::vector<EpochLog>& logs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,mse,mle,total,mean_pcc,auc\n";
  for (const auto& l : logs) {
    out << l.epoch << ',' << format_double(l.mse) << ',' << format_double(l.mle) << ','
        << format_double(l.total) << ',' << format_double(l.mean_pcc) << ','
        << (l.auc ? format_double(*l.auc) : "") << '\n';
  }
  if (!out) throw IoError("error while writing " + path.string());
}

std::vector<SweepCell> sweep(const Matrix& dataset, const TrainConfig& base_config,
                             const std::vector<double>& sigma_grid,
                             const std::vector<double>& lambda_grid,
                             const std::optional<std::vector<bool>>& labels,
                             const SweepOptions& options) {
  if (sigma_grid.empty() || lambda_grid.empty()) throw ConfigError("sweep: empty grid");
  std::vector<std::function<SweepCell()>> tasks;
  for (double sigma : sigma_grid) {
    for (double lambda : lambda_grid) {
      TrainConfig cfg = base_config;
      cfg.sigma = sigma;
      cfg.lambda = lambda;
      tasks.push_back([&dataset, &labels, &options, cfg] {
        return run_cell(dataset, cfg, labels, options.on_epoch);
      });
    }
  }
  return run_cells(std::move(tasks), options.jobs);
}

std::vector<SweepCell> sweep_ratio(const Dataset& source, const TrainConfig& base_config,
                                   const std::vector<double>& ratio_grid,
                                   const SweepOptions& options) {
  if (ratio_grid.empty()) throw ConfigError("sweep: empty grid");
  std::vector<std::function<SweepCell()>> tasks;
  for (double ratio : ratio_grid) {
    tasks.push_back([&source, &base_config, &options, ratio] {
      SweepCell cell;
      try {
        const Dataset ds = subsample_to_ratio(source, ratio, base_config.seed);
        cell = run_cell(ds.frames, base_config, ds.labels, options.on_epoch);
      } catch (const Error& e) {
        cell.sigma = base_config.sigma;
        cell.lambda = base_config.lambda;
        cell.status = e.what();
      }
      cell.ratio = ratio;
      return cell;
    });
  }
  return run_cells(std::move(tasks), options.jobs);
}

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "sigma,lambda,ratio,auc,pcc_gap,mean_pcc,status\n";
  for (const auto& c : cells) {
    std::string status = c.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << format_double(c.sigma) << ',' << format_double(c.lambda) << ','
        << format_double(c.ratio) << ',' << opt(c.auc) << ',' << opt(c.pcc_gap) << ','
        << opt(c.mean_pcc) << ',' << status << '\n';
  }
  if (!out) throw IoError("error while writing " + path.string());
}

}  // namespace mle_uvad
