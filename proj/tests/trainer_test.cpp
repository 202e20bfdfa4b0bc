// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "mle_uvad/dataio.hpp"
#include "mle_uvad/entropy.hpp"
#include "mle_uvad/error.hpp"
#include "mle_uvad/model.hpp"
#include "mle_uvad/rng.hpp"
#include "mle_uvad/trainer.hpp"

namespace mle_uvad {
namespace {

Dataset small_dataset() {
  SyntheticSpec s;
  s.height = 8;
  s.width = 8;
  s.frame_count = 160;
  s.anomaly_ratio = 0.2;
  return generate_synthetic(s);
}

TrainConfig small_config() {
  TrainConfig c;
  c.layer_sizes = {16, 4};
  c.batch_size = 32;
  c.epochs = 3;
  c.learning_rate = 1e-3;
  c.sigma = 0.5;
  return c;
}

Matrix toy_batch(Rng& rng) {
  Matrix x(8, 6);
  for (double& v : x.values()) v = rng.uniform();
  return x;
}

std::vector<double> flat(const AutoencoderParams& p) {
  std::vector<double> out;
  for (const auto* side : {&p.encoder, &p.decoder}) {
    for (const DenseLayer& l : *side) {
      out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
  }
  return out;
}

TEST(TrainConfig, ValidatesInvariants) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  TrainConfig c;
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lambda = 0.0;
  EXPECT_NO_THROW(c.validate());
  c = TrainConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.sigma = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.lambda = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainConfig, DefaultsMatchProtocol) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 70u);
  EXPECT_EQ(c.learning_rate, 5e-4);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.layer_sizes.back(), 32u);
  EXPECT_EQ(c.kappa, 0.5);
  EXPECT_EQ(c.lambda, 1.0);
  EXPECT_EQ(c.sigma, 0.1);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Rng rng(1);
  AutoencoderParams p = make_autoencoder(6, {4, 2}, rng);
  const AutoencoderParams before = p;
  AdamState adam(p);
  adam_update(adam, p, zero_gradients(p), 1e-3);
  EXPECT_EQ(p, before);
  EXPECT_EQ(adam.step, 1u);
}

TEST(Adam, FirstStepClosedForm) {
  Rng rng(2);
  AutoencoderParams p = make_autoencoder(6, {4, 2}, rng);
  const std::vector<double> before = flat(p);
  ParamGradients g = zero_gradients(p);
  for (auto* side : {&g.encoder, &g.decoder}) {
    for (LayerGradient& lg : *side) {
      for (double& v : lg.weight.values()) v = rng.uniform(-2.0, 2.0);
      for (double& v : lg.bias) v = rng.uniform(-2.0, 2.0);
    }
  }
  AdamState adam(p);
  const double lr = 1e-3;
  adam_update(adam, p, g, lr);
  const std::vector<double> after = flat(p);
  std::vector<double> grads;
  for (const auto* side : {&g.encoder, &g.decoder}) {
    for (const LayerGradient& lg : *side) {
      grads.insert(grads.end(), lg.weight.values().begin(), lg.weight.values().end());
      grads.insert(grads.end(), lg.bias.begin(), lg.bias.end());
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    // m_hat = g and v_hat = g^2 after bias correction.
    const double expected = -lr * grads[i] / (std::abs(grads[i]) + AdamState::epsilon);
    EXPECT_NEAR(after[i] - before[i], expected, 1e-15);
    EXPECT_NEAR(std::abs(after[i] - before[i]), lr, 1e-8);
  }
}

TEST(TrainStep, LambdaZeroMatchesMseOnlyStep) {
  Rng rng(3);
  const Matrix x = toy_batch(rng);
  AutoencoderParams a = make_autoencoder(6, {4, 2}, rng);
  AutoencoderParams b = a;
  AdamState adam_a(a);
  AdamState adam_b(b);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.learning_rate = 1e-3;
  train_step(a, adam_a, x, cfg);

  const auto [z, ec] = encode(b, x);
  const auto [r, dc] = decode(b, z);
  const ParamGradients g = backward(b, ec, dc, mse_loss_grad(x, r), Matrix(z.rows(), z.cols()));
  adam_update(adam_b, b, g, cfg.learning_rate);
  EXPECT_EQ(a, b);
}

TEST(TrainStep, OneStepDecreasesTotalLoss) {
  Rng rng(4);
  const Matrix x = toy_batch(rng);
  AutoencoderParams p = make_autoencoder(6, {4, 2}, rng);
  AdamState adam(p);
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.sigma = 0.5;
  const StepMetrics first = train_step(p, adam, x, cfg);
  AdamState probe = adam;
  AutoencoderParams q = p;
  const StepMetrics second = train_step(q, probe, x, cfg);
  EXPECT_LT(second.total, first.total);
}

TEST(TrainStep, TotalIsMsePlusLambdaMleOfPreUpdatePass) {
  Rng rng(5);
  const Matrix x = toy_batch(rng);
  AutoencoderParams p = make_autoencoder(6, {4, 2}, rng);
  const auto [z, ec] = encode(p, x);
  const auto [r, dc] = decode(p, z);
  TrainConfig cfg;
  cfg.lambda = 0.7;
  cfg.sigma = 0.4;
  const double mse = mse_loss(x, r);
  const double mle = mle_loss(z, Bandwidth(cfg.sigma));
  AdamState adam(p);
  const StepMetrics m = train_step(p, adam, x, cfg);
  EXPECT_EQ(m.mse, mse);
  EXPECT_EQ(m.mle, mle);
  EXPECT_NEAR(m.total, mse + cfg.lambda * mle, 1e-12);
}

TEST(TrainStep, NonFiniteInputNamesComponent) {
  Rng rng(6);
  Matrix x = toy_batch(rng);
  x(0, 0) = std::numeric_limits<double>::quiet_NaN();
  AutoencoderParams p = make_autoencoder(6, {4, 2}, rng);
  AdamState adam(p);
  try {
    train_step(p, adam, x, TrainConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("loss"), std::string::npos) << e.what();
  }
}

TEST(RunTraining, SameSeedGivesIdenticalLogsAndModel) {
  const Dataset ds = small_dataset();
  const TrainResult a = run_training(ds.frames, small_config(), ds.labels);
  const TrainResult b = run_training(ds.frames, small_config(), ds.labels);
  EXPECT_EQ(a.logs, b.logs);
  EXPECT_EQ(serialize_model(a.params), serialize_model(b.params));
  ASSERT_EQ(a.logs.size(), 3u);
  EXPECT_EQ(a.logs.front().epoch, 1u);
  EXPECT_EQ(a.final_pcc.size(), ds.frame_count());
}

TEST(RunTraining, LabelsNeverTouchParameters) {
  const Dataset ds = small_dataset();
  const TrainResult with = run_training(ds.frames, small_config(), ds.labels);
  const TrainResult without = run_training(ds.frames, small_config());
  EXPECT_EQ(serialize_model(with.params), serialize_model(without.params));
  for (const EpochLog& l : without.logs) EXPECT_FALSE(l.auc.has_value());
  for (const EpochLog& l : with.logs) {
    ASSERT_TRUE(l.auc.has_value());
    EXPECT_GE(*l.auc, 0.0);
    EXPECT_LE(*l.auc, 1.0);
  }
}

TEST(RunTraining, LoggedTotalDecomposes) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.lambda = 0.3;
  for (const EpochLog& l : run_training(ds.frames, cfg).logs) {
    EXPECT_NEAR(l.total, l.mse + cfg.lambda * l.mle, 1e-12 * std::max(1.0, std::abs(l.total)));
  }
}

TEST(RunTraining, RejectsEmptyOrTooSmallDataset) {
  EXPECT_THROW(run_training(Matrix(), small_config()), ConfigError);
  EXPECT_THROW(run_training(Matrix(10, 4, 0.5), small_config()), ConfigError);
}

TEST(RunTraining, CallbackSeesEveryEpoch) {
  const Dataset ds = small_dataset();
  std::vector<std::size_t> seen;
  run_training(ds.frames, small_config(), std::nullopt,
               [&](const EpochLog& l) { seen.push_back(l.epoch); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Sweep, SingleCellMatchesRunTraining) {
  const Dataset ds = small_dataset();
  const TrainConfig cfg = small_config();
  const TrainResult direct = run_training(ds.frames, cfg, ds.labels);
  const auto cells = sweep(ds.frames, cfg, {cfg.sigma}, {cfg.lambda}, ds.labels);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].status, "ok");
  EXPECT_EQ(cells[0].auc, direct.logs.back().auc);
  EXPECT_EQ(cells[0].mean_pcc, direct.logs.back().mean_pcc);
  EXPECT_DOUBLE_EQ(cells[0].ratio, 0.2);
}

TEST(Sweep, OrderIsSigmaMajorAndIndependentOfJobs) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const auto serial = sweep(ds.frames, cfg, {0.3, 0.6}, {0.0, 1.0}, ds.labels);
  SweepOptions opts;
  opts.jobs = 3;
  const auto parallel = sweep(ds.frames, cfg, {0.3, 0.6}, {0.0, 1.0}, ds.labels, opts);
  ASSERT_EQ(serial.size(), 4u);
  const double expect[4][2] = {{0.3, 0.0}, {0.3, 1.0}, {0.6, 0.0}, {0.6, 1.0}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(serial[i].sigma, expect[i][0]);
    EXPECT_EQ(serial[i].lambda, expect[i][1]);
    EXPECT_EQ(serial[i].auc, parallel[i].auc);
    EXPECT_EQ(serial[i].mean_pcc, parallel[i].mean_pcc);
  }
}

TEST(Sweep, FailedCellIsRecordedAndSweepContinues) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const auto cells = sweep(ds.frames, cfg, {-1.0, 0.5}, {1.0}, ds.labels);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_NE(cells[0].status, "ok");
  EXPECT_FALSE(cells[0].auc.has_value());
  EXPECT_EQ(cells[1].status, "ok");
  EXPECT_TRUE(cells[1].auc.has_value());
}

TEST(Sweep, RatioCellsUseSubsampledData) {
  const Dataset ds = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const auto cells = sweep_ratio(ds, cfg, {0.1, 0.9});
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].status, "ok");
  EXPECT_EQ(cells[0].ratio, 0.1);
  EXPECT_NE(cells[1].status, "ok");  // only 20% anomalies available
}

TEST(Sweep, EmptyGridRejected) {
  const Dataset ds = small_dataset();
  EXPECT_THROW(sweep(ds.frames, small_config(), {}, {1.0}, ds.labels), ConfigError);
}

TEST(CsvExport, EpochLogAndSweepHeaders) {
  const auto dir = std::filesystem::temp_directory_path();
  std::vector<EpochLog> logs(1);
  logs[0].epoch = 1;
  logs[0].auc = 0.5;
  write_epoch_log_csv(logs, dir / "mle_uvad_epochs.csv");
  SweepCell cell;
  cell.status = "failed, badly";
  write_sweep_csv({cell}, dir / "mle_uvad_sweep.csv");
  std::ifstream e(dir / "mle_uvad_epochs.csv");
  std::ifstream s(dir / "mle_uvad_sweep.csv");
  std::string line;
  std::getline(e, line);
  EXPECT_EQ(line, "epoch,mse,mle,total,mean_pcc,auc");
  std::getline(e, line);
  EXPECT_EQ(line, "1,0,0,0,0,0.5");
  std::getline(s, line);
  EXPECT_EQ(line, "sigma,lambda,ratio,auc,pcc_gap,mean_pcc,status");
  std::getline(s, line);
  EXPECT_EQ(line, "0,0,0,,,,failed; badly");
  std::filesystem::remove(dir / "mle_uvad_epochs.csv");
  std::filesystem::remove(dir / "mle_uvad_sweep.csv");
}

}  // namespace
}  // namespace mle_uvad
