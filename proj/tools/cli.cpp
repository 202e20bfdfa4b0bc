// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include "mle_uvad/dataio.hpp"
#include "mle_uvad/detect.hpp"
#include "mle_uvad/error.hpp"
#include "mle_uvad/log.hpp"
#include "mle_uvad/model.hpp"
#include "mle_uvad/trainer.hpp"

namespace mle_uvad::cli {
namespace {

// Everything a command may be configured with. Flags override the config
// file, which overrides these defaults.
struct RunConfig {
  TrainConfig train;
  std::string mse_variant = "norm";
  std::string data_path;
  std::string labels_path;
  std::string model_path;
  std::string log_path;
  std::string out_path;
  std::string summary_path;
  std::optional<double> ratio_override;
  std::string axis = "sigma";
  std::vector<double> grid;
  std::size_t jobs = 1;
};

struct GenerateArgs {
  std::string size = "24x24";
  std::string mode = "occlusion";
  std::string out_path;
  std::string labels_csv;
  SyntheticSpec spec;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.starts_with(flag + "=");
  });
}

// Splices `key = value` lines from --config into the argument list as flags,
// skipping keys already given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::vector<std::string> extra;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      value = value.substr(1, value.size() - 2);
      value.erase(std::remove(value.begin(), value.end(), ' '), value.end());
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty() || key == "config") {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": invalid key '" + key + "'");
    }
    if (has_flag(args, "--" + key)) continue;
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void add_train_flags(CLI::App& cmd, RunConfig& rc) {
  auto& t = rc.train;
  cmd.add_option("--lambda", t.lambda, "weight of the latent entropy loss")->capture_default_str();
  cmd.add_option("--sigma", t.sigma, "kernel bandwidth")->capture_default_str();
  cmd.add_option("--kappa", t.kappa, "threshold multiplier")->capture_default_str();
  cmd.add_option("--lr", t.learning_rate, "Adam learning rate")->capture_default_str();
  cmd.add_option("--batch", t.batch_size, "mini-batch size")->capture_default_str();
  cmd.add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
  cmd.add_option("--seed", t.seed, "random seed")->capture_default_str();
  cmd.add_option("--layers", t.layer_sizes, "encoder widths, last is the latent width")
      ->delimiter(',')
      ->capture_default_str();
  cmd.add_option("--mse-variant", rc.mse_variant, "reconstruction loss: norm|squared")
      ->check(CLI::IsMember({"norm", "squared"}))
      ->capture_default_str();
  cmd.add_option("--labels", rc.labels_path, "0/1 labels CSV (metrics only)");
  cmd.add_option("--ratio", rc.ratio_override, "resample the dataset to this anomaly ratio");
}

void print_run_config(const std::string& command, const RunConfig& rc) {
  const auto& t = rc.train;
  log::info(command + " config: lambda=" + fmt(t.lambda) + " sigma=" + fmt(t.sigma) +
            " kappa=" + fmt(t.kappa) + " lr=" + fmt(t.learning_rate) +
            " batch=" + std::to_string(t.batch_size) + " epochs=" + std::to_string(t.epochs) +
            " seed=" + std::to_string(t.seed) + " layers=" + join(t.layer_sizes) +
            " mse_variant=" + rc.mse_variant +
            (rc.ratio_override ? " ratio=" + fmt(*rc.ratio_override) : ""));
}

void log_epoch(const EpochLog& e) {
  log::info("epoch " + std::to_string(e.epoch) + " mse=" + fmt(e.mse) + " mle=" + fmt(e.mle) +
            " total=" + fmt(e.total) + " mean_pcc=" + fmt(e.mean_pcc) +
            (e.auc ? " auc=" + fmt(*e.auc) : ""));
}

// Loads the dataset, applies a labels CSV and ratio override if requested.
Dataset load_training_data(const RunConfig& rc) {
  Dataset ds = load_dataset(rc.data_path);
  if (!rc.labels_path.empty()) ds.labels = load_labels_csv(rc.labels_path, ds.frame_count());
  if (rc.ratio_override) ds = subsample_to_ratio(ds, *rc.ratio_override, rc.train.seed);
  return ds;
}

int cmd_generate(const GenerateArgs& g, std::ostream& out) {
  SyntheticSpec spec = g.spec;
  const auto x = g.size.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(g.size);
    std::size_t used = 0;
    spec.height = std::stoul(g.size.substr(0, x), &used);
    spec.width = std::stoul(g.size.substr(x + 1));
  } catch (const std::exception&) {
    throw ConfigError("--size must look like HxW, got '" + g.size + "'");
  }
  spec.anomaly_mode = anomaly_mode_from_string(g.mode);
  const Dataset ds = generate_synthetic(spec);
  save_dataset(ds, g.out_path);
  if (!g.labels_csv.empty()) save_labels_csv(*ds.labels, g.labels_csv);
  out << "frames=" << ds.frame_count() << " dim=" << ds.frame_dim()
      << " anomalies=" << ds.anomaly_count() << '\n';
  return kOk;
}

int cmd_train(RunConfig rc, std::ostream& out) {
  rc.train.mse_variant = mse_variant_from_string(rc.mse_variant);
  rc.train.validate();
  print_run_config("train", rc);
  const Dataset ds = load_training_data(rc);
  const TrainResult result = run_training(ds.frames, rc.train, ds.labels, log_epoch);
  save_model(result.params, rc.model_path);
  if (!rc.log_path.empty()) write_epoch_log_csv(result.logs, rc.log_path);
  const EpochLog& last = result.logs.back();
  out << "epochs=" << result.logs.size() << " mse=" << fmt(last.mse) << " mle=" << fmt(last.mle)
      << " mean_pcc=" << fmt(last.mean_pcc);
  if (last.auc) out << " auc=" << fmt(*last.auc);
  out << '\n';
  return kOk;
}

int cmd_score(const RunConfig& rc, std::ostream& out) {
  const AutoencoderParams params = load_model(rc.model_path);
  Dataset ds = load_dataset(rc.data_path);
  if (!rc.labels_path.empty()) ds.labels = load_labels_csv(rc.labels_path, ds.frame_count());
  if (ds.frame_dim() != params.input_dim()) {
    throw ShapeError("model expects frame dim " + std::to_string(params.input_dim()) +
                     " but dataset has frame dim " + std::to_string(ds.frame_dim()));
  }
  ScoreSeries series = score_series(params, ds.frames);
  apply_threshold(series, rc.train.kappa);
  write_scores_csv(rc.out_path, series, ds.labels);
  if (!rc.summary_path.empty()) write_threshold_csv(rc.summary_path, *series.threshold);
  const auto& t = *series.threshold;
  const auto flagged = std::count(series.flags.begin(), series.flags.end(), true);
  out << "mu=" << fmt(t.mu) << " sd=" << fmt(t.sd) << " kappa=" << fmt(t.kappa)
      << " tau=" << fmt(t.tau) << " flagged=" << flagged << '\n';
  return kOk;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
  const auto rows = read_scores_csv(rc.data_path);
  if (rows.empty()) throw ConfigError("score file has no rows");
  std::vector<double> scores;
  std::vector<double> pccs;
  std::vector<bool> labels;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& r : rows) {
    if (!r.label) throw ConfigError("score file has no label column; cannot evaluate");
    scores.push_back(r.anomaly_score);
    pccs.push_back(r.pcc);
    labels.push_back(*r.label);
    if (*r.label) {
      (r.flagged ? tp : fn)++;
    } else {
      (r.flagged ? fp : tn)++;
    }
  }
  const double auc = roc_auc(scores, labels);
  const double gap = pcc_gap(pccs, labels);
  double normal_sum = 0.0;
  for (std::size_t i = 0; i < pccs.size(); ++i) {
    if (!labels[i]) normal_sum += pccs[i];
  }
  const double normal_mean = normal_sum / static_cast<double>(tn + fp);
  out << "auc=" << fmt(auc) << '\n'
      << "mean_pcc_normal=" << fmt(normal_mean) << '\n'
      << "mean_pcc_anomaly=" << fmt(normal_mean - gap) << '\n'
      << "pcc_gap=" << fmt(gap) << '\n'
      << "tp=" << tp << " fp=" << fp << " tn=" << tn << " fn=" << fn << '\n';
  return kOk;
}

int cmd_sweep(RunConfig rc, std::ostream& out) {
  rc.train.mse_variant = mse_variant_from_string(rc.mse_variant);
  rc.train.validate();
  if (rc.grid.empty()) throw ConfigError("--grid must list at least one value");
  for (double v : rc.grid) {
    if (rc.axis == "sigma" && !(v > 0.0)) {
      throw ConfigError("sigma grid values must be positive, got " + fmt(v));
    }
    if (rc.axis == "lambda" && !(v >= 0.0)) {
      throw ConfigError("lambda grid values must be non-negative, got " + fmt(v));
    }
    if (rc.axis == "ratio" && !(v > 0.0 && v < 1.0)) {
      throw ConfigError("ratios must lie in (0, 1), got " + fmt(v));
    }
  }
  print_run_config("sweep", rc);
  SweepOptions options;
  options.jobs = rc.jobs;
  options.on_epoch = log_epoch;
  std::vector<SweepCell> cells;
  if (rc.axis == "ratio") {
    Dataset ds = load_dataset(rc.data_path);
    if (!rc.labels_path.empty()) ds.labels = load_labels_csv(rc.labels_path, ds.frame_count());
    cells = sweep_ratio(ds, rc.train, rc.grid, options);
  } else {
    const Dataset ds = load_training_data(rc);
    const std::vector<double> fixed_sigma = {rc.train.sigma};
    const std::vector<double> fixed_lambda = {rc.train.lambda};
    cells = rc.axis == "sigma" ? sweep(ds.frames, rc.train, rc.grid, fixed_lambda, ds.labels, options)
                               : sweep(ds.frames, rc.train, fixed_sigma, rc.grid, ds.labels, options);
  }
  write_sweep_csv(cells, rc.out_path);
  for (const auto& c : cells) {
    out << "sigma=" << fmt(c.sigma) << " lambda=" << fmt(c.lambda) << " ratio=" << fmt(c.ratio)
        << " auc=" << (c.auc ? fmt(*c.auc) : "-") << " status=" << c.status << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised video anomaly detection with a minimal-latent-entropy autoencoder",
               "mle-uvad"};
  app.require_subcommand(1);
  std::string config_path;  // consumed by expand_config before parsing

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic labelled video");
  generate->add_option("--size", gen.size, "frame size HxW")->capture_default_str();
  generate->add_option("--frames", gen.spec.frame_count, "number of frames")->capture_default_str();
  generate->add_option("--ratio", gen.spec.anomaly_ratio, "anomaly ratio in [0,1)")
      ->capture_default_str();
  generate->add_option("--mode", gen.mode, "occlusion|intensity|texture")
      ->check(CLI::IsMember({"occlusion", "intensity", "texture"}))
      ->capture_default_str();
  generate->add_option("--noise", gen.spec.noise_std, "pixel noise std")->capture_default_str();
  generate->add_option("--seed", gen.spec.seed, "random seed")->capture_default_str();
  generate->add_option("--out", gen.out_path, "dataset file to write")->required();
  generate->add_option("--labels-csv", gen.labels_csv, "also write labels as CSV");
  generate->add_option("--config", config_path, "key = value config file; flags take precedence");

  RunConfig train_rc;
  auto* train = app.add_subcommand("train", "train an autoencoder on an unlabelled video");
  train->add_option("--data", train_rc.data_path, "dataset file")->required();
  train->add_option("--out", train_rc.model_path, "model file to write")->required();
  train->add_option("--log", train_rc.log_path, "per-epoch CSV log");
  add_train_flags(*train, train_rc);
  train->add_option("--config", config_path, "key = value config file; flags take precedence");

  RunConfig score_rc;
  auto* score = app.add_subcommand("score", "score every frame and flag anomalies");
  score->add_option("--model", score_rc.model_path, "model file")->required();
  score->add_option("--data", score_rc.data_path, "dataset file")->required();
  score->add_option("--labels", score_rc.labels_path, "0/1 labels CSV to copy into the output");
  score->add_option("--kappa", score_rc.train.kappa, "threshold multiplier")->capture_default_str();
  score->add_option("--out", score_rc.out_path, "scores CSV to write")->required();
  score->add_option("--summary", score_rc.summary_path, "threshold summary CSV to write");
  score->add_option("--config", config_path, "key = value config file; flags take precedence");

  RunConfig eval_rc;
  auto* eval = app.add_subcommand("eval", "summarise a labelled scores CSV");
  eval->add_option("--scores", eval_rc.data_path, "scores CSV with a label column")->required();

  RunConfig sweep_rc;
  auto* sweep_cmd = app.add_subcommand("sweep", "train once per grid value");
  sweep_cmd->add_option("--data", sweep_rc.data_path, "dataset file")->required();
  sweep_cmd->add_option("--axis", sweep_rc.axis, "sigma|lambda|ratio")
      ->check(CLI::IsMember({"sigma", "lambda", "ratio"}))
      ->capture_default_str();
  sweep_cmd->add_option("--grid", sweep_rc.grid, "comma-separated values")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_option("--out", sweep_rc.out_path, "sweep table CSV to write")->required();
  sweep_cmd->add_option("--jobs", sweep_rc.jobs, "cells trained concurrently")
      ->capture_default_str();
  add_train_flags(*sweep_cmd, sweep_rc);
  sweep_cmd->add_option("--config", config_path, "key = value config file; flags take precedence");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
  std::vector<const char*> argv;
  argv.reserve(expanded.size());
  for (const auto& a : expanded) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (train->parsed()) return cmd_train(train_rc, out);
    if (score->parsed()) return cmd_score(score_rc, out);
    if (eval->parsed()) return cmd_eval(eval_rc, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_rc, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}

}  // namespace mle_uvad::cli
