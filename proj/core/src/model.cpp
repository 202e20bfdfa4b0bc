// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "mle_uvad/model.hpp"

#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "mle_uvad/error.hpp"
#include "mle_uvad/rng.hpp"

namespace mle_uvad {
namespace {

constexpr std::string_view kModelMagic = "MLEAE1";

void check_layer(const DenseLayer& layer, std::string_view where) {
  const auto& s = layer.spec;
  if (s.in_dim == 0 || s.out_dim == 0) {
    throw ShapeError(std::string(where) + ": layer dimensions must be at least 1");
  }
  if (layer.weight.rows() != s.out_dim || layer.weight.cols() != s.in_dim ||
      layer.bias.size() != s.out_dim) {
    throw ShapeError(std::string(where) + ": weight " + layer.weight.shape_string() +
                     " / bias " + std::to_string(layer.bias.size()) +
                     " inconsistent with layer " + std::to_string(s.in_dim) + "->" +
                     std::to_string(s.out_dim));
  }
}

void check_chain(const std::vector<DenseLayer>& layers, std::string_view name) {
  if (layers.empty()) throw ShapeError(std::string(name) + " has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    check_layer(layers[i], name);
    if (i > 0 && layers[i].spec.in_dim != layers[i - 1].spec.out_dim) {
      throw ShapeError(std::string(name) + ": layer " + std::to_string(i) + " expects " +
                       std::to_string(layers[i].spec.in_dim) + " inputs but previous layer emits " +
                       std::to_string(layers[i - 1].spec.out_dim));
    }
  }
}

DenseLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.spec = {in, out, act};
  layer.weight = init_weights(out, in, in, rng);
  layer.bias.assign(out, 0.0);
  return layer;
}

std::pair<Matrix, ForwardCache> run_chain(const std::vector<DenseLayer>& layers,
                                          const Matrix& input) {
  ForwardCache cache;
  cache.inputs.reserve(layers.size());
  cache.pre_activations.reserve(layers.size());
  Matrix current = input;
  for (const auto& layer : layers) {
    Matrix pre = matmul_transposed(current, layer.weight);
    add_row_vector(pre, layer.bias);
    Matrix out = pre;
    const Activation act = layer.spec.activation;
    if (act != Activation::linear) {
      for (double& v : out.values()) v = activate(act, v);
    }
    cache.inputs.push_back(std::move(current));
    cache.pre_activations.push_back(std::move(pre));
    current = std::move(out);
  }
  cache.output = current;
  return {std::move(current), std::move(cache)};
}

// Returns the gradient with respect to the chain input.
Matrix backprop_chain(const std::vector<DenseLayer>& layers, const ForwardCache& cache,
                      Matrix grad_out, std::vector<LayerGradient>& grads) {
  if (cache.inputs.size() != layers.size() || cache.pre_activations.size() != layers.size()) {
    throw ShapeError("backward: forward cache does not match the layer chain");
  }
  grads.resize(layers.size());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = layers[li];
    const Matrix& pre = cache.pre_activations[li];
    if (grad_out.rows() != pre.rows() || grad_out.cols() != pre.cols()) {
      throw ShapeError("backward: upstream gradient " + grad_out.shape_string() +
                       " does not match layer output " + pre.shape_string());
    }
    const Activation act = layer.spec.activation;
    if (act != Activation::linear) {
      auto g = grad_out.values();
      const auto p = pre.values();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= activate_derivative(act, p[i]);
    }
    // dW = g^T x, db = column sums of g, dx = g W.
    grads[li].weight = transposed_matmul(grad_out, cache.inputs[li]);
    grads[li].bias = column_sums(grad_out);
    grad_out = matmul(grad_out, layer.weight);
  }
  return grad_out;
}

std::size_t bottleneck_split(const std::vector<DenseLayer>& layers) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i].spec.out_dim < layers[best].spec.out_dim) best = i;
  }
  return best + 1;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      return "linear";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu:
      return activation_fn::relu(x);
    case Activation::tanh:
      return activation_fn::tanh(x);
    case Activation::sigmoid:
      return activation_fn::sigmoid(x);
    case Activation::linear:
      break;
  }
  return x;
}

double activate_derivative(Activation a, double pre) {
  switch (a) {
    case Activation::relu:
      return activation_fn::relu_derivative(pre);
    case Activation::tanh:
      return activation_fn::tanh_derivative(pre);
    case Activation::sigmoid:
      return activation_fn::sigmoid_derivative(pre);
    case Activation::linear:
      break;
  }
  return 1.0;
}

std::size_t AutoencoderParams::input_dim() const {
  return encoder.empty() ? 0 : encoder.front().spec.in_dim;
}

std::size_t AutoencoderParams::latent_dim() const {
  return encoder.empty() ? 0 : encoder.back().spec.out_dim;
}

std::size_t AutoencoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* chain : {&encoder, &decoder}) {
    for (const auto& l : *chain) n += l.weight.size() + l.bias.size();
  }
  return n;
}

void AutoencoderParams::validate() const {
  check_chain(encoder, "encoder");
  check_chain(decoder, "decoder");
  if (decoder.front().spec.in_dim != latent_dim()) {
    throw ShapeError("decoder input " + std::to_string(decoder.front().spec.in_dim) +
                     " does not match latent dim " + std::to_string(latent_dim()));
  }
  if (decoder.back().spec.out_dim != input_dim()) {
    throw ShapeError("decoder output " + std::to_string(decoder.back().spec.out_dim) +
                     " does not match frame dim " + std::to_string(input_dim()));
  }
}

AutoencoderParams make_autoencoder(std::size_t input_dim,
                                   const std::vector<std::size_t>& layer_sizes, Rng& rng) {
  if (input_dim == 0) throw ConfigError("autoencoder input dimension must be at least 1");
  if (layer_sizes.empty()) throw ConfigError("layer_sizes must name at least the latent width");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("layer sizes must be at least 1");
  }
  AutoencoderParams p;
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    const bool latent = i + 1 == layer_sizes.size();
    p.encoder.push_back(
        make_layer(in, layer_sizes[i], latent ? Activation::linear : Activation::relu, rng));
    in = layer_sizes[i];
  }
  for (std::size_t i = layer_sizes.size(); i-- > 0;) {
    const std::size_t out = i == 0 ? input_dim : layer_sizes[i - 1];
    const bool last = i == 0;
    p.decoder.push_back(
        make_layer(in, out, last ? Activation::sigmoid : Activation::relu, rng));
    in = out;
  }
  p.validate();
  return p;
}

std::pair<Matrix, ForwardCache> encode(const AutoencoderParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("encode: batch " + batch.shape_string() + " has frame dim " +
                     std::to_string(batch.cols()) + ", model expects " +
                     std::to_string(params.input_dim()));
  }
  return run_chain(params.encoder, batch);
}

std::pair<Matrix, ForwardCache> decode(const AutoencoderParams& params, const Matrix& latents) {
  if (latents.cols() != params.latent_dim()) {
    throw ShapeError("decode: latents " + latents.shape_string() + " but latent dim is " +
                     std::to_string(params.latent_dim()));
  }
  return run_chain(params.decoder, latents);
}

Matrix reconstruct(const AutoencoderParams& params, const Matrix& batch) {
  return decode(params, encode(params, batch).first).first;
}

std::string_view to_string(MseVariant v) { return v == MseVariant::norm ? "norm" : "squared"; }

MseVariant mse_variant_from_string(std::string_view name) {
  if (name == "norm") return MseVariant::norm;
  if (name == "squared") return MseVariant::squared;
  throw ConfigError("unknown mse variant '" + std::string(name) + "' (expected norm|squared)");
}

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " +
                     b.shape_string() + " differ");
  }
  if (a.rows() == 0) throw ShapeError(std::string(op) + ": empty batch");
}
}  // namespace

double mse_loss(const Matrix& batch, const Matrix& recon, MseVariant variant) {
  check_same_shape(batch, recon, "mse_loss");
  const double n = static_cast<double>(batch.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto x = batch.row(i);
    const auto y = recon.row(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      sq += d * d;
    }
    total += variant == MseVariant::norm ? std::sqrt(sq) : sq;
  }
  if (variant == MseVariant::norm) return total / n;
  return total / (n * static_cast<double>(batch.cols()));
}

Matrix mse_loss_grad(const Matrix& batch, const Matrix& recon, MseVariant variant) {
  check_same_shape(batch, recon, "mse_loss_grad");
  const double n = static_cast<double>(batch.rows());
  Matrix grad(batch.rows(), batch.cols());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    const auto x = batch.row(i);
    const auto y = recon.row(i);
    auto g = grad.row(i);
    if (variant == MseVariant::squared) {
      const double scale = 2.0 / (n * static_cast<double>(batch.cols()));
      for (std::size_t j = 0; j < x.size(); ++j) g[j] = scale * (y[j] - x[j]);
      continue;
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    if (norm == 0.0) continue;
    const double scale = 1.0 / (n * norm);
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = scale * (y[j] - x[j]);
  }
  return grad;
}

ParamGradients zero_gradients(const AutoencoderParams& params) {
  ParamGradients g;
  for (const auto& l : params.encoder) {
    g.encoder.push_back({Matrix(l.weight.rows(), l.weight.cols()),
                         std::vector<double>(l.bias.size(), 0.0)});
  }
  for (const auto& l : params.decoder) {
    g.decoder.push_back({Matrix(l.weight.rows(), l.weight.cols()),
                         std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

ParamGradients backward(const AutoencoderParams& params, const ForwardCache& encoder_cache,
                        const ForwardCache& decoder_cache, const Matrix& grad_recon,
                        const Matrix& grad_latent) {
  const Matrix& latents = encoder_cache.output;
  if (grad_latent.rows() != latents.rows() || grad_latent.cols() != latents.cols()) {
    throw ShapeError("backward: grad_latent " + grad_latent.shape_string() +
                     " does not match latents " + latents.shape_string());
  }
  if (grad_recon.rows() != decoder_cache.output.rows() ||
      grad_recon.cols() != decoder_cache.output.cols()) {
    throw ShapeError("backward: grad_recon " + grad_recon.shape_string() +
                     " does not match reconstructions " + decoder_cache.output.shape_string());
  }
  ParamGradients grads;
  Matrix grad_z = backprop_chain(params.decoder, decoder_cache, grad_recon, grads.decoder);
  auto gz = grad_z.values();
  const auto gl = grad_latent.values();
  for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += gl[i];
  backprop_chain(params.encoder, encoder_cache, std::move(grad_z), grads.encoder);
  return grads;
}

std::string serialize_model(const AutoencoderParams& params) {
  params.validate();
  std::vector<DenseLayer> all = params.encoder;
  all.insert(all.end(), params.decoder.begin(), params.decoder.end());
  if (bottleneck_split(all) != params.encoder.size()) {
    throw ConfigError("model cannot be saved: the latent layer must be the first narrowest layer");
  }
  binary::Writer w;
  w.bytes(kModelMagic);
  w.u32(static_cast<std::uint32_t>(params.encoder.size() + params.decoder.size()));
  for (const auto* chain : {&params.encoder, &params.decoder}) {
    for (const auto& layer : *chain) {
      w.u32(static_cast<std::uint32_t>(layer.spec.in_dim));
      w.u32(static_cast<std::uint32_t>(layer.spec.out_dim));
      w.u8(static_cast<std::uint8_t>(layer.spec.activation));
      for (double v : layer.weight.values()) w.f64(v);
      for (double v : layer.bias) w.f64(v);
    }
  }
  return w.str();
}

AutoencoderParams deserialize_model(std::string_view bytes) {
  binary::Reader r(bytes, "model file");
  if (bytes.size() < kModelMagic.size() || r.bytes(kModelMagic.size()) != kModelMagic) {
    throw IoError("model file: bad magic (expected MLEAE1)");
  }
  const std::uint32_t count = r.u32();
  if (count < 2) throw IoError("model file: need at least 2 layers, found " + std::to_string(count));
  std::vector<DenseLayer> layers;
  layers.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    DenseLayer layer;
    layer.spec.in_dim = r.u32();
    layer.spec.out_dim = r.u32();
    const std::uint8_t code = r.u8();
    if (code > static_cast<std::uint8_t>(Activation::linear)) {
      throw IoError("model file: unknown activation code " + std::to_string(code));
    }
    layer.spec.activation = static_cast<Activation>(code);
    if (layer.spec.in_dim == 0 || layer.spec.out_dim == 0) {
      throw IoError("model file: layer " + std::to_string(i) + " has a zero dimension");
    }
    const std::size_t n_weights = layer.spec.in_dim * layer.spec.out_dim;
    if (n_weights / layer.spec.out_dim != layer.spec.in_dim ||
        n_weights > r.remaining() / 8 || layer.spec.out_dim > r.remaining() / 8 - n_weights) {
      throw IoError("model file: truncated payload in layer " + std::to_string(i));
    }
    std::vector<double> w(n_weights);
    for (double& v : w) v = r.f64();
    layer.weight = Matrix(layer.spec.out_dim, layer.spec.in_dim, std::move(w));
    layer.bias.resize(layer.spec.out_dim);
    for (double& v : layer.bias) v = r.f64();
    layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) {
    throw IoError("model file: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  const std::size_t split = bottleneck_split(layers);
  if (split >= layers.size()) throw IoError("model file: no decoder layers after the bottleneck");
  AutoencoderParams p;
  p.encoder.assign(std::make_move_iterator(layers.begin()),
                   std::make_move_iterator(layers.begin() + static_cast<std::ptrdiff_t>(split)));
  p.decoder.assign(std::make_move_iterator(layers.begin() + static_cast<std::ptrdiff_t>(split)),
                   std::make_move_iterator(layers.end()));
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
  return p;
}

void save_model(const AutoencoderParams& params, const std::filesystem::path& path) {
  binary::write_file(path, serialize_model(params));
}

AutoencoderParams load_model(const std::filesystem::path& path) {
  return deserialize_model(binary::read_file(path));
}

}  // namespace mle_uvad
