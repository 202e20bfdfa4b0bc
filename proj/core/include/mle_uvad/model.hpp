// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mle_uvad/matrix.hpp"

namespace mle_uvad {

class Rng;

enum class Activation : std::uint8_t { relu = 0, tanh = 1, sigmoid = 2, linear = 3 };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);
double activate(Activation a, double x);
/// Derivative expressed in terms of the pre-activation value.
double activate_derivative(Activation a, double pre);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::linear;
};

/// One fully connected layer: y = act(x W^T + b), W is out_dim x in_dim.
struct DenseLayer {
  LayerSpec spec;
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

inline bool operator==(const LayerSpec& a, const LayerSpec& b) {
  return a.in_dim == b.in_dim && a.out_dim == b.out_dim && a.activation == b.activation;
}

/// Encoder and decoder layer chains.
///
/// The encoder maps frame_dim -> latent_dim, the decoder maps latent_dim back
/// to frame_dim. validate() enforces the chain invariants.
struct AutoencoderParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  std::size_t input_dim() const;
  std::size_t latent_dim() const;
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const AutoencoderParams&, const AutoencoderParams&) = default;
};

/// Builds input_dim -> hidden... -> latent (linear) and the mirrored decoder
/// with relu hidden layers and a sigmoid output. `layer_sizes` lists the
/// encoder widths after the input, the last entry being the latent width.
AutoencoderParams make_autoencoder(std::size_t input_dim,
                                   const std::vector<std::size_t>& layer_sizes,
                                   Rng& rng);

/// Intermediates of one pass through a layer chain.
struct ForwardCache {
  std::vector<Matrix> inputs;           // input to each layer
  std::vector<Matrix> pre_activations;  // x W^T + b for each layer
  Matrix output;
};

std::pair<Matrix, ForwardCache> encode(const AutoencoderParams& params, const Matrix& batch);
std::pair<Matrix, ForwardCache> decode(const AutoencoderParams& params, const Matrix& latents);
/// decode(encode(batch)).first without keeping caches.
Matrix reconstruct(const AutoencoderParams& params, const Matrix& batch);

enum class MseVariant {
  norm,     // (1/N) sum_i ||x_i - x'_i||_2
  squared,  // (1/(N D)) sum_i ||x_i - x'_i||_2^2
};

std::string_view to_string(MseVariant v);
MseVariant mse_variant_from_string(std::string_view name);

double mse_loss(const Matrix& batch, const Matrix& recon, MseVariant variant = MseVariant::norm);
/// d mse_loss / d recon. For the norm variant a row with zero error gets a
/// zero subgradient.
Matrix mse_loss_grad(const Matrix& batch, const Matrix& recon,
                     MseVariant variant = MseVariant::norm);

struct LayerGradient {
  Matrix weight;
  std::vector<double> bias;
};

struct ParamGradients {
  std::vector<LayerGradient> encoder;
  std::vector<LayerGradient> decoder;
};

ParamGradients zero_gradients(const AutoencoderParams& params);

/// Backpropagates grad_recon through the decoder, adds grad_latent at the
/// latent layer, then continues through the encoder.
ParamGradients backward(const AutoencoderParams& params, const ForwardCache& encoder_cache,
                        const ForwardCache& decoder_cache, const Matrix& grad_recon,
                        const Matrix& grad_latent);

/// Binary model file: "MLEAE1", u32 layer count, then per layer u32 in_dim,
/// u32 out_dim, u8 activation code, weights and biases as little-endian f64.
/// Encoder layers come first; the split is after the first layer with the
/// smallest out_dim (the bottleneck).
void save_model(const AutoencoderParams& params, const std::filesystem::path& path);
AutoencoderParams load_model(const std::filesystem::path& path);
std::string serialize_model(const AutoencoderParams& params);
AutoencoderParams deserialize_model(std::string_view bytes);

}  // namespace mle_uvad
