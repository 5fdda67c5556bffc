#pragma once

#include <cstdint>
#include <vector>

#include "denoise/graph.hpp"
#include "denoise/rng.hpp"
#include "denoise/tensor.hpp"

namespace denoise {

struct ModelConfig {
  std::size_t in_dim = 1;
  std::size_t hidden = 64;
  std::size_t layers = 2;
};

/// Graph-convolution weights W(l): in_dim×hidden, then hidden×hidden.
struct EncoderParams {
  std::vector<ad::Tensor> weights;
};

/// Each head is one graph-conv layer followed by a linear map.
struct DecoderParams {
  ad::Tensor structure_conv;  // hidden×hidden
  ad::Tensor structure_out;   // hidden×hidden, produces H
  ad::Tensor attribute_conv;  // hidden×hidden
  ad::Tensor attribute_out;   // hidden×in_dim, produces X̂
};

struct ModelParams {
  EncoderParams encoder;
  DecoderParams decoder;

  std::vector<ad::Tensor> encoder_params() const { return encoder.weights; }
  std::vector<ad::Tensor> decoder_params() const;
  std::vector<ad::Tensor> all() const;

  std::size_t in_dim() const;
  std::size_t hidden_dim() const;

  /// Constant copies, for inference passes that must not touch the tape.
  ModelParams frozen() const;
  /// Independent trainable copy.
  ModelParams clone() const;

  bool values_equal(const ModelParams& other) const;
};

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Drops each undirected edge independently with probability drop_rate and
/// returns the symmetric 0/1 adjacency of what survives.
Matrix perturb_edges(const Graph& g, double drop_rate, Rng& rng);

/// D̂^{-1/2}(A + I)D̂^{-1/2}.
Matrix normalize_adjacency(const Matrix& adj);

/// `propagation` is the normalized adjacency; ReLU between layers, linear last.
ad::Tensor encode(const ad::Tensor& attrs, const ad::Tensor& propagation, const EncoderParams& p);
ad::Tensor encode(const Matrix& attrs, const Matrix& adj, const EncoderParams& p);

/// Â = clamp(σ(HHᵀ), ε, 1-ε).
ad::Tensor decode_structure(const ad::Tensor& z_node, const DecoderParams& p, const ad::Tensor& propagation);
ad::Tensor decode_attributes(const ad::Tensor& z_node, const DecoderParams& p, const ad::Tensor& propagation);

/// Column mean of the node embeddings (1×hidden).
ad::Tensor readout(const ad::Tensor& z_node);

}  // namespace denoise
