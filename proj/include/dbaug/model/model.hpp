#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbaug/model/vocabulary.hpp"
#include "dbaug/numerics/tape.hpp"
#include "dbaug/rng.hpp"

namespace dbaug::model {

enum class Pooling { kMean, kMeanPositional };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t num_classes = 2;
  std::size_t embed_dim = 32;
  std::size_t latent_dim = 16;
  std::size_t encoder_hidden = 32;
  std::size_t decoder_hidden = 128;
  std::size_t position_dim = 16;
  std::size_t max_len = 24;
  Pooling pooling = Pooling::kMean;
  /// Encoder embeddings start uniform in [-embed_init, embed_init].
  double embed_init = 1.0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Encoder: mean-pooled token embeddings -> tanh hidden layer -> latent.
struct EncoderParams {
  nx::Tensor embedding;  // [V, E]
  nx::Tensor hidden_w;   // [E, H]
  nx::Tensor hidden_b;   // [H]
  nx::Tensor out_w;      // [H, d]
  nx::Tensor out_b;      // [d]
  Pooling pooling = Pooling::kMean;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// Linear-softmax attribute classifier over the latent.
struct ClassifierParams {
  nx::Tensor weight;  // [C, d]
  nx::Tensor bias;    // [C]

  std::size_t num_classes() const { return weight.shape()[0]; }
  std::size_t latent_dim() const { return weight.shape()[1]; }
  friend bool operator==(const ClassifierParams&, const ClassifierParams&) = default;
};

/// Per-step decoder: [z ; prev-token embedding ; positional encoding] ->
/// tanh hidden layer -> vocabulary logits.
struct DecoderParams {
  nx::Tensor embedding;  // [V, E]
  nx::Tensor hidden_w;   // [d + E + P, H]
  nx::Tensor hidden_b;   // [H]
  nx::Tensor out_w;      // [H, V]
  nx::Tensor out_b;      // [V]
  std::size_t position_dim = 16;
  std::size_t max_len = 24;

  std::size_t vocab_size() const { return embedding.shape()[0]; }
  friend bool operator==(const DecoderParams&, const DecoderParams&) = default;
};

struct LatentVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

EncoderParams init_encoder(const ModelConfig& cfg, Rng& rng);
ClassifierParams init_classifier(const ModelConfig& cfg, Rng& rng);
DecoderParams init_decoder(const ModelConfig& cfg, Rng& rng);

/// Order-sensitive hash of every parameter value, for frozen-weight checks.
std::uint64_t checksum(const EncoderParams& p);

/// Sinusoidal encoding of `position`, `dim` values.
std::vector<double> positional_encoding(std::size_t position, std::size_t dim);

/// Drops PAD ids and validates the rest against `vocab_size`.
std::vector<TokenId> strip_padding(std::span<const TokenId> tokens, std::size_t vocab_size);

// Inference (no recording).

LatentVector encode(std::span<const TokenId> tokens, const EncoderParams& theta);
std::vector<double> classify(const LatentVector& z, const ClassifierParams& pi);
/// Next-token distribution at `position`, conditioned on the last token of
/// `prefix` (BOS at position 0).
std::vector<double> decode_step(const LatentVector& z, std::span<const TokenId> prefix,
                                std::size_t position, const DecoderParams& gamma);

// Recorded forward passes used for training and latent gradients.

struct EncoderVars {
  nx::Var embedding, hidden_w, hidden_b, out_w, out_b;
  Pooling pooling = Pooling::kMean;
};
struct ClassifierVars {
  nx::Var weight, bias;
};
struct DecoderVars {
  nx::Var embedding, hidden_w, hidden_b, out_w, out_b;
  std::size_t position_dim = 0;
  std::size_t max_len = 0;
};

EncoderVars bind(nx::Tape& tape, const EncoderParams& p, bool trainable);
ClassifierVars bind(nx::Tape& tape, const ClassifierParams& p, bool trainable);
DecoderVars bind(nx::Tape& tape, const DecoderParams& p, bool trainable);

/// [B, d] latents for a batch of token sequences.
nx::Var encode(nx::Tape& tape, const EncoderVars& theta,
               std::span<const std::vector<TokenId>> batch);
/// [B, C] logits.
nx::Var classifier_logits(nx::Tape& tape, const ClassifierVars& pi, nx::Var z);
/// Teacher-forced logits for every sentence in the batch, stacked row-wise:
/// sentence b contributes one row per target step. `z` is [B, d];
/// `inputs[b]` are the conditioning tokens (BOS followed by the gold prefix).
nx::Var decoder_logits(nx::Tape& tape, const DecoderVars& gamma, nx::Var z,
                       std::span<const std::vector<TokenId>> inputs);

/// Vocabulary plus the three trained parameter sets.
struct Model {
  ModelConfig config;
  Vocabulary vocab;
  EncoderParams encoder;
  ClassifierParams classifier;
  DecoderParams decoder;
};

}  // namespace dbaug::model
