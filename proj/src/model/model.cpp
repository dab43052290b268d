#include "dbaug/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dbaug/error.hpp"

namespace dbaug::model {

std::string to_string(Pooling p) { return p == Pooling::kMean ? "mean" : "mean_positional"; }

Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::kMean;
  if (s == "mean_positional") return Pooling::kMeanPositional;
  throw ValueError("unknown pooling '" + s + "'");
}

void ModelConfig::validate() const {
  if (vocab_size < kNumSpecial + 1) throw ValueError("model: vocab_size must be >= 5");
  if (num_classes < 2) throw ValueError("model: num_classes must be >= 2");
  if (latent_dim < 2) throw ValueError("model: latent_dim must be >= 2");
  if (embed_dim == 0 || encoder_hidden == 0 || decoder_hidden == 0 || position_dim == 0) {
    throw ValueError("model: layer sizes must be positive");
  }
  if (max_len < 1) throw ValueError("model: max_len must be >= 1");
  if (!(embed_init > 0.0) || !std::isfinite(embed_init)) {
    throw ValueError("model: embed_init must be positive");
  }
}

namespace {

nx::Tensor uniform_tensor(nx::Shape shape, double limit, Rng& rng) {
  nx::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = (2.0 * uniform01(rng) - 1.0) * limit;
  return t;
}

nx::Tensor xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor({fan_in, fan_out}, limit, rng);
}

// out[j] = b[j] + sum_p x[p] * W[p, j], accumulated in the same order as the
// recorded matmul so both paths agree bit for bit.
std::vector<double> affine(std::span<const double> x, const nx::Tensor& w, const nx::Tensor& b) {
  const std::size_t in = w.shape()[0], out = w.shape()[1];
  if (x.size() != in) {
    throw ShapeError("affine: input of size " + std::to_string(x.size()) +
                     " against weight " + nx::shape_str(w.shape()));
  }
  std::vector<double> y(out, 0.0);
  for (std::size_t p = 0; p < in; ++p) {
    const double xv = x[p];
    if (xv == 0.0) continue;
    const double* row = &w.at(p, 0);
    for (std::size_t j = 0; j < out; ++j) y[j] += xv * row[j];
  }
  for (std::size_t j = 0; j < out; ++j) y[j] += b[j];
  return y;
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

}  // namespace

EncoderParams init_encoder(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderParams p;
  p.embedding = uniform_tensor({cfg.vocab_size, cfg.embed_dim}, cfg.embed_init, rng);
  p.hidden_w = xavier(cfg.embed_dim, cfg.encoder_hidden, rng);
  p.hidden_b = nx::Tensor({cfg.encoder_hidden}, 0.0);
  p.out_w = xavier(cfg.encoder_hidden, cfg.latent_dim, rng);
  p.out_b = nx::Tensor({cfg.latent_dim}, 0.0);
  p.pooling = cfg.pooling;
  return p;
}

ClassifierParams init_classifier(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ClassifierParams p;
  const double limit = std::sqrt(6.0 / static_cast<double>(cfg.latent_dim + cfg.num_classes));
  p.weight = uniform_tensor({cfg.num_classes, cfg.latent_dim}, limit, rng);
  p.bias = nx::Tensor({cfg.num_classes}, 0.0);
  return p;
}

DecoderParams init_decoder(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  DecoderParams p;
  p.embedding = uniform_tensor({cfg.vocab_size, cfg.embed_dim}, 1.0, rng);
  p.hidden_w =
      xavier(cfg.latent_dim + cfg.embed_dim + cfg.position_dim, cfg.decoder_hidden, rng);
  p.hidden_b = nx::Tensor({cfg.decoder_hidden}, 0.0);
  p.out_w = xavier(cfg.decoder_hidden, cfg.vocab_size, rng);
  p.out_b = nx::Tensor({cfg.vocab_size}, 0.0);
  p.position_dim = cfg.position_dim;
  p.max_len = cfg.max_len;
  return p;
}

std::uint64_t checksum(const EncoderParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the raw bytes
  for (const nx::Tensor* t : {&p.embedding, &p.hidden_w, &p.hidden_b, &p.out_w, &p.out_b}) {
    for (double v : t->values()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

std::vector<double> positional_encoding(std::size_t position, std::size_t dim) {
  std::vector<double> pe(dim);
  const double pos = static_cast<double>(position);
  for (std::size_t i = 0; i < dim; ++i) {
    const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
    const double angle = pos / std::pow(10000.0, exponent);
    pe[i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return pe;
}

std::vector<TokenId> strip_padding(std::span<const TokenId> tokens, std::size_t vocab_size) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (auto t : tokens) {
    if (t == kPad) continue;
    if (t >= vocab_size) {
      throw ValueError("token id " + std::to_string(t) + " out of range for vocabulary of size " +
                       std::to_string(vocab_size));
    }
    ids.push_back(t);
  }
  if (ids.empty()) throw ValueError("encode: sequence is empty after removing padding");
  return ids;
}

// ---------------------------------------------------------------------------
// Inference

LatentVector encode(std::span<const TokenId> tokens, const EncoderParams& theta) {
  const std::size_t vocab = theta.embedding.shape()[0];
  const std::size_t dim = theta.embedding.shape()[1];
  const auto ids = strip_padding(tokens, vocab);

  std::vector<double> pooled(dim, 0.0);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const double* row = &theta.embedding.at(ids[r], 0);
    if (theta.pooling == Pooling::kMeanPositional) {
      const auto pe = positional_encoding(r, dim);
      for (std::size_t j = 0; j < dim; ++j) pooled[j] += row[j] + pe[j];
    } else {
      for (std::size_t j = 0; j < dim; ++j) pooled[j] += row[j];
    }
  }
  for (auto& v : pooled) v /= static_cast<double>(ids.size());

  auto hidden = affine(pooled, theta.hidden_w, theta.hidden_b);
  for (auto& v : hidden) v = std::tanh(v);
  LatentVector z{affine(hidden, theta.out_w, theta.out_b)};
  check_finite(z.values, "encode");
  return z;
}

std::vector<double> classify(const LatentVector& z, const ClassifierParams& pi) {
  const std::size_t classes = pi.num_classes(), dim = pi.latent_dim();
  if (z.dim() != dim) {
    throw ShapeError("classify: latent of dimension " + std::to_string(z.dim()) +
                     " against classifier " + nx::shape_str(pi.weight.shape()));
  }
  check_finite(z.values, "classify");
  std::vector<double> logits(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (z.values[j] == 0.0) continue;
      logits[c] += z.values[j] * pi.weight.at(c, j);
    }
    logits[c] += pi.bias[c];
  }
  return nx::softmax(logits);
}

std::vector<double> decode_step(const LatentVector& z, std::span<const TokenId> prefix,
                                std::size_t position, const DecoderParams& gamma) {
  if (position >= gamma.max_len) {
    throw ValueError("decode_step: position " + std::to_string(position) + " >= max_len " +
                     std::to_string(gamma.max_len));
  }
  if (prefix.empty()) throw ValueError("decode_step: empty prefix (expected BOS first)");
  const TokenId prev = prefix.back();
  const std::size_t vocab = gamma.vocab_size();
  if (prev >= vocab) throw ValueError("decode_step: token id out of range");
  const std::size_t emb_dim = gamma.embedding.shape()[1];

  std::vector<double> x;
  x.reserve(z.dim() + emb_dim + gamma.position_dim);
  x.insert(x.end(), z.values.begin(), z.values.end());
  const double* row = &gamma.embedding.at(prev, 0);
  x.insert(x.end(), row, row + emb_dim);
  const auto pe = positional_encoding(position, gamma.position_dim);
  x.insert(x.end(), pe.begin(), pe.end());
  check_finite(x, "decode_step");

  auto hidden = affine(x, gamma.hidden_w, gamma.hidden_b);
  for (auto& v : hidden) v = std::tanh(v);
  return nx::softmax(affine(hidden, gamma.out_w, gamma.out_b));
}

// ---------------------------------------------------------------------------
// Recorded forward passes

namespace {

nx::Var leaf(nx::Tape& tape, const nx::Tensor& t, bool trainable) {
  return trainable ? tape.variable(t) : tape.constant(t);
}

nx::Var dense(nx::Var x, nx::Var w, nx::Var b) { return nx::add_row(nx::matmul(x, w), b); }

}  // namespace

EncoderVars bind(nx::Tape& tape, const EncoderParams& p, bool trainable) {
  return EncoderVars{leaf(tape, p.embedding, trainable), leaf(tape, p.hidden_w, trainable),
                     leaf(tape, p.hidden_b, trainable),  leaf(tape, p.out_w, trainable),
                     leaf(tape, p.out_b, trainable),     p.pooling};
}

ClassifierVars bind(nx::Tape& tape, const ClassifierParams& p, bool trainable) {
  return ClassifierVars{leaf(tape, p.weight, trainable), leaf(tape, p.bias, trainable)};
}

DecoderVars bind(nx::Tape& tape, const DecoderParams& p, bool trainable) {
  return DecoderVars{leaf(tape, p.embedding, trainable),
                     leaf(tape, p.hidden_w, trainable),
                     leaf(tape, p.hidden_b, trainable),
                     leaf(tape, p.out_w, trainable),
                     leaf(tape, p.out_b, trainable),
                     p.position_dim,
                     p.max_len};
}

nx::Var encode(nx::Tape& tape, const EncoderVars& theta,
               std::span<const std::vector<TokenId>> batch) {
  if (batch.empty()) throw ValueError("encode: empty batch");
  const std::size_t vocab = theta.embedding.shape()[0];
  const std::size_t dim = theta.embedding.shape()[1];
  std::vector<nx::Var> pooled;
  pooled.reserve(batch.size());
  for (const auto& seq : batch) {
    const auto ids = strip_padding(seq, vocab);
    nx::Var rows = nx::embedding(theta.embedding, ids);
    if (theta.pooling == Pooling::kMeanPositional) {
      nx::Tensor pe({ids.size(), dim});
      for (std::size_t r = 0; r < ids.size(); ++r) {
        const auto enc = positional_encoding(r, dim);
        std::copy(enc.begin(), enc.end(), &pe.at(r, 0));
      }
      rows = nx::add(rows, tape.constant(std::move(pe)));
    }
    pooled.push_back(nx::mean(rows, 0));
  }
  nx::Var x = pooled.size() == 1 ? pooled.front() : nx::concat(pooled, 0);
  nx::Var hidden = nx::tanh(dense(x, theta.hidden_w, theta.hidden_b));
  return dense(hidden, theta.out_w, theta.out_b);
}

nx::Var classifier_logits(nx::Tape&, const ClassifierVars& pi, nx::Var z) {
  return nx::add_row(nx::matmul(z, nx::transpose(pi.weight)), pi.bias);
}

nx::Var decoder_logits(nx::Tape& tape, const DecoderVars& gamma, nx::Var z,
                       std::span<const std::vector<TokenId>> inputs) {
  const std::size_t batch = z.shape()[0];
  if (inputs.size() != batch) {
    throw ShapeError("decoder_logits: " + std::to_string(inputs.size()) + " input sequences for " +
                     std::to_string(batch) + " latents");
  }
  std::size_t total = 0;
  for (const auto& in : inputs) {
    if (in.empty()) throw ValueError("decoder_logits: empty conditioning sequence");
    if (in.size() > gamma.max_len) {
      throw ValueError("decoder_logits: sequence of " + std::to_string(in.size()) +
                       " steps exceeds max_len " + std::to_string(gamma.max_len));
    }
    total += in.size();
  }

  nx::Tensor selector({total, batch}, 0.0);
  nx::Tensor pe({total, gamma.position_dim});
  std::vector<std::size_t> prev;
  prev.reserve(total);
  std::size_t r = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < inputs[b].size(); ++t, ++r) {
      selector.at(r, b) = 1.0;
      const auto enc = positional_encoding(t, gamma.position_dim);
      std::copy(enc.begin(), enc.end(), &pe.at(r, 0));
      prev.push_back(inputs[b][t]);
    }
  }
  const nx::Var parts[] = {nx::matmul(tape.constant(std::move(selector)), z),
                           nx::embedding(gamma.embedding, prev), tape.constant(std::move(pe))};
  nx::Var x = nx::concat(parts, 1);
  nx::Var hidden = nx::tanh(dense(x, gamma.hidden_w, gamma.hidden_b));
  return dense(hidden, gamma.out_w, gamma.out_b);
}

}  // namespace dbaug::model
