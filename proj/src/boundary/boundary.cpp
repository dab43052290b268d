#include "dbaug/boundary/boundary.hpp"

#include <cmath>

#include "dbaug/error.hpp"
#include "dbaug/training/losses.hpp"

namespace dbaug::boundary {

void ModificationConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValueError("modification: lambda must be positive");
  }
}

std::vector<double> boundary_target(std::size_t num_classes) {
  if (num_classes < 2) throw ValueError("boundary target needs at least two classes");
  return std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes));
}

std::vector<double> boundary_gradient(const LatentVector& z, const model::ClassifierParams& pi) {
  if (z.dim() != pi.latent_dim()) {
    throw ShapeError("boundary_gradient: latent of dimension " + std::to_string(z.dim()) +
                     " against classifier " + nx::shape_str(pi.weight.shape()));
  }
  const std::size_t classes = pi.num_classes();
  nx::Tape tape;
  nx::Var zv = tape.variable(nx::Tensor({1, z.dim()}, z.values));
  auto cv = model::bind(tape, pi, false);
  nx::Var logits = model::classifier_logits(tape, cv, zv);
  nx::Var loss = training::soft_cross_entropy(
      tape, logits, nx::Tensor({1, classes}, boundary_target(classes)));
  tape.backward(loss);
  return tape.grad(zv).storage();
}

std::vector<LatentVector> modify_latent_trajectory(const LatentVector& z,
                                                   const model::ClassifierParams& pi,
                                                   const ModificationConfig& cfg) {
  cfg.validate();
  std::vector<LatentVector> path{z};
  path.reserve(cfg.steps + 1);
  for (std::size_t i = 1; i <= cfg.steps; ++i) {
    LatentVector next = path.back();
    try {
      const auto g = boundary_gradient(next, pi);
      for (std::size_t j = 0; j < next.dim(); ++j) next.values[j] -= cfg.lambda * g[j];
    } catch (const NumericError& e) {
      throw NumericError("modify_latent: iteration " + std::to_string(i) + ": " + e.what());
    }
    for (double v : next.values) {
      if (!std::isfinite(v)) {
        throw NumericError("modify_latent: non-finite latent at iteration " + std::to_string(i));
      }
    }
    path.push_back(std::move(next));
  }
  return path;
}

LatentVector modify_latent(const LatentVector& z, const model::ClassifierParams& pi,
                           const ModificationConfig& cfg) {
  return modify_latent_trajectory(z, pi, cfg).back();
}

double kl_to_uniform(std::span<const double> q) {
  double kl = std::log(static_cast<double>(q.size()));
  for (double p : q) {
    if (p > 0.0) kl += p * std::log(p);
  }
  return kl;
}

std::vector<double> score_soft_label(std::span<const TokenId> tokens,
                                     const model::EncoderParams& theta,
                                     const model::ClassifierParams& pi) {
  return model::classify(model::encode(tokens, theta), pi);
}

AugmentedPair augment_sentence(std::span<const TokenId> tokens, const model::Model& m,
                               const ModificationConfig& cfg,
                               const decoding::DecodingStrategy& strategy, Rng& rng,
                               Provenance provenance) {
  const auto z = model::encode(tokens, m.encoder);
  const auto shifted = modify_latent(z, m.classifier, cfg);
  auto generated = decoding::decode_sequence(shifted, m.decoder, strategy, rng);
  if (generated.empty()) {
    throw GenerationError("augment: decoder produced an empty sentence for source " +
                          std::to_string(provenance.source_id));
  }
  provenance.steps = cfg.steps;
  provenance.lambda = cfg.lambda;
  provenance.strategy = strategy.describe();
  AugmentedPair pair;
  pair.soft_label = score_soft_label(generated, m.encoder, m.classifier);
  pair.tokens = std::move(generated);
  pair.provenance = std::move(provenance);
  return pair;
}

}  // namespace dbaug::boundary
