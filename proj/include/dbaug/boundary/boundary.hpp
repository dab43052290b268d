#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbaug/decoding/decoding.hpp"
#include "dbaug/model/model.hpp"
#include "dbaug/rng.hpp"

namespace dbaug::boundary {

using model::LatentVector;
using model::TokenId;

/// Step size and iteration count of the latent update.
struct ModificationConfig {
  double lambda = 0.1;
  std::size_t steps = 3;

  void validate() const;
};

/// The decision-boundary target: every class equally likely.
std::vector<double> boundary_target(std::size_t num_classes);

/// Gradient w.r.t. z of the cross-entropy between classify(z) and the
/// boundary target, computed by reverse-mode differentiation.
std::vector<double> boundary_gradient(const LatentVector& z, const model::ClassifierParams& pi);

/// z'(0) = z; z'(i) = z'(i-1) - lambda * boundary_gradient(z'(i-1)).
/// Returns z'(steps). Throws NumericError naming the iteration on overflow.
LatentVector modify_latent(const LatentVector& z, const model::ClassifierParams& pi,
                           const ModificationConfig& cfg);

/// Every iterate z'(0) .. z'(steps).
std::vector<LatentVector> modify_latent_trajectory(const LatentVector& z,
                                                   const model::ClassifierParams& pi,
                                                   const ModificationConfig& cfg);

/// KL(q || uniform) = log|C| - H(q).
double kl_to_uniform(std::span<const double> q);

/// classify(encode(tokens)).
std::vector<double> score_soft_label(std::span<const TokenId> tokens,
                                     const model::EncoderParams& theta,
                                     const model::ClassifierParams& pi);

struct Provenance {
  std::size_t source_id = 0;
  std::size_t replicate = 0;
  std::size_t steps = 0;
  double lambda = 0.0;
  std::string strategy;
  std::uint64_t seed = 0;
};

/// One augmented sentence and its soft label.
struct AugmentedPair {
  std::vector<TokenId> tokens;
  std::vector<double> soft_label;
  Provenance provenance;
};

/// Encode, push the latent toward the boundary, decode, and label the
/// generated sentence with the classifier. `provenance` is copied into the
/// result with the modification and strategy fields filled in. Throws
/// GenerationError if decoding yields an empty sentence.
AugmentedPair augment_sentence(std::span<const TokenId> tokens, const model::Model& m,
                               const ModificationConfig& cfg,
                               const decoding::DecodingStrategy& strategy, Rng& rng,
                               Provenance provenance = {});

}  // namespace dbaug::boundary
