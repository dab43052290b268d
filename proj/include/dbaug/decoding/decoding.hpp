#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dbaug/model/model.hpp"
#include "dbaug/rng.hpp"

namespace dbaug::decoding {

using model::TokenId;

struct Greedy {};
struct Beam {
  std::size_t width = 4;
};
struct TopK {
  std::size_t k = 10;
};
/// Restrict to the top-k tokens; if the renormalized mass of the top-k'
/// is below `threshold` the distribution is treated as flat and those k'
/// tokens are excluded, otherwise it behaves as top-k sampling.
/// `literal_pseudocode` flips the branch condition (exclude when mass >=
/// threshold) for comparison runs.
struct MidK {
  std::size_t k = 10;
  std::size_t k_prime = 2;
  double threshold = 0.7;
  bool literal_pseudocode = false;
};

struct DecodingStrategy {
  std::variant<Greedy, Beam, TopK, MidK> variant = MidK{};
  std::size_t max_len = 24;
  double temperature = 1.0;

  /// Checks the strategy against a vocabulary of `vocab_size` tokens.
  void validate(std::size_t vocab_size) const;
  /// "greedy", "beam", "top_k" or "mid_k".
  std::string name() const;
  /// name plus hyperparameters, e.g. "mid_k(k=10,k'=2,t=0.7)".
  std::string describe() const;
};

DecodingStrategy strategy_from_name(const std::string& name);

/// Indices of the `k` largest entries, descending; ties go to the lower id.
std::vector<TokenId> top_k_indices(std::span<const double> dist, std::size_t k);

/// p^(1/T), renormalized. T = 1 returns the input unchanged.
std::vector<double> apply_temperature(std::span<const double> dist, double temperature);

TokenId greedy_pick(std::span<const double> dist);
TokenId top_k_sample(std::span<const double> dist, std::size_t k, Rng& rng);
TokenId mid_k_sample(std::span<const double> dist, std::size_t k, std::size_t k_prime,
                     double threshold, Rng& rng, bool literal_pseudocode = false);

/// One token under a non-beam strategy (temperature applied first).
TokenId baseline_step(std::span<const double> dist, const DecodingStrategy& strategy, Rng& rng);

/// Length-normalized log-probability beam search from BOS. Deterministic.
std::vector<TokenId> beam_decode(const model::LatentVector& z, const model::DecoderParams& gamma,
                                 std::size_t width, std::size_t max_len);

/// Autoregressive generation from BOS until EOS or max_len. The result holds
/// neither BOS nor the terminating EOS. PAD, BOS and UNK are never emitted.
std::vector<TokenId> decode_sequence(const model::LatentVector& z,
                                     const model::DecoderParams& gamma,
                                     const DecodingStrategy& strategy, Rng& rng);

}  // namespace dbaug::decoding
