#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dbaug/boundary/boundary.hpp"
#include "dbaug/decoding/decoding.hpp"
#include "dbaug/model/model.hpp"
#include "dbaug/training/trainer.hpp"

namespace dbaug::pipeline {

using boundary::AugmentedPair;

enum class LabelMode { kSoft, kHard };

std::string to_string(LabelMode m);
LabelMode label_mode_from_string(const std::string& s);

struct AugmentationConfig {
  boundary::ModificationConfig modification;
  decoding::DecodingStrategy strategy;
  /// Pairs generated per source sentence.
  std::size_t multiplier = 1;
  LabelMode label_mode = LabelMode::kSoft;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Largest tolerated fraction of failed generations.
  double max_failure_rate = 0.10;

  void validate(std::size_t vocab_size) const;
};

struct AugmentationResult {
  /// Successful pairs ordered by (source, replicate).
  std::vector<AugmentedPair> pairs;
  std::size_t attempts = 0;
  /// One message per skipped generation.
  std::vector<std::string> failures;
};

/// Augments every source `multiplier` times. `source_ids` names each source
/// in provenance and seeds its rng stream; when empty, positions are used.
/// Each (source, replicate) unit draws from its own stream, so results do
/// not depend on `threads`. In hard mode the label is the source's one-hot
/// class. Failed units are skipped; throws GenerationError when more than
/// `max_failure_rate` of them fail.
AugmentationResult run_augmentation(std::span<const training::LabeledSequence> sources,
                                    const model::Model& m, const AugmentationConfig& cfg,
                                    std::span<const std::size_t> source_ids = {});

/// Epoch -> iteration count for curriculum augmentation: n0 + floor(epoch/2).
std::size_t curriculum_steps(std::size_t epoch, std::size_t n0 = 1);

/// Line-delimited {"text", "soft_label", "provenance"} records.
std::string format_augmented(std::span<const AugmentedPair> pairs, const model::Vocabulary& vocab);
void write_augmented(const std::filesystem::path& path, std::span<const AugmentedPair> pairs,
                     const model::Vocabulary& vocab);
std::vector<AugmentedPair> parse_augmented(const std::string& text, const model::Vocabulary& vocab,
                                           std::size_t num_classes);
std::vector<AugmentedPair> read_augmented(const std::filesystem::path& path,
                                          const model::Vocabulary& vocab, std::size_t num_classes);

/// Targets for downstream training.
std::vector<training::SoftExample> to_soft_examples(std::span<const AugmentedPair> pairs);

}  // namespace dbaug::pipeline
