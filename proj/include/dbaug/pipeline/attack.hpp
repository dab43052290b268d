#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbaug/model/model.hpp"
#include "dbaug/training/trainer.hpp"

namespace dbaug::pipeline {

/// Integer outcome of an attack run; the rates are derived from it.
struct AttackStats {
  std::size_t total = 0;
  std::size_t clean_correct = 0;
  std::size_t flipped = 0;

  double clean_accuracy() const;
  /// Accuracy under attack: (clean_correct - flipped) / total.
  double aua() const;
  /// Attack success rate: flipped / clean_correct (0 when nothing was correct).
  double asr() const;
  /// AUA == clean * (1 - ASR), checked on the integer counts.
  bool identity_holds() const;
};

struct AttackConfig {
  /// Largest fraction of a sentence's tokens that may be replaced.
  double budget = 0.3;
  /// A token is neutral when (max - min) / sum of its per-class frequencies
  /// is at most this.
  double neutrality = 0.2;
  /// Minimum training occurrences for a neutral token.
  std::size_t min_count = 2;

  void validate() const;
};

/// Tokens whose class-conditional counts in `train` are nearly equal.
std::vector<model::TokenId> neutral_distractors(std::span<const training::LabeledSequence> train,
                                                std::size_t vocab_size, std::size_t num_classes,
                                                const AttackConfig& cfg);

struct AttackSetup {
  std::vector<model::TokenId> distractors;
  AttackConfig cfg;
};

/// Greedy leave-one-out substitution attack. For each correctly classified
/// example, positions are ranked by the drop in true-class probability when
/// the token is replaced by UNK; then, up to floor(budget * length)
/// positions, the distractor that most lowers the true-class probability is
/// substituted until the prediction changes. Throws ValueError on an empty
/// test set.
AttackStats attack_eval(const model::EncoderParams& theta, const model::ClassifierParams& pi,
                        std::span<const training::LabeledSequence> test, const AttackSetup& setup);

}  // namespace dbaug::pipeline
