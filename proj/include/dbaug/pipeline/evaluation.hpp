#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbaug/model/model.hpp"
#include "dbaug/pipeline/attack.hpp"
#include "dbaug/pipeline/augmentation.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/training/trainer.hpp"

namespace dbaug::pipeline {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  /// Shuffles needed before every class appeared in `train`.
  std::size_t attempts = 1;
};

/// Deterministic per-seed train/test split of record indices. Reshuffles
/// (with a fresh stream per attempt) while some class is missing from the
/// training part, and throws ValueError after `max_attempts`.
Split split_corpus(std::span<const CorpusRecord> records, std::uint64_t seed,
                   double train_fraction = 0.8, std::size_t max_attempts = 10);

/// Per class, max(floor_per_class, floor(fraction * class count)) indices
/// drawn from `train` (capped at the class count). Returned in ascending
/// order.
std::vector<std::size_t> low_resource_subset(std::span<const CorpusRecord> records,
                                             std::span<const std::size_t> train, double fraction,
                                             std::size_t floor_per_class, std::uint64_t seed);

double mean_of(std::span<const double> xs);
/// Population standard deviation (divides by N).
double population_std(std::span<const double> xs);

/// Accuracy of a set of seeds under one experimental condition.
struct EvalReport {
  std::string condition;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;
  double mean = 0.0;
  double std = 0.0;
  /// Per seed, when the condition was attacked.
  std::vector<AttackStats> attacks;

  void add(std::uint64_t seed, double accuracy, std::optional<AttackStats> attack = {});
  /// Recomputes mean and std from `accuracies`.
  void finalize();
  bool attacked() const { return !attacks.empty(); }
  double mean_clean_accuracy() const;
  double mean_aua() const;
  double mean_asr() const;
};

struct DownstreamConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  /// Embedding init range of the fresh downstream encoder. Smaller than the
  /// augmenter's: downstream models see few sentences and generalize better
  /// when the learned directions dominate the random ones.
  double embed_init = 0.1;

  void validate() const;
};

/// One-hot targets for labeled sequences.
std::vector<training::SoftExample> one_hot_examples(std::span<const training::LabeledSequence> seqs,
                                                    std::size_t num_classes);

double test_accuracy(const model::EncoderParams& theta, const model::ClassifierParams& pi,
                     std::span<const training::LabeledSequence> test);

struct DownstreamOutcome {
  double accuracy = 0.0;
  std::optional<AttackStats> attack;
};

/// Trains a freshly initialized encoder + classifier (init drawn from
/// `seed`) on cross-entropy against the example targets, then scores it on
/// `test`. When `attack` is given the trained model is also attacked.
DownstreamOutcome run_downstream(const model::ModelConfig& model_cfg, const DownstreamConfig& cfg,
                                 const training::EpochData& data,
                                 std::span<const training::LabeledSequence> test,
                                 std::uint64_t seed, const AttackSetup* attack = nullptr);

struct EvalConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double train_fraction = 0.8;
  double low_resource_fraction = 0.01;
  std::size_t floor_per_class = 2;
  model::ModelConfig model;
  DownstreamConfig downstream;
  bool attack = false;
  AttackConfig attack_cfg;
  std::size_t threads = 1;

  void validate() const;
};

/// Conditions "original" (low-resource subset only) and "original+augmented"
/// (subset plus every pair whose provenance source is in the subset), per
/// seed. Uses the given augmented pairs as is; `vocab` must cover both.
std::vector<EvalReport> downstream_eval(std::span<const CorpusRecord> corpus,
                                        std::span<const AugmentedPair> augmented,
                                        const model::Vocabulary& vocab, const EvalConfig& cfg);

}  // namespace dbaug::pipeline
