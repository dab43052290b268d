#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbaug/boundary/boundary.hpp"
#include "dbaug/decoding/decoding.hpp"
#include "dbaug/pipeline/augmentation.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/pipeline/evaluation.hpp"
#include "dbaug/training/trainer.hpp"

namespace dbaug::pipeline {

/// One downstream training recipe.
struct Condition {
  std::string name;
  bool augment = true;
  LabelMode label_mode = LabelMode::kSoft;
  decoding::DecodingStrategy strategy;
  /// Regenerate the augmentation with curriculum_steps(epoch) iterations.
  bool curriculum = false;
};

Condition baseline_condition();

/// Full per-seed protocol: split, train the augmenter (both stages) on the
/// training part, subsample the low-resource set, augment it under each
/// condition, train fresh downstream models and score them on the test part.
struct ExperimentConfig {
  model::ModelConfig model;
  training::TrainConfig augmenter;
  DownstreamConfig downstream;
  boundary::ModificationConfig modification;
  std::size_t multiplier = 32;
  std::size_t curriculum_n0 = 1;
  double train_fraction = 0.8;
  double low_resource_fraction = 0.01;
  std::size_t floor_per_class = 2;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool attack = false;
  AttackConfig attack_cfg;
  std::size_t threads = 1;

  void validate() const;
};

struct ExperimentResult {
  std::vector<EvalReport> reports;  // one per condition, in input order
  /// Skipped augmentation units, over all seeds and conditions.
  std::size_t skipped = 0;
  std::size_t attempts = 0;
};

ExperimentResult run_experiment(std::span<const CorpusRecord> corpus, const ExperimentConfig& cfg,
                                std::span<const Condition> conditions);

/// Grids for the ablation runs. `base` supplies the mid-K parameters and
/// max_len used throughout.
std::vector<Condition> decoding_grid(const decoding::DecodingStrategy& base);
std::vector<Condition> label_grid(const decoding::DecodingStrategy& base);
std::vector<Condition> curriculum_grid(const decoding::DecodingStrategy& base);

}  // namespace dbaug::pipeline
