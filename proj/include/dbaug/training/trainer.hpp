#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dbaug/model/model.hpp"

namespace dbaug::training {

struct TrainConfig {
  double eps_cls = 0.1;
  double eps_recon = 0.1;
  double learning_rate = 0.5;
  std::size_t epochs_stage1 = 50;
  std::size_t epochs_stage2 = 100;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LabeledSequence {
  std::vector<model::TokenId> tokens;
  std::size_t label = 0;
};

/// A training example with an arbitrary target distribution (one-hot,
/// smoothed, or a soft label produced by augmentation).
struct SoftExample {
  std::vector<model::TokenId> tokens;
  std::vector<double> target;
};

/// One metrics row. `accuracy` is classification accuracy for classifier
/// stages and teacher-forced token accuracy for the decoder stage.
struct EpochMetrics {
  std::string stage;
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// CSV with header `stage,epoch,loss,accuracy`.
void write_metrics(std::ostream& out, std::span<const EpochMetrics> rows);

struct ClassifierFit {
  model::EncoderParams encoder;
  model::ClassifierParams classifier;
  std::vector<EpochMetrics> history;
};

/// Supplies the training set for a given epoch; lets curriculum schedules
/// swap data between epochs.
using EpochData = std::function<std::span<const SoftExample>(std::size_t epoch)>;

/// Minibatch gradient descent of encoder + classifier on cross-entropy
/// against the example targets. Accuracy is measured against the target's
/// argmax. Throws NumericError naming the epoch if the loss diverges.
ClassifierFit fit_classifier(model::EncoderParams encoder, model::ClassifierParams classifier,
                             const EpochData& data, std::size_t epochs, double learning_rate,
                             std::size_t batch_size, std::uint64_t seed,
                             const std::string& stage = "stage1");

/// Stage 1: encoder and classifier from scratch on the label-smoothed
/// classification loss.
ClassifierFit train_stage1(std::span<const LabeledSequence> corpus,
                           const model::ModelConfig& model_cfg, const TrainConfig& cfg);

struct DecoderFit {
  model::DecoderParams decoder;
  std::vector<EpochMetrics> history;
};

/// Decoder conditioning and targets for one sentence, truncated to max_len
/// steps: inputs are BOS + tokens, targets are tokens + EOS.
struct TeacherForcing {
  std::vector<model::TokenId> inputs;
  std::vector<model::TokenId> targets;
};
TeacherForcing teacher_forcing(std::span<const model::TokenId> tokens, std::size_t max_len);

/// Stage 2: decoder only, with teacher forcing, against latents from the
/// frozen encoder. Throws ContractError if the encoder changes.
DecoderFit train_stage2(std::span<const LabeledSequence> corpus,
                        const model::EncoderParams& frozen_encoder,
                        const model::ModelConfig& model_cfg, const TrainConfig& cfg);

}  // namespace dbaug::training
