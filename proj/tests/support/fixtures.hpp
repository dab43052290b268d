// Trained toy models shared across tests. Built once per process.
#pragma once

#include <vector>

#include "dbaug/model/model.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/training/trainer.hpp"

namespace fixture {

struct Trained {
  std::vector<dbaug::pipeline::CorpusRecord> corpus;
  std::vector<dbaug::training::LabeledSequence> seqs;
  dbaug::model::Model model;
  std::vector<dbaug::training::EpochMetrics> stage1;
  std::vector<dbaug::training::EpochMetrics> stage2;
};

/// Stage 1 + stage 2 on `n_per_class` toy sentences per class.
inline Trained train_toy(std::size_t n_per_class, std::uint64_t seed,
                         dbaug::training::TrainConfig tc = {}) {
  namespace dp = dbaug::pipeline;
  auto corpus = dp::generate_toy_corpus(n_per_class, seed);
  auto vocab = dp::build_vocabulary(corpus);
  auto seqs = dp::to_sequences(corpus, vocab);
  dbaug::model::ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.num_classes = 2;
  tc.seed = seed;
  auto s1 = dbaug::training::train_stage1(seqs, mc, tc);
  auto s2 = dbaug::training::train_stage2(seqs, s1.encoder, mc, tc);
  dbaug::model::Model m{mc, std::move(vocab), std::move(s1.encoder), std::move(s1.classifier),
                        std::move(s2.decoder)};
  return {std::move(corpus), std::move(seqs), std::move(m), std::move(s1.history),
          std::move(s2.history)};
}

/// 200-sentence toy model with a short decoder stage; enough for
/// classifier-side checks and directional augmentation checks.
inline const Trained& toy() {
  static const Trained t = [] {
    dbaug::training::TrainConfig tc;
    tc.epochs_stage2 = 30;
    return train_toy(100, 1, tc);
  }();
  return t;
}

}  // namespace fixture
