#include "dbaug/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "dbaug/error.hpp"
#include "dbaug/rng.hpp"
#include "dbaug/training/losses.hpp"

namespace dbaug::training {

using model::TokenId;

void TrainConfig::validate() const {
  if (!(eps_cls >= 0.0 && eps_cls <= 1.0)) throw ValueError("eps_cls must lie in [0, 1]");
  if (!(eps_recon >= 0.0 && eps_recon <= 1.0)) throw ValueError("eps_recon must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValueError("learning rate must be positive");
  }
  if (batch_size == 0) throw ValueError("batch size must be positive");
}

void write_metrics(std::ostream& out, std::span<const EpochMetrics> rows) {
  out << "stage,epoch,loss,accuracy\n";
  const auto old_precision = out.precision(10);
  for (const auto& r : rows) {
    out << r.stage << ',' << r.epoch << ',' << r.loss << ',' << r.accuracy << '\n';
  }
  out.precision(old_precision);
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

void sgd_step(nx::Tensor& param, const nx::Tape& tape, nx::Var v, double lr) {
  const nx::Tensor g = tape.grad(v);
  auto p = param.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * gv[i];
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

[[noreturn]] void diverged(const std::string& stage, std::size_t epoch, const std::string& why) {
  throw NumericError(stage + ": training diverged at epoch " + std::to_string(epoch) + " (" +
                     why + ")");
}

}  // namespace

ClassifierFit fit_classifier(model::EncoderParams encoder, model::ClassifierParams classifier,
                             const EpochData& data, std::size_t epochs, double learning_rate,
                             std::size_t batch_size, std::uint64_t seed, const std::string& stage) {
  if (!(learning_rate > 0.0)) throw ValueError("learning rate must be positive");
  if (batch_size == 0) throw ValueError("batch size must be positive");
  const std::size_t classes = classifier.num_classes();
  Rng rng = derive_rng(seed, 0x5157a6e1);
  ClassifierFit fit;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto examples = data(epoch);
    if (examples.empty()) throw ValueError(stage + ": empty training set");
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);

    double loss_total = 0.0;
    std::size_t correct = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        const std::size_t b = end - start;
        std::vector<std::vector<TokenId>> batch;
        nx::Tensor targets({b, classes});
        for (std::size_t i = 0; i < b; ++i) {
          const auto& ex = examples[order[start + i]];
          if (ex.target.size() != classes) {
            throw ShapeError(stage + ": target of size " + std::to_string(ex.target.size()) +
                             " for " + std::to_string(classes) + " classes");
          }
          batch.push_back(ex.tokens);
          std::copy(ex.target.begin(), ex.target.end(), &targets.at(i, 0));
        }

        nx::Tape tape;
        auto ev = model::bind(tape, encoder, true);
        auto cv = model::bind(tape, classifier, true);
        nx::Var logits = model::classifier_logits(tape, cv, model::encode(tape, ev, batch));
        nx::Var loss = nx::scale(soft_cross_entropy(tape, logits, targets), 1.0 / double(b));
        if (!std::isfinite(loss.value()[0])) throw NumericError("non-finite loss");
        tape.backward(loss);

        loss_total += loss.value()[0] * double(b);
        for (std::size_t i = 0; i < b; ++i) {
          if (argmax(logits.value().row(i)) == argmax(targets.row(i))) ++correct;
        }
        sgd_step(encoder.embedding, tape, ev.embedding, learning_rate);
        sgd_step(encoder.hidden_w, tape, ev.hidden_w, learning_rate);
        sgd_step(encoder.hidden_b, tape, ev.hidden_b, learning_rate);
        sgd_step(encoder.out_w, tape, ev.out_w, learning_rate);
        sgd_step(encoder.out_b, tape, ev.out_b, learning_rate);
        sgd_step(classifier.weight, tape, cv.weight, learning_rate);
        sgd_step(classifier.bias, tape, cv.bias, learning_rate);
      }
    } catch (const NumericError& e) {
      diverged(stage, epoch, e.what());
    }
    const double n = static_cast<double>(examples.size());
    const double mean_loss = loss_total / n;
    if (!std::isfinite(mean_loss)) diverged(stage, epoch, "non-finite loss");
    fit.history.push_back({stage, epoch, mean_loss, static_cast<double>(correct) / n});
  }
  fit.encoder = std::move(encoder);
  fit.classifier = std::move(classifier);
  return fit;
}

ClassifierFit train_stage1(std::span<const LabeledSequence> corpus,
                           const model::ModelConfig& model_cfg, const TrainConfig& cfg) {
  cfg.validate();
  model_cfg.validate();
  if (corpus.empty()) throw ValueError("stage1: empty corpus");
  std::vector<SoftExample> examples;
  examples.reserve(corpus.size());
  for (const auto& rec : corpus) {
    if (rec.label >= model_cfg.num_classes) {
      throw ValueError("stage1: label " + std::to_string(rec.label) + " out of range");
    }
    examples.push_back({rec.tokens, smoothed_target(rec.label, model_cfg.num_classes, cfg.eps_cls)});
  }
  Rng init = derive_rng(cfg.seed, 1);
  auto encoder = model::init_encoder(model_cfg, init);
  auto classifier = model::init_classifier(model_cfg, init);
  return fit_classifier(std::move(encoder), std::move(classifier),
                        [&](std::size_t) { return std::span<const SoftExample>(examples); },
                        cfg.epochs_stage1, cfg.learning_rate, cfg.batch_size, cfg.seed, "stage1");
}

TeacherForcing teacher_forcing(std::span<const TokenId> tokens, std::size_t max_len) {
  if (max_len == 0) throw ValueError("teacher_forcing: max_len must be positive");
  TeacherForcing tf;
  tf.inputs.push_back(model::kBos);
  for (auto t : tokens) {
    if (t == model::kPad) continue;
    tf.targets.push_back(t);
  }
  tf.targets.push_back(model::kEos);
  if (tf.targets.size() > max_len) tf.targets.resize(max_len);
  tf.inputs.insert(tf.inputs.end(), tf.targets.begin(), tf.targets.end() - 1);
  return tf;
}

DecoderFit train_stage2(std::span<const LabeledSequence> corpus,
                        const model::EncoderParams& frozen_encoder,
                        const model::ModelConfig& model_cfg, const TrainConfig& cfg) {
  cfg.validate();
  model_cfg.validate();
  if (corpus.empty()) throw ValueError("stage2: empty corpus");
  const auto before = model::checksum(frozen_encoder);

  const std::size_t vocab = model_cfg.vocab_size;
  std::vector<model::LatentVector> latents;
  std::vector<TeacherForcing> sequences;
  for (const auto& rec : corpus) {
    latents.push_back(model::encode(rec.tokens, frozen_encoder));
    sequences.push_back(teacher_forcing(rec.tokens, model_cfg.max_len));
  }

  Rng init = derive_rng(cfg.seed, 2);
  auto decoder = model::init_decoder(model_cfg, init);
  Rng rng = derive_rng(cfg.seed, 0xdec0de);
  DecoderFit fit;
  const std::size_t d = model_cfg.latent_dim;

  for (std::size_t epoch = 0; epoch < cfg.epochs_stage2; ++epoch) {
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    double loss_total = 0.0;
    std::size_t correct = 0, steps = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const std::size_t b = end - start;
        nx::Tensor z({b, d});
        std::vector<std::vector<TokenId>> inputs;
        std::size_t rows = 0;
        for (std::size_t i = 0; i < b; ++i) {
          const auto idx = order[start + i];
          std::copy(latents[idx].values.begin(), latents[idx].values.end(), &z.at(i, 0));
          inputs.push_back(sequences[idx].inputs);
          rows += sequences[idx].targets.size();
        }
        nx::Tensor targets({rows, vocab});
        std::vector<TokenId> gold;
        std::size_t r = 0;
        for (std::size_t i = 0; i < b; ++i) {
          for (auto t : sequences[order[start + i]].targets) {
            const auto row = smoothed_target(t, vocab, cfg.eps_recon);
            std::copy(row.begin(), row.end(), &targets.at(r++, 0));
            gold.push_back(t);
          }
        }

        nx::Tape tape;
        auto gv = model::bind(tape, decoder, true);
        nx::Var logits = model::decoder_logits(tape, gv, tape.constant(std::move(z)), inputs);
        // Per-token mean for the update; the reported loss stays per sentence.
        nx::Var loss = nx::scale(soft_cross_entropy(tape, logits, targets), 1.0 / double(rows));
        if (!std::isfinite(loss.value()[0])) throw NumericError("non-finite loss");
        tape.backward(loss);

        loss_total += loss.value()[0] * double(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          if (argmax(logits.value().row(i)) == gold[i]) ++correct;
        }
        steps += rows;
        sgd_step(decoder.embedding, tape, gv.embedding, cfg.learning_rate);
        sgd_step(decoder.hidden_w, tape, gv.hidden_w, cfg.learning_rate);
        sgd_step(decoder.hidden_b, tape, gv.hidden_b, cfg.learning_rate);
        sgd_step(decoder.out_w, tape, gv.out_w, cfg.learning_rate);
        sgd_step(decoder.out_b, tape, gv.out_b, cfg.learning_rate);
      }
    } catch (const NumericError& e) {
      diverged("stage2", epoch, e.what());
    }
    const double mean_loss = loss_total / static_cast<double>(corpus.size());
    if (!std::isfinite(mean_loss)) diverged("stage2", epoch, "non-finite loss");
    fit.history.push_back(
        {"stage2", epoch, mean_loss, static_cast<double>(correct) / static_cast<double>(steps)});
  }

  if (model::checksum(frozen_encoder) != before) {
    throw ContractError("stage2: frozen encoder parameters changed during decoder training");
  }
  fit.decoder = std::move(decoder);
  return fit;
}

}  // namespace dbaug::training
