#include "dbaug/pipeline/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dbaug/error.hpp"
#include "dbaug/pipeline/parallel.hpp"

namespace dbaug::pipeline {

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

Split split_corpus(std::span<const CorpusRecord> records, std::uint64_t seed,
                   double train_fraction, std::size_t max_attempts) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValueError("split: train fraction must lie in (0, 1)");
  }
  if (records.size() < 2) throw ValueError("split: need at least two records");
  const std::size_t classes = num_classes_of(records);
  auto n_train = static_cast<std::size_t>(std::floor(train_fraction * double(records.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, records.size() - 1);

  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = derive_rng(seed, 0x5b17 + attempt);
    shuffle(order, rng);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < n_train; ++i) seen.insert(records[order[i]].label);
    if (seen.size() < classes) continue;
    Split s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    s.attempts = attempt + 1;
    return s;
  }
  throw ValueError("split: some class missing from the training part after " +
                   std::to_string(max_attempts) + " shuffles");
}

std::vector<std::size_t> low_resource_subset(std::span<const CorpusRecord> records,
                                             std::span<const std::size_t> train, double fraction,
                                             std::size_t floor_per_class, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValueError("low-resource fraction must lie in (0, 1]");
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes_of(records));
  for (auto i : train) by_class.at(records[i].label).push_back(i);
  Rng rng = derive_rng(seed, 0x10e5);
  std::vector<std::size_t> out;
  for (auto& members : by_class) {
    shuffle(members, rng);
    const auto want = std::max(
        floor_per_class,
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size()))));
    const auto take = std::min(want, members.size());
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

void EvalReport::add(std::uint64_t seed, double accuracy, std::optional<AttackStats> attack) {
  seeds.push_back(seed);
  accuracies.push_back(accuracy);
  if (attack) attacks.push_back(*attack);
  finalize();
}

void EvalReport::finalize() {
  mean = mean_of(accuracies);
  std = population_std(accuracies);
}

namespace {

template <typename F>
double mean_over(const std::vector<AttackStats>& a, F f) {
  std::vector<double> v;
  for (const auto& s : a) v.push_back(f(s));
  return mean_of(v);
}

}  // namespace

double EvalReport::mean_clean_accuracy() const {
  return mean_over(attacks, [](const AttackStats& s) { return s.clean_accuracy(); });
}
double EvalReport::mean_aua() const {
  return mean_over(attacks, [](const AttackStats& s) { return s.aua(); });
}
double EvalReport::mean_asr() const {
  return mean_over(attacks, [](const AttackStats& s) { return s.asr(); });
}

void DownstreamConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValueError("downstream: learning rate must be positive");
  }
  if (batch_size == 0) throw ValueError("downstream: batch size must be positive");
}

std::vector<training::SoftExample> one_hot_examples(std::span<const training::LabeledSequence> seqs,
                                                    std::size_t num_classes) {
  std::vector<training::SoftExample> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.label >= num_classes) throw ValueError("one_hot_examples: label out of range");
    std::vector<double> t(num_classes, 0.0);
    t[s.label] = 1.0;
    out.push_back({s.tokens, std::move(t)});
  }
  return out;
}

double test_accuracy(const model::EncoderParams& theta, const model::ClassifierParams& pi,
                     std::span<const training::LabeledSequence> test) {
  if (test.empty()) throw ValueError("test_accuracy: empty test set");
  std::size_t correct = 0;
  for (const auto& ex : test) {
    const auto q = model::classify(model::encode(ex.tokens, theta), pi);
    if (static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin()) == ex.label) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

DownstreamOutcome run_downstream(const model::ModelConfig& model_cfg, const DownstreamConfig& cfg,
                                 const training::EpochData& data,
                                 std::span<const training::LabeledSequence> test,
                                 std::uint64_t seed, const AttackSetup* attack) {
  cfg.validate();
  model::ModelConfig mc = model_cfg;
  mc.embed_init = cfg.embed_init;
  mc.validate();
  Rng init = derive_rng(seed, 0xd0);
  auto encoder = model::init_encoder(mc, init);
  auto classifier = model::init_classifier(mc, init);
  auto fit = training::fit_classifier(std::move(encoder), std::move(classifier), data, cfg.epochs,
                                      cfg.learning_rate, cfg.batch_size, splitmix64(seed),
                                      "downstream");
  DownstreamOutcome out;
  out.accuracy = test_accuracy(fit.encoder, fit.classifier, test);
  if (attack) out.attack = attack_eval(fit.encoder, fit.classifier, test, *attack);
  return out;
}

void EvalConfig::validate() const {
  if (seeds.empty()) throw ValueError("eval: at least one seed is required");
  if (!(low_resource_fraction > 0.0 && low_resource_fraction <= 1.0)) {
    throw ValueError("eval: low-resource fraction must lie in (0, 1]");
  }
  downstream.validate();
  attack_cfg.validate();
}

std::vector<EvalReport> downstream_eval(std::span<const CorpusRecord> corpus,
                                        std::span<const AugmentedPair> augmented,
                                        const model::Vocabulary& vocab, const EvalConfig& cfg) {
  cfg.validate();
  const std::size_t classes = num_classes_of(corpus);
  model::ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  mc.num_classes = classes;
  const auto seqs = to_sequences(corpus, vocab);

  struct SeedResult {
    DownstreamOutcome original, augmented;
  };
  std::vector<SeedResult> results(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t s) {
    const auto seed = cfg.seeds[s];
    const auto split = split_corpus(corpus, seed, cfg.train_fraction);
    const auto subset =
        low_resource_subset(corpus, split.train, cfg.low_resource_fraction, cfg.floor_per_class, seed);
    std::vector<training::LabeledSequence> train_seqs, subset_seqs, test_seqs;
    for (auto i : split.train) train_seqs.push_back(seqs[i]);
    for (auto i : subset) subset_seqs.push_back(seqs[i]);
    for (auto i : split.test) test_seqs.push_back(seqs[i]);

    std::optional<AttackSetup> setup;
    if (cfg.attack) {
      setup = AttackSetup{neutral_distractors(train_seqs, vocab.size(), classes, cfg.attack_cfg),
                          cfg.attack_cfg};
    }
    const auto base = one_hot_examples(subset_seqs, classes);
    auto with_aug = base;
    const std::set<std::size_t> allowed(subset.begin(), subset.end());
    for (const auto& p : augmented) {
      if (allowed.count(p.provenance.source_id)) with_aug.push_back({p.tokens, p.soft_label});
    }
    const AttackSetup* a = setup ? &*setup : nullptr;
    results[s].original = run_downstream(
        mc, cfg.downstream, [&](std::size_t) { return std::span<const training::SoftExample>(base); },
        test_seqs, seed, a);
    results[s].augmented = run_downstream(
        mc, cfg.downstream,
        [&](std::size_t) { return std::span<const training::SoftExample>(with_aug); }, test_seqs,
        seed, a);
  });

  std::vector<EvalReport> reports(2);
  reports[0].condition = "original";
  reports[1].condition = "original+augmented";
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    reports[0].add(cfg.seeds[s], results[s].original.accuracy, results[s].original.attack);
    reports[1].add(cfg.seeds[s], results[s].augmented.accuracy, results[s].augmented.attack);
  }
  return reports;
}

}  // namespace dbaug::pipeline
