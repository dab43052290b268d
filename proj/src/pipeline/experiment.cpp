#include "dbaug/pipeline/experiment.hpp"

#include <map>
#include <optional>

#include "dbaug/error.hpp"
#include "dbaug/pipeline/parallel.hpp"

namespace dbaug::pipeline {

Condition baseline_condition() {
  Condition c;
  c.name = "original";
  c.augment = false;
  return c;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ValueError("experiment: at least one seed is required");
  if (multiplier < 1) throw ValueError("experiment: multiplier must be >= 1");
  if (!(low_resource_fraction > 0.0 && low_resource_fraction <= 1.0)) {
    throw ValueError("experiment: low-resource fraction must lie in (0, 1]");
  }
  augmenter.validate();
  downstream.validate();
  modification.validate();
  attack_cfg.validate();
}

namespace {

struct SeedOutcome {
  std::vector<DownstreamOutcome> per_condition;
  std::size_t skipped = 0;
  std::size_t attempts = 0;
};

}  // namespace

ExperimentResult run_experiment(std::span<const CorpusRecord> corpus, const ExperimentConfig& cfg,
                                std::span<const Condition> conditions) {
  cfg.validate();
  if (conditions.empty()) throw ValueError("experiment: no conditions");
  const auto vocab = build_vocabulary(corpus);
  const std::size_t classes = num_classes_of(corpus);
  model::ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  mc.num_classes = classes;
  mc.validate();
  for (const auto& c : conditions) {
    if (c.augment) c.strategy.validate(vocab.size());
  }
  const auto seqs = to_sequences(corpus, vocab);
  bool any_augment = false;
  for (const auto& c : conditions) any_augment = any_augment || c.augment;

  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t s) {
    const std::uint64_t seed = cfg.seeds[s];
    const auto split = split_corpus(corpus, seed, cfg.train_fraction);
    const auto subset = low_resource_subset(corpus, split.train, cfg.low_resource_fraction,
                                            cfg.floor_per_class, seed);
    std::vector<training::LabeledSequence> train_seqs, subset_seqs, test_seqs;
    for (auto i : split.train) train_seqs.push_back(seqs[i]);
    for (auto i : subset) subset_seqs.push_back(seqs[i]);
    for (auto i : split.test) test_seqs.push_back(seqs[i]);

    std::optional<model::Model> augmenter;
    if (any_augment) {
      training::TrainConfig tc = cfg.augmenter;
      tc.seed = splitmix64(cfg.augmenter.seed ^ seed);
      auto s1 = training::train_stage1(train_seqs, mc, tc);
      auto s2 = training::train_stage2(train_seqs, s1.encoder, mc, tc);
      augmenter = model::Model{mc, vocab, std::move(s1.encoder), std::move(s1.classifier),
                               std::move(s2.decoder)};
    }
    std::optional<AttackSetup> setup;
    if (cfg.attack) {
      setup = AttackSetup{neutral_distractors(train_seqs, vocab.size(), classes, cfg.attack_cfg),
                          cfg.attack_cfg};
    }
    const AttackSetup* attack = setup ? &*setup : nullptr;
    const auto base = one_hot_examples(subset_seqs, classes);

    SeedOutcome& out = outcomes[s];
    for (const auto& cond : conditions) {
      if (!cond.augment) {
        out.per_condition.push_back(run_downstream(
            mc, cfg.downstream,
            [&](std::size_t) { return std::span<const training::SoftExample>(base); }, test_seqs,
            seed, attack));
        continue;
      }
      AugmentationConfig acfg;
      acfg.modification = cfg.modification;
      acfg.strategy = cond.strategy;
      acfg.multiplier = cfg.multiplier;
      acfg.label_mode = cond.label_mode;
      acfg.seed = seed;
      auto build = [&](std::size_t steps) {
        acfg.modification.steps = steps;
        auto res = run_augmentation(subset_seqs, *augmenter, acfg, subset);
        out.skipped += res.failures.size();
        out.attempts += res.attempts;
        auto data = base;
        for (auto& p : res.pairs) data.push_back({std::move(p.tokens), std::move(p.soft_label)});
        return data;
      };
      std::map<std::size_t, std::vector<training::SoftExample>> by_steps;
      training::EpochData data;
      if (cond.curriculum) {
        // Each schedule step replaces the augmented set; earlier sets are dropped.
        data = [&](std::size_t epoch) {
          const auto n = curriculum_steps(epoch, cfg.curriculum_n0);
          auto it = by_steps.find(n);
          if (it == by_steps.end()) {
            by_steps.clear();
            it = by_steps.emplace(n, build(n)).first;
          }
          return std::span<const training::SoftExample>(it->second);
        };
      } else {
        by_steps.emplace(cfg.modification.steps, build(cfg.modification.steps));
        data = [&](std::size_t) {
          return std::span<const training::SoftExample>(by_steps.begin()->second);
        };
      }
      out.per_condition.push_back(
          run_downstream(mc, cfg.downstream, data, test_seqs, seed, attack));
    }
  });

  ExperimentResult result;
  for (const auto& c : conditions) {
    EvalReport r;
    r.condition = c.name;
    result.reports.push_back(std::move(r));
  }
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      const auto& o = outcomes[s].per_condition[c];
      result.reports[c].add(cfg.seeds[s], o.accuracy, o.attack);
    }
    result.skipped += outcomes[s].skipped;
    result.attempts += outcomes[s].attempts;
  }
  return result;
}

namespace {

decoding::MidK mid_k_of(const decoding::DecodingStrategy& base) {
  if (const auto* m = std::get_if<decoding::MidK>(&base.variant)) return *m;
  return decoding::MidK{};
}

Condition with_variant(const decoding::DecodingStrategy& base, std::string name,
                       decltype(decoding::DecodingStrategy::variant) v) {
  Condition c;
  c.name = std::move(name);
  c.strategy = base;
  c.strategy.variant = std::move(v);
  return c;
}

}  // namespace

std::vector<Condition> decoding_grid(const decoding::DecodingStrategy& base) {
  const auto mk = mid_k_of(base);
  return {with_variant(base, "greedy", decoding::Greedy{}),
          with_variant(base, "beam", decoding::Beam{}),
          with_variant(base, "top_k", decoding::TopK{mk.k}),
          with_variant(base, "mid_k", mk)};
}

std::vector<Condition> label_grid(const decoding::DecodingStrategy& base) {
  auto soft = with_variant(base, "soft", mid_k_of(base));
  auto hard = soft;
  hard.name = "hard";
  hard.label_mode = LabelMode::kHard;
  return {soft, hard};
}

std::vector<Condition> curriculum_grid(const decoding::DecodingStrategy& base) {
  auto off = with_variant(base, "curriculum_off", mid_k_of(base));
  auto on = off;
  on.name = "curriculum_on";
  on.curriculum = true;
  return {off, on};
}

}  // namespace dbaug::pipeline
