#include "dbaug/pipeline/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbaug/error.hpp"

namespace dbaug::pipeline {

using model::TokenId;

double AttackStats::clean_accuracy() const {
  return total == 0 ? 0.0 : static_cast<double>(clean_correct) / static_cast<double>(total);
}

double AttackStats::aua() const {
  return total == 0 ? 0.0
                    : static_cast<double>(clean_correct - flipped) / static_cast<double>(total);
}

double AttackStats::asr() const {
  return clean_correct == 0 ? 0.0
                            : static_cast<double>(flipped) / static_cast<double>(clean_correct);
}

bool AttackStats::identity_holds() const {
  if (flipped > clean_correct || clean_correct > total) return false;
  // Exact over the rationals; the doubles may differ by rounding only.
  return std::abs(aua() - clean_accuracy() * (1.0 - asr())) <= 1e-12;
}

void AttackConfig::validate() const {
  if (!(budget >= 0.0 && budget <= 1.0)) throw ValueError("attack: budget must lie in [0, 1]");
  if (!(neutrality >= 0.0 && neutrality <= 1.0)) {
    throw ValueError("attack: neutrality must lie in [0, 1]");
  }
}

std::vector<TokenId> neutral_distractors(std::span<const training::LabeledSequence> train,
                                         std::size_t vocab_size, std::size_t num_classes,
                                         const AttackConfig& cfg) {
  cfg.validate();
  if (num_classes < 2) throw ValueError("neutral_distractors: need at least two classes");
  std::vector<std::size_t> per_class(num_classes, 0);
  std::vector<std::vector<double>> counts(vocab_size, std::vector<double>(num_classes, 0.0));
  for (const auto& ex : train) {
    if (ex.label >= num_classes) throw ValueError("neutral_distractors: label out of range");
    ++per_class[ex.label];
    for (auto t : ex.tokens) {
      if (t >= vocab_size) throw ValueError("neutral_distractors: token id out of range");
      counts[t][ex.label] += 1.0;
    }
  }
  std::vector<TokenId> out;
  for (TokenId t = model::kNumSpecial; t < vocab_size; ++t) {
    double total = 0.0;
    for (double c : counts[t]) total += c;
    if (total < static_cast<double>(cfg.min_count)) continue;
    // Compare rates per sentence so unbalanced classes do not skew the test.
    std::vector<double> rate(num_classes, 0.0);
    double rate_sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (per_class[c] == 0) continue;
      rate[c] = counts[t][c] / static_cast<double>(per_class[c]);
      rate_sum += rate[c];
    }
    const auto [lo, hi] = std::minmax_element(rate.begin(), rate.end());
    if ((*hi - *lo) / rate_sum <= cfg.neutrality) out.push_back(t);
  }
  return out;
}

namespace {

double class_prob(std::span<const TokenId> tokens, const model::EncoderParams& theta,
                  const model::ClassifierParams& pi, std::size_t label) {
  return model::classify(model::encode(tokens, theta), pi)[label];
}

std::size_t predict(std::span<const TokenId> tokens, const model::EncoderParams& theta,
                    const model::ClassifierParams& pi) {
  const auto q = model::classify(model::encode(tokens, theta), pi);
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

}  // namespace

AttackStats attack_eval(const model::EncoderParams& theta, const model::ClassifierParams& pi,
                        std::span<const training::LabeledSequence> test, const AttackSetup& setup) {
  setup.cfg.validate();
  if (test.empty()) throw ValueError("attack_eval: empty test set");
  AttackStats stats;
  stats.total = test.size();
  for (const auto& ex : test) {
    if (predict(ex.tokens, theta, pi) != ex.label) continue;
    ++stats.clean_correct;
    const std::size_t len = ex.tokens.size();
    const auto budget = static_cast<std::size_t>(
        std::floor(setup.cfg.budget * static_cast<double>(len) + 1e-9));
    if (budget == 0 || setup.distractors.empty()) continue;

    std::vector<TokenId> x = ex.tokens;
    const double base = class_prob(x, theta, pi, ex.label);
    std::vector<double> drop(len);
    for (std::size_t i = 0; i < len; ++i) {
      const TokenId keep = x[i];
      x[i] = model::kUnk;
      drop[i] = base - class_prob(x, theta, pi, ex.label);
      x[i] = keep;
    }
    std::vector<std::size_t> order(len);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return drop[a] > drop[b]; });

    for (std::size_t r = 0; r < budget && r < len; ++r) {
      const std::size_t pos = order[r];
      TokenId best = x[pos];
      double best_p = 2.0;
      for (TokenId d : setup.distractors) {
        x[pos] = d;
        const double p = class_prob(x, theta, pi, ex.label);
        if (p < best_p) {
          best_p = p;
          best = d;
        }
      }
      x[pos] = best;
      if (predict(x, theta, pi) != ex.label) {
        ++stats.flipped;
        break;
      }
    }
  }
  return stats;
}

}  // namespace dbaug::pipeline
