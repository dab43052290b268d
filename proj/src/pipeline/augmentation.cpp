#include "dbaug/pipeline/augmentation.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "dbaug/error.hpp"
#include "dbaug/pipeline/parallel.hpp"
#include "dbaug/training/losses.hpp"
#include "json.hpp"

namespace dbaug::pipeline {

using nlohmann::json;

std::string to_string(LabelMode m) { return m == LabelMode::kSoft ? "soft" : "hard"; }

LabelMode label_mode_from_string(const std::string& s) {
  if (s == "soft") return LabelMode::kSoft;
  if (s == "hard") return LabelMode::kHard;
  throw ValueError("unknown label mode '" + s + "' (expected soft or hard)");
}

void AugmentationConfig::validate(std::size_t vocab_size) const {
  modification.validate();
  strategy.validate(vocab_size);
  if (multiplier < 1) throw ValueError("augmentation: multiplier must be >= 1");
  if (multiplier >= (std::size_t{1} << 20)) throw ValueError("augmentation: multiplier too large");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
    throw ValueError("augmentation: max_failure_rate must lie in [0, 1]");
  }
}

AugmentationResult run_augmentation(std::span<const training::LabeledSequence> sources,
                                    const model::Model& m, const AugmentationConfig& cfg,
                                    std::span<const std::size_t> source_ids) {
  cfg.validate(m.vocab.size());
  if (!source_ids.empty() && source_ids.size() != sources.size()) {
    throw ShapeError("run_augmentation: " + std::to_string(source_ids.size()) + " ids for " +
                     std::to_string(sources.size()) + " sources");
  }
  const std::size_t classes = m.classifier.num_classes();
  const std::size_t units = sources.size() * cfg.multiplier;
  std::vector<std::optional<AugmentedPair>> slots(units);
  std::vector<std::string> errors(units);

  parallel_for(units, cfg.threads, [&](std::size_t u) {
    const std::size_t s = u / cfg.multiplier;
    const std::size_t rep = u % cfg.multiplier;
    const std::size_t id = source_ids.empty() ? s : source_ids[s];
    Rng rng = derive_rng(cfg.seed, (static_cast<std::uint64_t>(id) << 20) | rep);
    boundary::Provenance prov;
    prov.source_id = id;
    prov.replicate = rep;
    prov.seed = cfg.seed;
    try {
      auto pair = boundary::augment_sentence(sources[s].tokens, m, cfg.modification, cfg.strategy,
                                             rng, prov);
      if (cfg.label_mode == LabelMode::kHard) {
        if (sources[s].label >= classes) {
          throw ValueError("label " + std::to_string(sources[s].label) + " out of range");
        }
        pair.soft_label.assign(classes, 0.0);
        pair.soft_label[sources[s].label] = 1.0;
      }
      slots[u] = std::move(pair);
    } catch (const Error& e) {
      errors[u] = "source " + std::to_string(id) + " replicate " + std::to_string(rep) + ": " +
                  e.what();
    }
  });

  AugmentationResult out;
  out.attempts = units;
  for (std::size_t u = 0; u < units; ++u) {
    if (slots[u]) {
      out.pairs.push_back(std::move(*slots[u]));
    } else {
      out.failures.push_back(std::move(errors[u]));
    }
  }
  if (units > 0 &&
      static_cast<double>(out.failures.size()) > cfg.max_failure_rate * static_cast<double>(units)) {
    throw GenerationError("augmentation failed for " + std::to_string(out.failures.size()) +
                          " of " + std::to_string(units) + " units; first: " +
                          out.failures.front());
  }
  return out;
}

std::size_t curriculum_steps(std::size_t epoch, std::size_t n0) { return n0 + epoch / 2; }

namespace {

json provenance_json(const boundary::Provenance& p) {
  return json{{"source_id", p.source_id}, {"replicate", p.replicate}, {"steps", p.steps},
              {"lambda", p.lambda},       {"strategy", p.strategy},   {"seed", p.seed}};
}

}  // namespace

std::string format_augmented(std::span<const AugmentedPair> pairs, const model::Vocabulary& vocab) {
  std::string out;
  for (const auto& p : pairs) {
    json j{{"text", vocab.decode(p.tokens)},
           {"soft_label", p.soft_label},
           {"provenance", provenance_json(p.provenance)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_augmented(const std::filesystem::path& path, std::span<const AugmentedPair> pairs,
                     const model::Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << format_augmented(pairs, vocab);
}

std::vector<AugmentedPair> parse_augmented(const std::string& text, const model::Vocabulary& vocab,
                                           std::size_t num_classes) {
  std::vector<AugmentedPair> pairs;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      AugmentedPair p;
      p.tokens = vocab.encode(j.at("text").get<std::string>());
      if (p.tokens.empty()) throw InputError(where + "empty text");
      p.soft_label = j.at("soft_label").get<std::vector<double>>();
      if (p.soft_label.size() != num_classes) {
        throw InputError(where + "soft_label has " + std::to_string(p.soft_label.size()) +
                         " entries, expected " + std::to_string(num_classes));
      }
      double sum = 0.0;
      for (double v : p.soft_label) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(where + "soft_label not a distribution");
        sum += v;
      }
      if (std::abs(sum - 1.0) > training::kSimplexTolerance) {
        throw InputError(where + "soft_label does not sum to 1");
      }
      if (j.contains("provenance")) {
        const auto& pj = j["provenance"];
        p.provenance.source_id = pj.value("source_id", std::size_t{0});
        p.provenance.replicate = pj.value("replicate", std::size_t{0});
        p.provenance.steps = pj.value("steps", std::size_t{0});
        p.provenance.lambda = pj.value("lambda", 0.0);
        p.provenance.strategy = pj.value("strategy", std::string{});
        p.provenance.seed = pj.value("seed", std::uint64_t{0});
      }
      pairs.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw InputError(where + e.what());
    }
  }
  return pairs;
}

std::vector<AugmentedPair> read_augmented(const std::filesystem::path& path,
                                          const model::Vocabulary& vocab, std::size_t num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open augmented file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_augmented(ss.str(), vocab, num_classes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<training::SoftExample> to_soft_examples(std::span<const AugmentedPair> pairs) {
  std::vector<training::SoftExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.tokens, p.soft_label});
  return out;
}

}  // namespace dbaug::pipeline
