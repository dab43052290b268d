#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbaug/model/vocabulary.hpp"
#include "dbaug/training/trainer.hpp"

namespace dbaug::pipeline {

struct CorpusRecord {
  std::string text;
  std::size_t label = 0;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

/// Reads line-delimited JSON records {"text": ..., "label": ...}. Blank lines
/// are skipped. When `num_classes` is given, labels must be below it;
/// otherwise it is inferred as max label + 1 and must be at least 2.
/// Errors carry the 1-based line number.
std::vector<CorpusRecord> ingest(const std::filesystem::path& path,
                                 std::optional<std::size_t> num_classes = std::nullopt);
std::vector<CorpusRecord> parse_corpus(const std::string& text,
                                       std::optional<std::size_t> num_classes = std::nullopt);

void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> records);
std::string format_corpus(std::span<const CorpusRecord> records);

std::size_t num_classes_of(std::span<const CorpusRecord> records);

model::Vocabulary build_vocabulary(std::span<const CorpusRecord> records);

std::vector<training::LabeledSequence> to_sequences(std::span<const CorpusRecord> records,
                                                    const model::Vocabulary& vocab);

/// Template sentences for a binary sentiment task. Every sentence holds at
/// least one sentiment word and all of its sentiment words share the
/// sentence's polarity, so a bag-of-words linear rule separates the classes.
/// Balanced, and deterministic per seed.
std::vector<CorpusRecord> generate_toy_corpus(std::size_t n_per_class, std::uint64_t seed);

/// Sentiment-bearing words of the toy generator, per class (0 = negative,
/// 1 = positive).
const std::vector<std::string>& toy_sentiment_words(std::size_t label);

}  // namespace dbaug::pipeline
