#include "dbaug/pipeline/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dbaug/error.hpp"
#include "json.hpp"

namespace dbaug::pipeline {

using nlohmann::json;

std::vector<CorpusRecord> parse_corpus(const std::string& text,
                                       std::optional<std::size_t> num_classes) {
  std::vector<CorpusRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw InputError(where + "not a JSON object");
    }
    if (!j.is_object()) throw InputError(where + "not a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) {
      throw InputError(where + "missing string field 'text'");
    }
    if (!j.contains("label") || !j["label"].is_number_integer()) {
      throw InputError(where + "missing integer field 'label'");
    }
    const auto label = j["label"].get<long long>();
    if (label < 0) throw InputError(where + "negative label");
    CorpusRecord rec{j["text"].get<std::string>(), static_cast<std::size_t>(label)};
    if (model::tokenize(rec.text).empty()) throw InputError(where + "text has no tokens");
    if (num_classes && rec.label >= *num_classes) {
      throw InputError(where + "label " + std::to_string(rec.label) + " out of range for " +
                       std::to_string(*num_classes) + " classes");
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw InputError("empty corpus");
  if (!num_classes && num_classes_of(records) < 2) {
    throw InputError("corpus has fewer than two classes");
  }
  return records;
}

std::vector<CorpusRecord> ingest(const std::filesystem::path& path,
                                 std::optional<std::size_t> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_corpus(ss.str(), num_classes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string format_corpus(std::span<const CorpusRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += json{{"text", r.text}, {"label", r.label}}.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << format_corpus(records);
}

std::size_t num_classes_of(std::span<const CorpusRecord> records) {
  std::size_t mx = 0;
  for (const auto& r : records) mx = std::max(mx, r.label);
  return records.empty() ? 0 : mx + 1;
}

model::Vocabulary build_vocabulary(std::span<const CorpusRecord> records) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(records.size());
  for (const auto& r : records) sentences.push_back(model::tokenize(r.text));
  return model::Vocabulary::build(sentences);
}

std::vector<training::LabeledSequence> to_sequences(std::span<const CorpusRecord> records,
                                                    const model::Vocabulary& vocab) {
  std::vector<training::LabeledSequence> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({vocab.encode(r.text), r.label});
  return out;
}

}  // namespace dbaug::pipeline
