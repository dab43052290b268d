#include "dbaug/model/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "dbaug/error.hpp"

namespace dbaug::model {

namespace {
const char* const kSpecialTokens[kNumSpecial] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences) {
  std::set<std::string> unique;
  for (const auto& s : sentences) unique.insert(s.begin(), s.end());
  for (const auto* special : kSpecialTokens) unique.erase(special);
  if (unique.empty()) throw ValueError("vocabulary: no tokens to index");
  std::vector<std::string> tokens(std::begin(kSpecialTokens), std::end(kSpecialTokens));
  tokens.insert(tokens.end(), unique.begin(), unique.end());
  Vocabulary v;
  v.id_to_token_ = std::move(tokens);
  v.index();
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < kNumSpecial + 1) {
    throw ValueError("vocabulary: need at least " + std::to_string(kNumSpecial + 1) + " entries");
  }
  for (std::size_t i = 0; i < kNumSpecial; ++i) {
    if (id_to_token[i] != kSpecialTokens[i]) {
      throw ValueError("vocabulary: reserved id " + std::to_string(i) + " must be " +
                       kSpecialTokens[i]);
    }
  }
  Vocabulary v;
  v.id_to_token_ = std::move(id_to_token);
  v.index();
  if (v.token_to_id_.size() != v.id_to_token_.size()) {
    throw ValueError("vocabulary: duplicate tokens");
  }
  return v;
}

void Vocabulary::index() {
  token_to_id_.clear();
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) token_to_id_.emplace(id_to_token_[i], i);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size()) {
    throw ValueError("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& tok : tokenize(text)) ids.push_back(id(tok));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (auto id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

}  // namespace dbaug::model
