#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dbaug::model {

using TokenId = std::size_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kNumSpecial = 4;

/// Lowercased whitespace tokenization.
std::vector<std::string> tokenize(std::string_view text);

/// Bidirectional token/id map. Ids 0..3 are reserved for PAD, BOS, EOS and
/// UNK; every other id maps to exactly one token.
class Vocabulary {
 public:
  /// Sorted, de-duplicated tokens of `sentences` after the reserved ids.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences);
  /// Rebuilds from an id-ordered token list (as stored in checkpoints).
  static Vocabulary from_tokens(std::vector<std::string> id_to_token);

  std::size_t size() const { return id_to_token_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  /// UNK for unknown tokens.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  static bool is_special(TokenId id) { return id < kNumSpecial; }

  std::vector<TokenId> encode(std::string_view text) const;
  /// Space-joined tokens; PAD, BOS and EOS are skipped.
  std::string decode(std::span<const TokenId> ids) const;

  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  Vocabulary() = default;
  void index();

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

}  // namespace dbaug::model
