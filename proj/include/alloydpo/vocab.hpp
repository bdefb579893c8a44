#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "alloydpo/elements.hpp"

namespace alloydpo::policy {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kUnkToken = "<unk>";

// Dense token ids: the four special tokens first (pad, bos, eos, unk), then
// element symbols, digits, '.', '%' and the '|' field separator.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  static Vocab standard(const chem::ElementTable& elements);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  // -1 when absent.
  int id(std::string_view token) const;

  int pad() const { return 0; }
  int bos() const { return 1; }
  int eos() const { return 2; }
  int unk() const { return 3; }

  bool is_special(int id) const { return id >= 0 && id < 4; }
  bool is_digit(int id) const;
  bool is_element(int id) const;

  // Longest-match over the non-special tokens; each maximal run of
  // unrecognized characters becomes one <unk>.
  std::vector<int> tokenize(std::string_view text) const;
  // <pad>, <bos> and <eos> render as nothing, <unk> as "<unk>".
  std::string detokenize(std::span<const int> ids) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_token_len_ = 1;
};

}  // namespace alloydpo::policy
