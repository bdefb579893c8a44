#include "alloydpo/vocab.hpp"

#include <algorithm>
#include <cctype>

#include "alloydpo/error.hpp"

namespace alloydpo::policy {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 4 || tokens_[0] != kPadToken || tokens_[1] != kBosToken || tokens_[2] != kEosToken ||
      tokens_[3] != kUnkToken) {
    throw Error(ErrorCode::InvalidArgument, "vocab must start with <pad>, <bos>, <eos>, <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error(ErrorCode::InvalidArgument, "empty token in vocab");
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate token " + tokens_[i]);
    }
    if (i >= 4) max_token_len_ = std::max(max_token_len_, tokens_[i].size());
  }
}

Vocab Vocab::standard(const chem::ElementTable& elements) {
  std::vector<std::string> tokens = {std::string(kPadToken), std::string(kBosToken), std::string(kEosToken),
                                     std::string(kUnkToken)};
  auto symbols = elements.symbols();
  std::sort(symbols.begin(), symbols.end());
  tokens.insert(tokens.end(), symbols.begin(), symbols.end());
  for (char d = '0'; d <= '9'; ++d) tokens.emplace_back(1, d);
  tokens.emplace_back(".");
  tokens.emplace_back("%");
  tokens.emplace_back("|");
  return Vocab(std::move(tokens));
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

bool Vocab::is_digit(int id) const {
  if (id < 4 || static_cast<std::size_t>(id) >= tokens_.size()) return false;
  const auto& t = tokens_[static_cast<std::size_t>(id)];
  return t.size() == 1 && t[0] >= '0' && t[0] <= '9';
}

bool Vocab::is_element(int id) const {
  if (id < 4 || static_cast<std::size_t>(id) >= tokens_.size()) return false;
  const auto& t = tokens_[static_cast<std::size_t>(id)];
  return std::isupper(static_cast<unsigned char>(t[0])) != 0;
}

std::vector<int> Vocab::tokenize(std::string_view text) const {
  std::vector<int> out;
  auto match_at = [&](std::size_t pos) -> std::pair<int, std::size_t> {
    const std::size_t longest = std::min(max_token_len_, text.size() - pos);
    for (std::size_t len = longest; len >= 1; --len) {
      auto it = index_.find(std::string(text.substr(pos, len)));
      if (it != index_.end() && it->second >= 4) return {it->second, len};
    }
    return {-1, 0};
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto [tok, len] = match_at(pos);
    if (tok >= 0) {
      out.push_back(tok);
      pos += len;
      continue;
    }
    out.push_back(unk());
    while (pos < text.size() && match_at(pos).first < 0) ++pos;
  }
  return out;
}

std::string Vocab::detokenize(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == pad() || id == bos() || id == eos()) continue;
    out += token(id);
  }
  return out;
}

}  // namespace alloydpo::policy
