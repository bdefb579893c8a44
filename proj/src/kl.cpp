#include "alloydpo/kl.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::policy {

TokenFilter all_tokens_filter() {
  return [](std::span<const int>, std::size_t) { return true; };
}

TokenFilter composition_token_filter(const Vocab& vocab) {
  return [vocab](std::span<const int> tokens, std::size_t pos) {
    const int id = tokens[pos];
    if (vocab.is_element(id)) return true;
    if (!vocab.is_digit(id)) return false;
    const bool left = pos > 0 && vocab.is_digit(tokens[pos - 1]);
    const bool right = pos + 1 < tokens.size() && vocab.is_digit(tokens[pos + 1]);
    return left || right;
  };
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::LengthMismatch, "distributions differ in size");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(kl, 0.0);  // rounding can produce -1e-17
}

KlTrace kl_per_token(const PolicyParams& p, const PolicyParams& q, std::span<const int> tokens,
                     const TokenFilter& filter) {
  if (tokens.size() < 2) throw Error(ErrorCode::SequenceTooShort, "KL trace needs at least 2 tokens");
  if (!(p.vocab() == q.vocab())) throw Error(ErrorCode::InvalidArgument, "policies use different vocabularies");
  KlTrace out;
  double sum = 0.0;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto lp = next_logits(p, tokens, t);
    const auto lq = next_logits(q, tokens, t);
    const double kl = kl_divergence(softmax(lp), softmax(lq));
    const bool counted = filter(tokens, t);
    out.kl.push_back(kl);
    out.realized.push_back(tokens[t]);
    out.counted.push_back(counted);
    if (counted) {
      sum += kl;
      ++out.filtered_count;
    }
    if (tokens[t] == p.vocab().eos()) break;
  }
  if (out.filtered_count > 0) out.filtered_mean = sum / static_cast<double>(out.filtered_count);
  return out;
}

std::vector<KlCompareRow> kl_compare(const RunPair& a, const RunPair& b, std::span<const std::vector<int>> sequences,
                                     const TokenFilter& filter) {
  if (!a.sft || !a.dpo || !b.sft || !b.dpo) throw Error(ErrorCode::InvalidArgument, "kl_compare needs four policies");
  struct Acc {
    double sum_a = 0.0;
    double sum_b = 0.0;
    std::size_t count = 0;
  };
  std::map<int, Acc> acc;
  for (const auto& seq : sequences) {
    const auto ta = kl_per_token(*a.dpo, *a.sft, seq, filter);
    const auto tb = kl_per_token(*b.dpo, *b.sft, seq, filter);
    for (std::size_t i = 0; i < ta.kl.size(); ++i) {
      if (!ta.counted[i]) continue;
      auto& x = acc[ta.realized[i]];
      x.sum_a += ta.kl[i];
      x.sum_b += tb.kl[i];
      ++x.count;
    }
  }
  std::vector<KlCompareRow> rows;
  for (const auto& [id, x] : acc) {
    const double n = static_cast<double>(x.count);
    KlCompareRow r;
    r.token = a.sft->vocab().token(id);
    r.mean_a = x.sum_a / n;
    r.mean_b = x.sum_b / n;
    r.delta = r.mean_a - r.mean_b;
    r.count = x.count;
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const KlCompareRow& l, const KlCompareRow& r) {
    if (l.delta != r.delta) return l.delta > r.delta;
    return l.token < r.token;
  });
  return rows;
}

std::string format_kl_compare_csv(std::span<const KlCompareRow> rows) {
  std::string out = "token,delta_kl,mean_kl_a,mean_kl_b,count\n";
  for (const auto& r : rows) {
    out += r.token + "," + textio::format_double(r.delta) + "," + textio::format_double(r.mean_a) + "," +
           textio::format_double(r.mean_b) + "," + std::to_string(r.count) + "\n";
  }
  return out;
}

}  // namespace alloydpo::policy
