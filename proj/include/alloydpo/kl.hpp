#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "alloydpo/policy.hpp"

namespace alloydpo::policy {

// Decides whether the realized token at `pos` of `tokens` is counted.
using TokenFilter = std::function<bool(std::span<const int> tokens, std::size_t pos)>;

TokenFilter all_tokens_filter();
// Element symbols, plus digits that sit in a run of at least two digits.
TokenFilter composition_token_filter(const Vocab& vocab);

double kl_divergence(std::span<const double> p, std::span<const double> q);

struct KlTrace {
  // kl[t-1] = KL(p(.|tokens[0..t)) || q(.|tokens[0..t))), t = 1 .. end, where
  // end is the first <eos> (inclusive) or the last position.
  std::vector<double> kl;
  std::vector<int> realized;  // tokens[t] for the same positions
  std::vector<bool> counted;  // filter verdict for the same positions
  double filtered_mean = 0.0; // 0 when nothing passes the filter
  std::size_t filtered_count = 0;
};

// Teacher-forced along `tokens`. Throws SequenceTooShort, InvalidArgument (vocab mismatch).
KlTrace kl_per_token(const PolicyParams& p, const PolicyParams& q, std::span<const int> tokens,
                     const TokenFilter& filter);

struct RunPair {
  const PolicyParams* sft = nullptr;
  const PolicyParams* dpo = nullptr;
};

struct KlCompareRow {
  std::string token;
  double delta = 0.0;   // mean KL(dpo_a || sft_a) - mean KL(dpo_b || sft_b)
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t count = 0;
};

// Per realized token type, averaged over occurrences; sorted by delta
// descending, then by token.
std::vector<KlCompareRow> kl_compare(const RunPair& a, const RunPair& b, std::span<const std::vector<int>> sequences,
                                     const TokenFilter& filter);

// `token,delta_kl,mean_kl_a,mean_kl_b,count`
std::string format_kl_compare_csv(std::span<const KlCompareRow> rows);

}  // namespace alloydpo::policy
