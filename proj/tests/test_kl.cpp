#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "alloydpo/error.hpp"
#include "alloydpo/kl.hpp"
#include "test_support.hpp"

using namespace alloydpo;
using namespace alloydpo::policy;

namespace {

const PolicyShape kTiny{3, 2, 4};

double brute_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

}  // namespace

TEST(KlDivergence, HandBuiltDistributions) {
  const std::vector<double> p{0.7, 0.2, 0.1};
  const std::vector<double> q{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const double expect = 0.7 * std::log(2.1) + 0.2 * std::log(0.6) + 0.1 * std::log(0.3);
  EXPECT_NEAR(kl_divergence(p, q), expect, 1e-15);
  EXPECT_EQ(kl_divergence(p, p), 0.0);
}

TEST(KlPerToken, SelfIsZero) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 1.0, 1);
  const std::vector<int> s{1, 4, 5, 6, 2};
  const auto tr = kl_per_token(p, p, s, all_tokens_filter());
  ASSERT_EQ(tr.kl.size(), 4u);
  for (double k : tr.kl) EXPECT_EQ(k, 0.0);
  EXPECT_EQ(tr.filtered_count, 4u);
}

TEST(KlPerToken, NonNegativeAndMatchesBruteForce) {
  const auto v = test::tiny_vocab();
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = test::random_params(v, kTiny, 1.0, 100 + trial);
    const auto q = test::random_params(v, kTiny, 1.0, 200 + trial);
    std::vector<int> s{1};
    for (int i = 0; i < 6; ++i) s.push_back(4 + static_cast<int>(rng.below(3)));
    s.push_back(2);
    const auto tr = kl_per_token(p, q, s, all_tokens_filter());
    for (std::size_t t = 1; t < s.size(); ++t) {
      ASSERT_GE(tr.kl[t - 1], 0.0);
      const double bf = brute_kl(softmax(next_logits(p, s, t)), softmax(next_logits(q, s, t)));
      ASSERT_NEAR(tr.kl[t - 1], bf, 1e-12);
      ASSERT_EQ(tr.realized[t - 1], s[t]);
    }
  }
}

TEST(KlPerToken, TrimsAtFirstEos) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 1.0, 3);
  const auto q = test::random_params(v, kTiny, 1.0, 4);
  const std::vector<int> s{1, 4, 2, 5, 6, 2};
  const auto tr = kl_per_token(p, q, s, all_tokens_filter());
  EXPECT_EQ(tr.kl.size(), 2u);
  EXPECT_THROW(kl_per_token(p, q, std::vector<int>{1}, all_tokens_filter()), Error);
}

TEST(KlFilter, ElementsAndMultiDigitRuns) {
  const auto v = Vocab::standard(test::elements());
  const auto f = composition_token_filter(v);
  const auto s = encode_completion(v, "Mo0.5Nb1|Al5|45.0%");
  std::string kept;
  for (std::size_t t = 1; t < s.size(); ++t)
    if (f(s, t)) kept += v.token(s[t]) + " ";
  EXPECT_EQ(kept, "Mo Nb Al 4 5 ");
}

TEST(KlCompare, IdenticalRunsGiveZeroDeltaAndCounts) {
  const auto v = test::tiny_vocab();
  const auto sft = test::random_params(v, kTiny, 1.0, 5);
  const auto dpo = test::random_params(v, kTiny, 1.0, 6);
  const std::vector<std::vector<int>> seqs{{1, 4, 4, 5, 2}, {1, 6, 4, 2}};
  const RunPair run{&sft, &dpo};
  const auto rows = kl_compare(run, run, seqs, all_tokens_filter());
  std::map<std::string, std::size_t> counts;
  for (const auto& r : rows) {
    EXPECT_EQ(r.delta, 0.0);
    counts[r.token] = r.count;
  }
  EXPECT_EQ(counts, (std::map<std::string, std::size_t>{{"A", 3}, {"B", 1}, {"C", 1}, {"<eos>", 2}}));
}

TEST(KlCompare, TwoSequenceFixtureMatchesBruteForce) {
  const auto v = test::tiny_vocab();
  const auto sft_a = test::random_params(v, kTiny, 1.0, 7);
  const auto dpo_a = test::random_params(v, kTiny, 1.0, 8);
  const auto sft_b = test::random_params(v, kTiny, 1.0, 9);
  const auto dpo_b = test::random_params(v, kTiny, 1.0, 10);
  const std::vector<std::vector<int>> seqs{{1, 4, 5, 2}, {1, 5, 5, 4, 2}};
  const auto rows = kl_compare({&sft_a, &dpo_a}, {&sft_b, &dpo_b}, seqs, all_tokens_filter());

  std::map<int, std::pair<double, double>> sums;
  std::map<int, int> n;
  for (const auto& s : seqs)
    for (std::size_t t = 1; t < s.size(); ++t) {
      sums[s[t]].first += brute_kl(softmax(next_logits(dpo_a, s, t)), softmax(next_logits(sft_a, s, t)));
      sums[s[t]].second += brute_kl(softmax(next_logits(dpo_b, s, t)), softmax(next_logits(sft_b, s, t)));
      ++n[s[t]];
    }
  ASSERT_EQ(rows.size(), sums.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int tok = v.id(rows[i].token);
    EXPECT_EQ(rows[i].count, static_cast<std::size_t>(n[tok]));
    EXPECT_NEAR(rows[i].mean_a, sums[tok].first / n[tok], 1e-12);
    EXPECT_NEAR(rows[i].mean_b, sums[tok].second / n[tok], 1e-12);
    EXPECT_NEAR(rows[i].delta, rows[i].mean_a - rows[i].mean_b, 1e-15);
    if (i > 0) EXPECT_GE(rows[i - 1].delta, rows[i].delta);
  }
  const auto csv = format_kl_compare_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "token,delta_kl,mean_kl_a,mean_kl_b,count");
}
