#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "alloydpo/error.hpp"
#include "alloydpo/policy.hpp"
#include "alloydpo/vocab.hpp"
#include "test_support.hpp"

using namespace alloydpo;
using namespace alloydpo::policy;

namespace {

const PolicyShape kTiny{3, 2, 4};

// Independent forward pass over the documented flat layout.
std::vector<double> oracle_logits(const PolicyParams& p, const std::vector<int>& tokens, std::size_t pos) {
  const std::size_t W = p.shape().window, D = p.shape().embed, H = p.shape().hidden, V = p.vocab_size();
  const auto th = p.flat();
  std::vector<double> x;
  for (std::size_t k = 0; k < W; ++k) {
    // slot k holds the token W - k positions back
    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(pos) - static_cast<std::ptrdiff_t>(W - k);
    const int tok = idx >= 0 ? tokens[static_cast<std::size_t>(idx)] : 0;
    for (std::size_t d = 0; d < D; ++d) x.push_back(th[static_cast<std::size_t>(tok) * D + d]);
  }
  const std::size_t wh = V * D, bh = wh + W * D * H, wo = bh + H, bo = wo + H * V;
  std::vector<double> logits(V);
  for (std::size_t v = 0; v < V; ++v) logits[v] = th[bo + v];
  for (std::size_t j = 0; j < H; ++j) {
    double a = th[bh + j];
    for (std::size_t i = 0; i < W * D; ++i) a += x[i] * th[wh + i * H + j];
    const double h = std::tanh(a);
    for (std::size_t v = 0; v < V; ++v) logits[v] += h * th[wo + j * V + v];
  }
  return logits;
}

double oracle_logprob(const PolicyParams& p, const std::vector<int>& tokens, std::size_t t) {
  const auto z = oracle_logits(p, tokens, t);
  double s = 0;
  for (double v : z) s += std::exp(v);
  return z[static_cast<std::size_t>(tokens[t])] - std::log(s);
}

// Policy whose next-token distribution ignores context: softmax(bias).
PolicyParams bias_only(const Vocab& vocab, const std::map<std::string, double>& probs) {
  PolicyParams p(vocab, kTiny);
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    auto it = probs.find(vocab.token(static_cast<int>(v)));
    p.flat()[p.out_b_offset() + v] = it == probs.end() ? -1e3 : std::log(it->second);
  }
  return p;
}

}  // namespace

TEST(Vocab, StandardLayout) {
  const auto v = Vocab::standard(test::elements());
  EXPECT_EQ(v.size(), 43u);
  EXPECT_EQ(v.token(0), kPadToken);
  EXPECT_EQ(v.token(3), kUnkToken);
  EXPECT_TRUE(v.is_element(v.id("Mo")));
  EXPECT_TRUE(v.is_digit(v.id("7")));
  EXPECT_FALSE(v.is_digit(v.id(".")));
  EXPECT_EQ(v.id("Xq"), -1);
  EXPECT_THROW(Vocab({"A", "B"}), Error);
}

TEST(Vocab, TokenizeExamples) {
  const auto v = Vocab::standard(test::elements());
  const std::vector<int> expect{v.id("Mo"), v.id("0"), v.id("."), v.id("5"), v.id("0"), v.id("0"), v.id("0")};
  EXPECT_EQ(v.tokenize("Mo0.5000"), expect);
  EXPECT_EQ(v.tokenize("Xq"), std::vector<int>{v.unk()});
  // "Nb" is one token, not N + b
  EXPECT_EQ(v.tokenize("Nb1"), (std::vector<int>{v.id("Nb"), v.id("1")}));
}

TEST(Vocab, RoundTripOnCanonicalTriples) {
  const auto v = Vocab::standard(test::elements());
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto t = chem::CandidateTriple::make(test::random_composition(rng, 4), test::random_composition(rng, 4),
                                               0.2 + 0.5 * rng.uniform());
    const auto s = chem::format_triple(t);
    ASSERT_EQ(v.detokenize(v.tokenize(s)), s);
  }
}

TEST(Policy, ParameterCountAndLayout) {
  const auto v = Vocab::standard(test::elements());
  const PolicyParams p(v, PolicyShape{});
  EXPECT_EQ(p.size(), 43u * 6 + 40u * 6 * 32 + 32 + 32u * 43 + 43);
  EXPECT_LT(p.size(), 10000u);
  EXPECT_EQ(p.out_b_offset() + 43, p.size());
}

TEST(Policy, UniformInitGivesMinusLogV) {
  const auto v = Vocab::standard(test::elements());
  const auto p = PolicyParams::init(v, PolicyShape{}, 0.1, 3);
  const auto seq = encode_completion(v, "Mo0.5000Nb0.5000|Al0.5000Ni0.5000|45.0%");
  for (double lp : logprobs(p, seq)) EXPECT_NEAR(lp, -std::log(43.0), 1e-12);
  EXPECT_EQ(seq.front(), v.bos());
  EXPECT_EQ(seq.back(), v.eos());
}

TEST(Policy, LogprobsMatchOracleAndNormalize) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 0.8, 5);
  const std::vector<int> seq{1, 4, 5, 6, 4, 2};
  const auto lp = logprobs(p, seq);
  ASSERT_EQ(lp.size(), seq.size() - 1);
  for (std::size_t t = 1; t < seq.size(); ++t) {
    EXPECT_NEAR(lp[t - 1], oracle_logprob(p, seq, t), 1e-12);
    EXPECT_LE(lp[t - 1], 0.0);
    const auto probs = softmax(next_logits(p, seq, t));
    double s = 0;
    for (double q : probs) s += q;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_THROW(logprobs(p, std::vector<int>{1}), Error);
}

TEST(Policy, SequenceLogprobSumsScoredPositions) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 0.5, 6);
  const std::vector<int> seq{1, 4, 4, 5, 2};
  const auto lp = logprobs(p, seq);
  EXPECT_NEAR(sequence_logprob(p, seq, 1), lp[0] + lp[1] + lp[2] + lp[3], 1e-12);
  EXPECT_NEAR(sequence_logprob(p, seq, 3), lp[2] + lp[3], 1e-12);
}

TEST(Policy, SequenceLogprobGradientMatchesFiniteDifferences) {
  const auto v = test::tiny_vocab();
  auto p = test::random_params(v, kTiny, 0.7, 7);
  const std::vector<int> seq{1, 5, 4, 6, 2};
  std::vector<double> grad(p.size(), 0.0);
  sequence_logprob(p, seq, 1, 1.0, grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p.flat()[i];
    p.flat()[i] = saved + h;
    const double up = sequence_logprob(p, seq, 1);
    p.flat()[i] = saved - h;
    const double down = sequence_logprob(p, seq, 1);
    p.flat()[i] = saved;
    const double fd = (up - down) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << i;
  }
}

TEST(Sampling, MatchesHandBuiltDistribution) {
  const auto v = test::tiny_vocab();
  const std::map<std::string, double> probs{{"A", 0.5}, {"B", 0.3}, {"<eos>", 0.2}};
  const auto p = bias_only(v, probs);
  const std::vector<int> prompt{v.bos()};
  std::map<int, int> counts;
  const int n = 1000;
  Rng rng(12);
  for (int i = 0; i < n; ++i) ++counts[sample(p, prompt, 1.0, 1, rng).tokens.at(0)];
  for (const auto& [tok, q] : probs) {
    const double expected = n * q;
    const double sd = std::sqrt(n * q * (1 - q));
    EXPECT_NEAR(counts[v.id(tok)], expected, 3 * sd) << tok;
  }
  EXPECT_EQ(counts.size(), 3u);
}

TEST(Sampling, LowTemperatureIsGreedy) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 1.0, 13);
  const std::vector<int> prompt{v.bos()};
  const auto s = sample(p, prompt, 1e-4, 8, 99);
  std::vector<int> greedy{v.bos()};
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto z = next_logits(p, greedy, greedy.size());
    const int best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    ASSERT_EQ(s.tokens[i], best) << i;
    greedy.push_back(best);
    if (best == v.eos()) break;
  }
}

TEST(Sampling, DeterministicUnderSeed) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 1.0, 14);
  const std::vector<int> prompt{v.bos()};
  EXPECT_EQ(sample(p, prompt, 1.0, 20, 5).tokens, sample(p, prompt, 1.0, 20, 5).tokens);
}

TEST(Sampling, SamplerAgreesWithScorer) {
  const auto v = test::tiny_vocab();
  const auto p = test::random_params(v, kTiny, 1.0, 15);
  const std::vector<int> prompt{v.bos()};
  Rng rng(16);
  for (int i = 0; i < 200; ++i) {
    const auto s = sample(p, prompt, 1.0, 12, rng);
    std::vector<int> full = prompt;
    full.insert(full.end(), s.tokens.begin(), s.tokens.end());
    double sum = 0;
    for (double lp : logprobs(p, full)) sum += lp;
    ASSERT_NEAR(std::exp(sum), std::exp(s.logprob), 1e-12);
    ASSERT_LE(s.tokens.size(), 12u);
    if (s.tokens.size() < 12) ASSERT_EQ(s.tokens.back(), v.eos());
  }
}

TEST(Checkpoint, RoundTrip) {
  test::TempDir dir("ckpt");
  const auto v = Vocab::standard(test::elements());
  const auto p = PolicyParams::init(v, PolicyShape{8, 3, 5}, 0.3, 21);
  p.save(dir / "p.json");
  const auto back = PolicyParams::load(dir / "p.json");
  EXPECT_EQ(back.vocab(), v);
  EXPECT_EQ(back.shape().window, 8);
  EXPECT_EQ(back.shape().embed, 3);
  EXPECT_EQ(back.shape().hidden, 5);
  ASSERT_EQ(back.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) ASSERT_EQ(back.flat()[i], p.flat()[i]);
  EXPECT_EQ(back.to_json(), p.to_json());
  EXPECT_THROW(PolicyParams::from_json("{\"format\":\"other\"}"), Error);
}
