#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "alloydpo/rng.hpp"
#include "alloydpo/vocab.hpp"

namespace alloydpo::policy {

struct PolicyShape {
  int window = 40;  // context tokens
  int embed = 6;
  int hidden = 32;
};

// Fixed-window autoregressive token model:
//   x = concat(E[c_1], ..., E[c_W])        (context left-padded with <pad>)
//   h = tanh(x Wh + bh)
//   logits = h Wo + bo
// All parameters live in one flat float64 array so optimizers and
// finite-difference checks can treat them uniformly.
class PolicyParams {
 public:
  PolicyParams() = default;
  // All-zero parameters: the softmax is uniform at every position.
  PolicyParams(Vocab vocab, PolicyShape shape);

  // Embedding and hidden weights ~ N(0, init_scale^2); biases and the output
  // projection start at zero so the initial policy is uniform.
  static PolicyParams init(Vocab vocab, PolicyShape shape, double init_scale, std::uint64_t seed);

  const Vocab& vocab() const { return vocab_; }
  const PolicyShape& shape() const { return shape_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  std::span<double> flat() { return params_; }
  std::span<const double> flat() const { return params_; }
  std::size_t size() const { return params_.size(); }

  // Offsets of each block inside flat().
  std::size_t embedding_offset() const { return 0; }
  std::size_t hidden_w_offset() const;
  std::size_t hidden_b_offset() const;
  std::size_t out_w_offset() const;
  std::size_t out_b_offset() const;

  bool all_finite() const;

  // Versioned JSON checkpoint with vocab, window, embed, hidden and params.
  std::string to_json() const;
  static PolicyParams from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static PolicyParams load(const std::filesystem::path& path);

 private:
  Vocab vocab_;
  PolicyShape shape_;
  std::vector<double> params_;
};

// Next-token logits given everything before position `pos` of `tokens`.
std::vector<double> next_logits(const PolicyParams& params, std::span<const int> tokens, std::size_t pos);
// softmax(logits / temperature), max-shifted.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> logits);

// Teacher-forced per-token log-probabilities: entry t-1 is
// log p(tokens[t] | tokens[0..t)) for t = 1 .. n-1. Throws SequenceTooShort.
std::vector<double> logprobs(const PolicyParams& params, std::span<const int> tokens);

// Sum of log p(tokens[t] | prefix) over t >= first_scored. When `grad` is
// non-empty, adds weight * d(sum)/d(params) into it.
double sequence_logprob(const PolicyParams& params, std::span<const int> tokens, std::size_t first_scored,
                        double weight = 0.0, std::span<double> grad = {});

struct SampleResult {
  std::vector<int> tokens;  // generated continuation, ends with <eos> unless max_len was hit
  double logprob = 0.0;     // log-probability of `tokens` under softmax(logits / temperature)
};

// Autoregressive categorical sampling from softmax(logits / temperature).
SampleResult sample(const PolicyParams& params, std::span<const int> prompt, double temperature, int max_len, Rng& rng);
SampleResult sample(const PolicyParams& params, std::span<const int> prompt, double temperature, int max_len,
                    std::uint64_t seed);

// <bos> + tokenize(completion) + <eos>; the conditioning prompt is <bos>.
std::vector<int> encode_completion(const Vocab& vocab, std::string_view completion);

}  // namespace alloydpo::policy
