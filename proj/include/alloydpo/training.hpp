#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alloydpo/policy.hpp"

namespace alloydpo::policy {

// Token sequence whose positions [first_scored, size) are completion tokens.
// With the default prompt (<bos> only) every token after <bos> is scored.
struct Sequence {
  std::vector<int> tokens;
  std::size_t first_scored = 1;
};

Sequence make_sequence(const Vocab& vocab, std::string_view completion);

// Mean negative log-likelihood per completion token over `batch`. When `grad`
// is non-empty it receives the gradient of that mean (overwritten, not added).
double sft_loss(const PolicyParams& params, std::span<const Sequence> batch, std::span<double> grad = {});

struct LogRow {
  int step = 0;
  double loss = 0.0;
  std::optional<double> reward_margin;
};

// `step,loss,reward_margin`; the margin column is empty for SFT rows.
std::string format_log_csv(std::span<const LogRow> rows);

struct SftOptions {
  double lr = 0.5;
  int epochs = 16;
  int batch_size = 32;
  double momentum = 0.9;
  double clip_norm = 5.0;  // global gradient-norm clip, 0 disables
  std::uint64_t seed = 0;
};

struct SftResult {
  PolicyParams params;
  // Row 0 is the full-corpus loss before training, row e the loss after epoch e.
  std::vector<LogRow> log;
};

// Minibatch SGD with momentum on sft_loss; examples are reshuffled every
// epoch from a seeded stream. Throws EmptyInput, InvalidArgument, NonFiniteLoss.
SftResult train_sft(PolicyParams params, std::span<const Sequence> corpus, const SftOptions& options);

struct PreferenceExample {
  Sequence chosen;
  Sequence rejected;
};

// Summed reference log-probabilities of one pair's completions.
struct RefLogprobs {
  double chosen = 0.0;
  double rejected = 0.0;
};

RefLogprobs reference_logprobs(const PolicyParams& ref, const PreferenceExample& pair);

struct DpoLoss {
  double loss = 0.0;           // mean of -log sigmoid(beta (r+ - r-))
  double reward_margin = 0.0;  // mean of beta (r+ - r-)
  std::vector<double> grad;    // d loss / d params; empty when not requested
};

// r = sum log pi_theta(y) - sum log pi_ref(y) over completion tokens.
// Throws InvalidArgument (beta <= 0, sequences not ending in <eos>) and NonFiniteLoss.
DpoLoss dpo_loss(const PolicyParams& params, const PolicyParams& ref, std::span<const PreferenceExample> batch,
                 double beta, bool with_grad = true);
// Same, with the reference sums precomputed (ref[i] belongs to batch[i]).
DpoLoss dpo_loss(const PolicyParams& params, std::span<const RefLogprobs> ref, std::span<const PreferenceExample> batch,
                 double beta, bool with_grad = true);

struct DpoOptions {
  double beta = 0.5;
  double lr = 0.005;
  int steps = 100;
  int batch_size = 32;
  double momentum = 0.9;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

struct DpoResult {
  PolicyParams params;
  std::vector<LogRow> log;  // one row per step, measured on that step's batch before the update
};

// Frozen reference = the input params. Batches walk a per-epoch shuffle of the
// pairs. Throws EmptyInput, InvalidArgument, NonFiniteLoss.
DpoResult train_dpo(const PolicyParams& sft, std::span<const PreferenceExample> pairs, const DpoOptions& options);

}  // namespace alloydpo::policy
