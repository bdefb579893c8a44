#include "alloydpo/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::policy {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::size_t scored_count(const Sequence& s) {
  return s.tokens.size() > s.first_scored ? s.tokens.size() - std::max<std::size_t>(s.first_scored, 1) : 0;
}

void check_pair(const Vocab& vocab, const PreferenceExample& p) {
  for (const Sequence* s : {&p.chosen, &p.rejected}) {
    if (s->tokens.size() < 2 || s->tokens.back() != vocab.eos()) {
      throw Error(ErrorCode::InvalidArgument, "preference sequences must end with <eos>");
    }
  }
}

void clip(std::vector<double>& g, double max_norm) {
  if (max_norm <= 0) return;
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& v : g) v *= s;
  }
}

// v <- mu v - lr g ; theta <- theta + v
void momentum_step(PolicyParams& p, std::vector<double>& velocity, const std::vector<double>& g, double lr, double mu) {
  auto theta = p.flat();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = mu * velocity[i] - lr * g[i];
    theta[i] += velocity[i];
  }
}

void shuffle(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

void check_common(double lr, int batch_size, double momentum) {
  if (!(lr > 0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (momentum < 0 || momentum >= 1) throw Error(ErrorCode::InvalidArgument, "momentum must be in [0, 1)");
}

}  // namespace

Sequence make_sequence(const Vocab& vocab, std::string_view completion) {
  return Sequence{encode_completion(vocab, completion), 1};
}

double sft_loss(const PolicyParams& params, std::span<const Sequence> batch, std::span<double> grad) {
  std::size_t tokens = 0;
  for (const auto& s : batch) tokens += scored_count(s);
  if (tokens == 0) throw Error(ErrorCode::SequenceTooShort, "batch has no completion tokens");
  const double w = -1.0 / static_cast<double>(tokens);
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (const auto& s : batch) {
    if (scored_count(s) == 0) continue;
    total += sequence_logprob(params, s.tokens, s.first_scored, w, grad);
  }
  return -total / static_cast<double>(tokens);
}

std::string format_log_csv(std::span<const LogRow> rows) {
  std::string out = "step,loss,reward_margin\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + textio::format_double(r.loss) + ",";
    if (r.reward_margin) out += textio::format_double(*r.reward_margin);
    out += "\n";
  }
  return out;
}

SftResult train_sft(PolicyParams params, std::span<const Sequence> corpus, const SftOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyInput, "SFT corpus is empty");
  if (options.epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  check_common(options.lr, options.batch_size, options.momentum);

  SftResult result;
  const double initial = sft_loss(params, corpus);
  if (!std::isfinite(initial)) throw Error(ErrorCode::NonFiniteLoss, "initial SFT loss is not finite");
  result.log.push_back({0, initial, std::nullopt});

  Rng rng(options.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(params.size());
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<Sequence> batch;
  const auto bs = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) batch.push_back(corpus[order[k]]);
      const double loss = sft_loss(params, batch, grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "SFT loss diverged in epoch " + std::to_string(epoch));
      }
      clip(grad, options.clip_norm);
      momentum_step(params, velocity, grad, options.lr, options.momentum);
    }
    const double loss = sft_loss(params, corpus);
    if (!std::isfinite(loss) || !params.all_finite()) {
      throw Error(ErrorCode::NonFiniteLoss, "SFT loss diverged after epoch " + std::to_string(epoch));
    }
    result.log.push_back({epoch, loss, std::nullopt});
  }
  result.params = std::move(params);
  return result;
}

RefLogprobs reference_logprobs(const PolicyParams& ref, const PreferenceExample& pair) {
  return {sequence_logprob(ref, pair.chosen.tokens, pair.chosen.first_scored),
          sequence_logprob(ref, pair.rejected.tokens, pair.rejected.first_scored)};
}

DpoLoss dpo_loss(const PolicyParams& params, const PolicyParams& ref, std::span<const PreferenceExample> batch,
                 double beta, bool with_grad) {
  std::vector<RefLogprobs> r;
  r.reserve(batch.size());
  for (const auto& p : batch) r.push_back(reference_logprobs(ref, p));
  return dpo_loss(params, r, batch, beta, with_grad);
}

DpoLoss dpo_loss(const PolicyParams& params, std::span<const RefLogprobs> ref, std::span<const PreferenceExample> batch,
                 double beta, bool with_grad) {
  if (!(beta > 0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  if (batch.empty()) throw Error(ErrorCode::EmptyInput, "empty preference batch");
  if (ref.size() != batch.size()) throw Error(ErrorCode::LengthMismatch, "reference log-probs do not match batch");
  const double n = static_cast<double>(batch.size());
  DpoLoss out;
  if (with_grad) out.grad.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& p = batch[i];
    check_pair(params.vocab(), p);
    const double lp_c = sequence_logprob(params, p.chosen.tokens, p.chosen.first_scored);
    const double lp_r = sequence_logprob(params, p.rejected.tokens, p.rejected.first_scored);
    const double z = beta * ((lp_c - ref[i].chosen) - (lp_r - ref[i].rejected));
    out.loss += softplus(-z) / n;
    out.reward_margin += z / n;
    if (with_grad) {
      // d softplus(-z) / dz = -sigmoid(-z)
      const double w = sigmoid(-z) * beta / n;
      sequence_logprob(params, p.chosen.tokens, p.chosen.first_scored, -w, out.grad);
      sequence_logprob(params, p.rejected.tokens, p.rejected.first_scored, w, out.grad);
    }
  }
  if (!std::isfinite(out.loss)) throw Error(ErrorCode::NonFiniteLoss, "DPO loss is not finite");
  return out;
}

DpoResult train_dpo(const PolicyParams& sft, std::span<const PreferenceExample> pairs, const DpoOptions& options) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no preference pairs");
  if (!(options.beta > 0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  if (options.steps < 0) throw Error(ErrorCode::InvalidArgument, "steps must be >= 0");
  check_common(options.lr, options.batch_size, options.momentum);

  DpoResult result{sft, {}};
  if (options.steps == 0) return result;

  std::vector<RefLogprobs> ref;
  ref.reserve(pairs.size());
  for (const auto& p : pairs) {
    check_pair(sft.vocab(), p);
    ref.push_back(reference_logprobs(sft, p));
  }

  Rng rng(options.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::size_t cursor = 0;
  std::vector<double> velocity(sft.size(), 0.0);
  std::vector<PreferenceExample> batch;
  std::vector<RefLogprobs> batch_ref;

  for (int step = 1; step <= options.steps; ++step) {
    batch.clear();
    batch_ref.clear();
    for (int k = 0; k < options.batch_size && k < static_cast<int>(pairs.size()); ++k) {
      if (cursor == order.size()) {
        shuffle(order, rng);
        cursor = 0;
      }
      batch.push_back(pairs[order[cursor]]);
      batch_ref.push_back(ref[order[cursor]]);
      ++cursor;
    }
    auto l = dpo_loss(result.params, batch_ref, batch, options.beta, true);
    result.log.push_back({step, l.loss, l.reward_margin});
    clip(l.grad, options.clip_norm);
    momentum_step(result.params, velocity, l.grad, options.lr, options.momentum);
    if (!result.params.all_finite()) {
      throw Error(ErrorCode::NonFiniteLoss, "DPO parameters diverged at step " + std::to_string(step));
    }
  }
  return result;
}

}  // namespace alloydpo::policy
