#include "alloydpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::policy {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "alloydpo-policy";

// Scratch buffers for one position's forward pass.
struct Activations {
  std::vector<int> context;
  std::vector<double> x;
  std::vector<double> h;
  std::vector<double> logits;
};

void forward(const PolicyParams& p, std::span<const int> tokens, std::size_t pos, Activations& a) {
  const auto& s = p.shape();
  const std::size_t W = static_cast<std::size_t>(s.window);
  const std::size_t D = static_cast<std::size_t>(s.embed);
  const std::size_t H = static_cast<std::size_t>(s.hidden);
  const std::size_t V = p.vocab_size();
  const auto theta = p.flat();

  a.context.assign(W, p.vocab().pad());
  for (std::size_t k = 0; k < W && k < pos; ++k) a.context[W - 1 - k] = tokens[pos - 1 - k];

  a.x.resize(W * D);
  for (std::size_t k = 0; k < W; ++k) {
    const double* e = theta.data() + p.embedding_offset() + static_cast<std::size_t>(a.context[k]) * D;
    std::copy(e, e + D, a.x.begin() + static_cast<std::ptrdiff_t>(k * D));
  }

  a.h.assign(theta.begin() + static_cast<std::ptrdiff_t>(p.hidden_b_offset()),
             theta.begin() + static_cast<std::ptrdiff_t>(p.hidden_b_offset() + H));
  const double* wh = theta.data() + p.hidden_w_offset();
  for (std::size_t i = 0; i < W * D; ++i) {
    const double xi = a.x[i];
    if (xi == 0.0) continue;
    const double* row = wh + i * H;
    for (std::size_t j = 0; j < H; ++j) a.h[j] += xi * row[j];
  }
  for (auto& v : a.h) v = std::tanh(v);

  a.logits.assign(theta.begin() + static_cast<std::ptrdiff_t>(p.out_b_offset()),
                  theta.begin() + static_cast<std::ptrdiff_t>(p.out_b_offset() + V));
  const double* wo = theta.data() + p.out_w_offset();
  for (std::size_t j = 0; j < H; ++j) {
    const double hj = a.h[j];
    const double* row = wo + j * V;
    for (std::size_t v = 0; v < V; ++v) a.logits[v] += hj * row[v];
  }
}

// Accumulates grad += dlogits-driven gradient for one forward pass.
void backward(const PolicyParams& p, const Activations& a, std::span<const double> dlogits, std::span<double> grad,
              std::vector<double>& dh) {
  const auto& s = p.shape();
  const std::size_t W = static_cast<std::size_t>(s.window);
  const std::size_t D = static_cast<std::size_t>(s.embed);
  const std::size_t H = static_cast<std::size_t>(s.hidden);
  const std::size_t V = p.vocab_size();
  const auto theta = p.flat();

  double* g_ob = grad.data() + p.out_b_offset();
  for (std::size_t v = 0; v < V; ++v) g_ob[v] += dlogits[v];

  dh.assign(H, 0.0);
  const double* wo = theta.data() + p.out_w_offset();
  double* g_wo = grad.data() + p.out_w_offset();
  for (std::size_t j = 0; j < H; ++j) {
    const double hj = a.h[j];
    const double* row = wo + j * V;
    double* grow = g_wo + j * V;
    double acc = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      grow[v] += hj * dlogits[v];
      acc += row[v] * dlogits[v];
    }
    dh[j] = acc * (1.0 - hj * hj);  // through tanh
  }

  double* g_hb = grad.data() + p.hidden_b_offset();
  for (std::size_t j = 0; j < H; ++j) g_hb[j] += dh[j];

  const double* wh = theta.data() + p.hidden_w_offset();
  double* g_wh = grad.data() + p.hidden_w_offset();
  double* g_emb = grad.data() + p.embedding_offset();
  for (std::size_t k = 0; k < W; ++k) {
    double* ge = g_emb + static_cast<std::size_t>(a.context[k]) * D;
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t i = k * D + d;
      const double xi = a.x[i];
      const double* row = wh + i * H;
      double* grow = g_wh + i * H;
      double dx = 0.0;
      for (std::size_t j = 0; j < H; ++j) {
        grow[j] += xi * dh[j];
        dx += row[j] * dh[j];
      }
      ge[d] += dx;
    }
  }
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

PolicyParams::PolicyParams(Vocab vocab, PolicyShape shape) : vocab_(std::move(vocab)), shape_(shape) {
  if (shape_.window < 1 || shape_.embed < 1 || shape_.hidden < 1) {
    throw Error(ErrorCode::InvalidArgument, "policy dimensions must be positive");
  }
  params_.assign(out_b_offset() + vocab_.size(), 0.0);
}

PolicyParams PolicyParams::init(Vocab vocab, PolicyShape shape, double init_scale, std::uint64_t seed) {
  PolicyParams p(std::move(vocab), shape);
  Rng rng(seed);
  for (std::size_t i = 0; i < p.hidden_b_offset(); ++i) p.params_[i] = rng.normal(0.0, init_scale);
  return p;
}

std::size_t PolicyParams::hidden_w_offset() const {
  return vocab_.size() * static_cast<std::size_t>(shape_.embed);
}
std::size_t PolicyParams::hidden_b_offset() const {
  return hidden_w_offset() +
         static_cast<std::size_t>(shape_.window) * static_cast<std::size_t>(shape_.embed) *
             static_cast<std::size_t>(shape_.hidden);
}
std::size_t PolicyParams::out_w_offset() const { return hidden_b_offset() + static_cast<std::size_t>(shape_.hidden); }
std::size_t PolicyParams::out_b_offset() const {
  return out_w_offset() + static_cast<std::size_t>(shape_.hidden) * vocab_.size();
}

bool PolicyParams::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

std::string PolicyParams::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["vocab"] = vocab_.tokens();
  j["window"] = shape_.window;
  j["embed"] = shape_.embed;
  j["hidden"] = shape_.hidden;
  j["params"] = params_;
  return j.dump();
}

PolicyParams PolicyParams::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kCheckpointFormat || j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::SchemaError, "unsupported policy checkpoint format/version");
    }
    PolicyParams p(Vocab(j.at("vocab").get<std::vector<std::string>>()),
                   PolicyShape{j.at("window").get<int>(), j.at("embed").get<int>(), j.at("hidden").get<int>()});
    auto values = j.at("params").get<std::vector<double>>();
    if (values.size() != p.params_.size()) throw Error(ErrorCode::SchemaError, "checkpoint parameter count mismatch");
    p.params_ = std::move(values);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("policy checkpoint: ") + e.what());
  }
}

void PolicyParams::save(const std::filesystem::path& path) const { textio::write_file_atomic(path, to_json() + "\n"); }

PolicyParams PolicyParams::load(const std::filesystem::path& path) { return from_json(textio::read_file(path)); }

std::vector<double> next_logits(const PolicyParams& params, std::span<const int> tokens, std::size_t pos) {
  Activations a;
  forward(params, tokens, pos, a);
  return a.logits;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += p[i] = std::exp((logits[i] - m) / temperature);
  for (auto& v : p) v /= s;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> logprobs(const PolicyParams& params, std::span<const int> tokens) {
  if (tokens.size() < 2) throw Error(ErrorCode::SequenceTooShort, "logprobs needs at least 2 tokens");
  std::vector<double> out;
  out.reserve(tokens.size() - 1);
  Activations a;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    forward(params, tokens, t, a);
    out.push_back(a.logits[static_cast<std::size_t>(tokens[t])] - log_sum_exp(a.logits));
  }
  return out;
}

double sequence_logprob(const PolicyParams& params, std::span<const int> tokens, std::size_t first_scored,
                        double weight, std::span<double> grad) {
  if (tokens.size() < 2) throw Error(ErrorCode::SequenceTooShort, "sequence needs at least 2 tokens");
  first_scored = std::max<std::size_t>(first_scored, 1);
  const bool want_grad = !grad.empty() && weight != 0.0;
  Activations a;
  std::vector<double> dlogits;
  std::vector<double> dh;
  double total = 0.0;
  for (std::size_t t = first_scored; t < tokens.size(); ++t) {
    forward(params, tokens, t, a);
    const double lse = log_sum_exp(a.logits);
    const auto target = static_cast<std::size_t>(tokens[t]);
    total += a.logits[target] - lse;
    if (!want_grad) continue;
    // d log p(target) / d logits = onehot(target) - softmax
    dlogits.resize(a.logits.size());
    for (std::size_t v = 0; v < a.logits.size(); ++v) dlogits[v] = -weight * std::exp(a.logits[v] - lse);
    dlogits[target] += weight;
    backward(params, a, dlogits, grad, dh);
  }
  return total;
}

SampleResult sample(const PolicyParams& params, std::span<const int> prompt, double temperature, int max_len,
                    Rng& rng) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  if (max_len < 1) throw Error(ErrorCode::InvalidArgument, "max_len must be >= 1");
  std::vector<int> seq(prompt.begin(), prompt.end());
  SampleResult out;
  Activations a;
  for (int step = 0; step < max_len; ++step) {
    forward(params, seq, seq.size(), a);
    const auto p = softmax(a.logits, temperature);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = p.size();
    for (std::size_t v = 0; v < p.size(); ++v) {
      acc += p[v];
      if (u < acc) {
        pick = v;
        break;
      }
    }
    if (pick == p.size()) {  // rounding left u above the final cumulative sum
      for (std::size_t v = p.size(); v-- > 0;) {
        if (p[v] > 0.0) {
          pick = v;
          break;
        }
      }
    }
    out.logprob += std::log(p[pick]);
    out.tokens.push_back(static_cast<int>(pick));
    seq.push_back(static_cast<int>(pick));
    if (static_cast<int>(pick) == params.vocab().eos()) break;
  }
  return out;
}

SampleResult sample(const PolicyParams& params, std::span<const int> prompt, double temperature, int max_len,
                    std::uint64_t seed) {
  Rng rng(seed);
  return sample(params, prompt, temperature, max_len, rng);
}

std::vector<int> encode_completion(const Vocab& vocab, std::string_view completion) {
  std::vector<int> seq{vocab.bos()};
  const auto body = vocab.tokenize(completion);
  seq.insert(seq.end(), body.begin(), body.end());
  seq.push_back(vocab.eos());
  return seq;
}

}  // namespace alloydpo::policy
