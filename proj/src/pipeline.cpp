#include "alloydpo/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>

#include "alloydpo/analysis.hpp"
#include "alloydpo/baselines.hpp"
#include "alloydpo/datasets.hpp"
#include "alloydpo/error.hpp"
#include "alloydpo/kl.hpp"
#include "alloydpo/metrics.hpp"
#include "alloydpo/oracle.hpp"
#include "alloydpo/policy.hpp"
#include "alloydpo/rng.hpp"
#include "alloydpo/surrogate.hpp"
#include "alloydpo/textio.hpp"
#include "alloydpo/training.hpp"

namespace alloydpo::cli {

namespace fs = std::filesystem;

namespace {

// Independent seed streams per stage so that changing one stage's
// consumption never shifts another's randomness.
enum class Stream : std::uint64_t {
  kPoolCap = 1,
  kSftData = 2,
  kSftSubset = 3,
  kPolicyInit = 4,
  kSftShuffle = 5,
  kSampling = 6,
  kPairs = 7,
  kDpoShuffle = 8,
  kBaseline = 9,
};

std::uint64_t derive_seed(std::uint64_t seed, Stream s) { return Rng(seed).fork(static_cast<std::uint64_t>(s)).next(); }

void log(const std::string& msg) { std::cerr << "[alloydpo] " << msg << "\n"; }

void require_input(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorCode::MissingInput, "missing input: " + p.string());
}

// k sorted distinct indices out of n (all of them when k == 0 or k >= n).
std::vector<std::size_t> choose_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (k == 0 || k >= n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  Rng rng(seed);
  std::set<std::size_t> picked;
  for (std::size_t j = n - k; j < n; ++j) {  // Floyd's algorithm
    const std::size_t t = rng.below(j + 1);
    if (!picked.insert(t).second) picked.insert(j);
  }
  return {picked.begin(), picked.end()};
}

template <typename T>
std::vector<T> subset(const std::vector<T>& v, std::size_t k, std::uint64_t seed) {
  std::vector<T> out;
  for (std::size_t i : choose_indices(v.size(), k, seed)) out.push_back(v[i]);
  return out;
}

policy::PolicyShape shape_of(const RunConfig& c) { return {c.window, c.embed, c.hidden}; }

std::vector<policy::Sequence> to_sequences(const policy::Vocab& vocab, const std::vector<std::string>& texts) {
  std::vector<policy::Sequence> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(policy::make_sequence(vocab, t));
  return out;
}

nlohmann::ordered_json triple_fields(nlohmann::ordered_json j, const chem::CandidateTriple& t) {
  j["bcc"] = chem::format_composition(t.bcc);
  j["b2"] = chem::format_composition(t.b2);
  j["b2_vol"] = t.b2_vol;
  return j;
}

std::optional<chem::CandidateTriple> triple_from_json(const nlohmann::json& j, const chem::ElementTable& table) {
  if (!j.contains("bcc")) return std::nullopt;
  return chem::CandidateTriple::make(chem::parse_formula(j.at("bcc").get<std::string>(), table),
                                     chem::parse_formula(j.at("b2").get<std::string>(), table),
                                     j.at("b2_vol").get<double>());
}

std::vector<std::string> parse_query(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& part : textio::split(s, ',')) {
    const auto t = textio::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

Context make_context(const RunConfig& cfg) {
  validate(cfg);
  Context ctx;
  ctx.cfg = cfg;
  ctx.elements = chem::ElementTable::load_csv(cfg.element_table);
  ctx.roles = chem::RoleTable::load_csv(cfg.role_table);
  ctx.roles.check_whitelist(ctx.elements);
  ctx.grid = phase::standard_grid(cfg.grid_step_k);

  const auto classifier =
      cfg.phase_rules.empty() ? phase::PhaseClassifier() : phase::PhaseClassifier::load_csv(cfg.phase_rules);
  std::shared_ptr<const phase::PhaseOracle> base;
  if (cfg.oracle == "surrogate") {
    base = std::make_shared<phase::SurrogateOracle>(ctx.elements, ctx.roles);
  } else {
    phase::FileBridgeOracle::Options o;
    o.request_dir = cfg.bridge_request_dir;
    o.response_dir = cfg.bridge_response_dir;
    o.timeout = std::chrono::seconds(cfg.bridge_timeout_s);
    fs::create_directories(o.request_dir);
    fs::create_directories(o.response_dir);
    base = std::make_shared<phase::FileBridgeOracle>(o, classifier);
  }
  if (!cfg.oracle_cache.empty()) {
    fs::create_directories(cfg.oracle_cache);
    ctx.oracle = std::make_shared<phase::CachedOracle>(base, cfg.oracle_cache, classifier);
  } else {
    ctx.oracle = base;
  }
  fs::create_directories(cfg.out_dir);
  return ctx;
}

std::string format_samples_jsonl(const std::vector<SampleRecord>& samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["text"] = s.text;
    if (s.triple) {
      j = triple_fields(std::move(j), *s.triple);
    } else {
      j["error"] = s.error;
    }
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SampleRecord> read_samples_jsonl(const fs::path& path, const chem::ElementTable& table) {
  require_input(path);
  std::vector<SampleRecord> out;
  for (const auto& line : textio::read_lines(path)) {
    if (textio::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SampleRecord r;
      r.text = j.at("text").get<std::string>();
      r.triple = triple_from_json(j, table);
      if (!r.triple) r.error = j.value("error", std::string("no triple"));
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("sample record: ") + e.what());
    }
  }
  return out;
}

std::string format_scored_jsonl(const std::vector<ScoredRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["text"] = r.text;
    if (r.scored) {
      const auto body = reward::to_json(*r.scored);
      for (const auto& [k, v] : body.items()) j[k] = v;
    } else {
      if (r.triple) j = triple_fields(std::move(j), *r.triple);
      j["reward"] = reward::kWorstReward;
      j["error"] = r.error;
    }
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ScoredRecord> read_scored_jsonl(const fs::path& path, const chem::ElementTable& table) {
  require_input(path);
  std::vector<ScoredRecord> out;
  for (const auto& line : textio::read_lines(path)) {
    if (textio::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScoredRecord r;
      r.text = j.at("text").get<std::string>();
      if (j.contains("criteria")) {
        r.scored = reward::scored_from_json(j, table);
        r.triple = r.scored->triple;
      } else {
        r.triple = triple_from_json(j, table);
        r.error = j.value("error", std::string());
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("scored record: ") + e.what());
    }
  }
  return out;
}

void stage_gen_pools(const Context& ctx, const fs::path& out) {
  const auto& c = ctx.cfg;
  const auto bcc_all = data::enumerate_bcc_pool(ctx.roles, data::kDefaultConcentrations, c.max_bcc_elements);
  const auto b2_all = data::enumerate_b2_pool(ctx.roles);
  auto bcc = data::filter_single_phase(bcc_all, *ctx.oracle, ctx.grid, phase::PhaseClass::BCC, c.single_phase_min);
  auto b2 = data::filter_single_phase(b2_all, *ctx.oracle, ctx.grid, phase::PhaseClass::B2, c.single_phase_min);
  log("pools: " + std::to_string(bcc.size()) + "/" + std::to_string(bcc_all.size()) + " BCC and " +
      std::to_string(b2.size()) + "/" + std::to_string(b2_all.size()) + " B2 compositions pass the filter");
  const auto seed = derive_seed(c.seed, Stream::kPoolCap);
  bcc = subset(bcc, static_cast<std::size_t>(c.max_bcc_pool), seed);
  b2 = subset(b2, static_cast<std::size_t>(c.max_b2_pool), seed + 1);

  data::CompositionPool pool;
  const std::string prov = "enumerated;" + c.oracle;
  for (auto& x : bcc) pool.bcc.push_back({std::move(x), prov});
  for (auto& x : b2) pool.b2.push_back({std::move(x), prov});
  textio::write_file_atomic(out, data::format_pool_csv(pool));
}

void stage_gen_sft(const Context& ctx, const fs::path& pools, const fs::path& out) {
  require_input(pools);
  const auto& c = ctx.cfg;
  const auto pool = data::read_pool_csv(pools, ctx.elements);
  data::VolumeSampler sampler;
  sampler.kind = c.volume_sampler == "uniform" ? data::VolumeSampler::Kind::Uniform
                                               : data::VolumeSampler::Kind::ClampedNormal;
  sampler.mean = c.volume_mean;
  sampler.sd = c.volume_sd;
  const auto examples =
      data::build_sft_dataset(pool, c.volumes_per_pair, sampler, derive_seed(c.seed, Stream::kSftData));
  log("sft: " + std::to_string(examples.size()) + " examples");
  textio::write_file_atomic(out, data::format_sft_jsonl(examples));
}

void stage_train_sft(const Context& ctx, const fs::path& sft, const fs::path& policy_out, const fs::path& log_out) {
  require_input(sft);
  const auto& c = ctx.cfg;
  const auto examples =
      subset(data::read_sft_jsonl(sft, ctx.elements), static_cast<std::size_t>(c.sft_examples),
             derive_seed(c.seed, Stream::kSftSubset));
  std::vector<std::string> texts;
  for (const auto& e : examples) texts.push_back(e.completion);
  const auto vocab = policy::Vocab::standard(ctx.elements);
  const auto corpus = to_sequences(vocab, texts);
  auto init = policy::PolicyParams::init(vocab, shape_of(c), c.init_scale, derive_seed(c.seed, Stream::kPolicyInit));
  policy::SftOptions o;
  o.lr = c.sft_lr;
  o.epochs = c.sft_epochs;
  o.batch_size = c.sft_batch;
  o.momentum = c.sft_momentum;
  o.seed = derive_seed(c.seed, Stream::kSftShuffle);
  log("train-sft: " + std::to_string(corpus.size()) + " sequences, " + std::to_string(init.size()) + " parameters");
  const auto result = policy::train_sft(std::move(init), corpus, o);
  log("train-sft: loss " + textio::format_fixed(result.log.front().loss, 4) + " -> " +
      textio::format_fixed(result.log.back().loss, 4));
  result.params.save(policy_out);
  textio::write_file_atomic(log_out, policy::format_log_csv(result.log));
}

void stage_sample(const Context& ctx, const fs::path& policy_path, const fs::path& out) {
  require_input(policy_path);
  const auto& c = ctx.cfg;
  const auto params = policy::PolicyParams::load(policy_path);
  const Rng base(derive_seed(c.seed, Stream::kSampling));
  const std::vector<int> prompt{params.vocab().bos()};
  std::vector<SampleRecord> samples;
  std::size_t parsed = 0;
  for (int i = 0; i < c.n_samples; ++i) {
    Rng rng = base.fork(static_cast<std::uint64_t>(i));
    const auto s = policy::sample(params, prompt, c.temperature, c.max_len, rng);
    SampleRecord r;
    r.text = params.vocab().detokenize(s.tokens);
    if (s.tokens.empty() || s.tokens.back() != params.vocab().eos()) {
      r.error = "no <eos> within max_len";
    } else {
      try {
        r.triple = chem::parse_triple(r.text, ctx.elements);
        ++parsed;
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
    samples.push_back(std::move(r));
  }
  log("sample: " + std::to_string(parsed) + "/" + std::to_string(samples.size()) + " samples parse");
  textio::write_file_atomic(out, format_samples_jsonl(samples));
}

void stage_score(const Context& ctx, const fs::path& samples_path, const fs::path& out) {
  const auto samples = read_samples_jsonl(samples_path, ctx.elements);
  std::vector<chem::CandidateTriple> triples;
  for (const auto& s : samples) {
    if (s.triple) triples.push_back(*s.triple);
  }
  const auto outcomes = reward::score_batch(triples, *ctx.oracle, ctx.grid, ctx.cfg.workers);
  std::vector<ScoredRecord> records;
  std::size_t k = 0;
  double sum = 0.0;
  for (const auto& s : samples) {
    ScoredRecord r;
    r.text = s.text;
    r.triple = s.triple;
    if (s.triple) {
      const auto& o = outcomes[k++];
      if (o.ok()) {
        r.scored = *o.scored;
      } else {
        r.error = o.error;
      }
    } else {
      r.error = s.error;
    }
    sum += r.reward();
    records.push_back(std::move(r));
  }
  if (!records.empty()) {
    log("score: " + std::to_string(records.size()) + " records, mean reward " +
        textio::format_fixed(sum / static_cast<double>(records.size()), 4));
  }
  textio::write_file_atomic(out, format_scored_jsonl(records));
}

void stage_build_dpo(const Context& ctx, const fs::path& scored_path, const fs::path& out) {
  const auto records = read_scored_jsonl(scored_path, ctx.elements);
  // Unscored samples enter at the worst reward, so they are only ever rejected.
  std::vector<data::RankedCompletion> scored;
  for (const auto& r : records) {
    scored.push_back({r.scored ? chem::format_triple(r.scored->triple) : r.text, r.reward()});
  }
  const auto pairs = data::build_dpo_pairs(scored, ctx.cfg.top_frac, ctx.cfg.rejected_per_chosen,
                                           derive_seed(ctx.cfg.seed, Stream::kPairs));
  log("build-dpo: " + std::to_string(pairs.size()) + " pairs from " + std::to_string(scored.size()) + " samples");
  textio::write_file_atomic(out, data::format_pairs_jsonl(pairs));
}

void stage_train_dpo(const Context& ctx, const fs::path& sft_policy, const fs::path& pairs_path,
                     const fs::path& policy_out, const fs::path& log_out) {
  require_input(sft_policy);
  require_input(pairs_path);
  const auto& c = ctx.cfg;
  const auto sft = policy::PolicyParams::load(sft_policy);
  const auto pairs = data::read_pairs_jsonl(pairs_path);
  std::vector<policy::PreferenceExample> examples;
  examples.reserve(pairs.size());
  for (const auto& p : pairs) {
    examples.push_back({policy::make_sequence(sft.vocab(), p.chosen), policy::make_sequence(sft.vocab(), p.rejected)});
  }
  policy::DpoOptions o;
  o.beta = c.beta;
  o.lr = c.dpo_lr;
  o.steps = c.dpo_steps;
  o.batch_size = c.dpo_batch;
  o.momentum = c.dpo_momentum;
  o.seed = derive_seed(c.seed, Stream::kDpoShuffle);
  const auto result = policy::train_dpo(sft, examples, o);
  if (!result.log.empty()) {
    log("train-dpo: loss " + textio::format_fixed(result.log.front().loss, 4) + " -> " +
        textio::format_fixed(result.log.back().loss, 4) + ", margin " +
        textio::format_fixed(*result.log.back().reward_margin, 4));
  }
  result.params.save(policy_out);
  textio::write_file_atomic(log_out, policy::format_log_csv(result.log));
}

void stage_eval(const Context& ctx, const fs::path& scored_path, const fs::path& pools, const fs::path& out) {
  require_input(pools);
  const auto records = read_scored_jsonl(scored_path, ctx.elements);
  const auto pool = data::read_pool_csv(pools, ctx.elements);
  std::vector<std::optional<chem::CandidateTriple>> samples;
  std::vector<std::optional<double>> rewards;
  for (const auto& r : records) {
    samples.push_back(r.triple);
    rewards.push_back(r.scored ? std::optional<double>(r.scored->reward) : std::nullopt);
  }
  std::vector<chem::CandidateTriple> reference;
  std::vector<chem::Composition> known;
  for (const auto& b : pool.bcc) {
    known.push_back(b.composition);
    for (const auto& p : pool.b2) reference.push_back({b.composition, p.composition, 0.45});
  }
  for (const auto& p : pool.b2) known.push_back(p.composition);
  metrics::MetricConfig mc;
  mc.coverage_delta = ctx.cfg.coverage_delta;
  mc.novelty_delta = ctx.cfg.novelty_delta;
  mc.unique_n = ctx.cfg.unique_n;
  const auto report = metrics::metric_report(samples, rewards, reference, known, ctx.elements, mc);
  log("eval: mean reward " + textio::format_fixed(report.mean_reward, 4) + ", validity " +
      textio::format_fixed(report.validity_rate, 3) + ", coverage recall/precision " +
      textio::format_fixed(report.coverage_recall, 3) + "/" + textio::format_fixed(report.coverage_precision, 3));
  textio::write_file_atomic(out, metrics::to_json(report).dump(2) + "\n");
}

void stage_baseline(const Context& ctx, const fs::path& out) {
  const auto triples = baselines::random_search(ctx.roles, ctx.cfg.baseline_n, derive_seed(ctx.cfg.seed, Stream::kBaseline));
  std::vector<SampleRecord> samples;
  for (const auto& t : triples) samples.push_back({chem::format_triple(t), t, {}});
  textio::write_file_atomic(out, format_samples_jsonl(samples));
}

void stage_analyze(const Context& ctx, const fs::path& before_path, const fs::path& after_path, const fs::path& out_dir,
                   const std::optional<KlInputs>& kl) {
  const auto before = read_scored_jsonl(before_path, ctx.elements);
  const auto after = read_scored_jsonl(after_path, ctx.elements);
  auto criteria_of = [](const std::vector<ScoredRecord>& rs) {
    std::vector<reward::CriteriaResult> out;
    for (const auto& r : rs) {
      // unscored samples meet no criterion
      out.push_back(r.scored ? r.scored->criteria : reward::CriteriaResult{false, false, false, true, std::nullopt});
    }
    return out;
  };
  std::vector<double> ra, rb;
  for (const auto& r : after) ra.push_back(r.reward());
  for (const auto& r : before) rb.push_back(r.reward());

  analysis::AnalysisReport report;
  report.wdl = analysis::win_draw_loss(ra, rb);
  report.objectives = analysis::objective_delta(analysis::objective_satisfaction(criteria_of(before)),
                                                analysis::objective_satisfaction(criteria_of(after)));
  std::vector<chem::CandidateTriple> triples;
  for (const auto& r : after) {
    if (r.triple) triples.push_back(*r.triple);
  }
  if (!triples.empty()) {
    report.element_freq = analysis::element_frequency(triples, analysis::Which::Both);
    report.top_combos = analysis::top_combinations(triples, ctx.cfg.top_k, parse_query(ctx.cfg.query_set));
  }
  fs::create_directories(out_dir);
  analysis::emit_report(report, out_dir);

  if (kl) {
    const auto a_sft = policy::PolicyParams::load(kl->a_sft);
    const auto a_dpo = policy::PolicyParams::load(kl->a_dpo);
    const auto b_sft = policy::PolicyParams::load(kl->b_sft);
    const auto b_dpo = policy::PolicyParams::load(kl->b_dpo);
    std::vector<std::vector<int>> seqs;
    for (const auto& r : before) seqs.push_back(policy::encode_completion(a_sft.vocab(), r.text));
    const auto rows = policy::kl_compare({&a_sft, &a_dpo}, {&b_sft, &b_dpo}, seqs,
                                         policy::composition_token_filter(a_sft.vocab()));
    textio::write_file_atomic(out_dir / "kl_compare.csv", policy::format_kl_compare_csv(rows));
  }
  log("analyze: win/draw/loss " + textio::format_fixed(report.wdl->win_pct, 1) + "/" +
      textio::format_fixed(report.wdl->draw_pct, 1) + "/" + textio::format_fixed(report.wdl->loss_pct, 1));
}

void run_pipeline(const Context& ctx) {
  using namespace files;
  stage_gen_pools(ctx, ctx.out(kPools));
  stage_gen_sft(ctx, ctx.out(kPools), ctx.out(kSft));
  stage_train_sft(ctx, ctx.out(kSft), ctx.out(kSftPolicy), ctx.out(kSftLog));
  stage_sample(ctx, ctx.out(kSftPolicy), ctx.out(kSamplesSft));
  stage_score(ctx, ctx.out(kSamplesSft), ctx.out(kScoredSft));
  stage_build_dpo(ctx, ctx.out(kScoredSft), ctx.out(kPairs));
  stage_train_dpo(ctx, ctx.out(kSftPolicy), ctx.out(kPairs), ctx.out(kDpoPolicy), ctx.out(kDpoLog));
  stage_sample(ctx, ctx.out(kDpoPolicy), ctx.out(kSamplesDpo));
  stage_score(ctx, ctx.out(kSamplesDpo), ctx.out(kScoredDpo));
  stage_eval(ctx, ctx.out(kScoredSft), ctx.out(kPools), ctx.out(kMetricsSft));
  stage_eval(ctx, ctx.out(kScoredDpo), ctx.out(kPools), ctx.out(kMetricsDpo));
  stage_baseline(ctx, ctx.out(kBaseline));
  stage_score(ctx, ctx.out(kBaseline), ctx.out(kScoredBaseline));
  stage_analyze(ctx, ctx.out(kScoredSft), ctx.out(kScoredDpo), ctx.out(kAnalysis));
}

}  // namespace alloydpo::cli
