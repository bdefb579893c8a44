#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/config.hpp"
#include "alloydpo/elements.hpp"
#include "alloydpo/phase.hpp"
#include "alloydpo/reward.hpp"
#include "alloydpo/roles.hpp"

namespace alloydpo::cli {

// Default file names inside out_dir.
namespace files {
inline constexpr const char* kPools = "pools.csv";
inline constexpr const char* kSft = "sft.jsonl";
inline constexpr const char* kSftPolicy = "sft_policy.json";
inline constexpr const char* kSftLog = "sft_log.csv";
inline constexpr const char* kSamplesSft = "samples_sft.jsonl";
inline constexpr const char* kScoredSft = "scored_sft.jsonl";
inline constexpr const char* kPairs = "dpo_pairs.jsonl";
inline constexpr const char* kDpoPolicy = "dpo_policy.json";
inline constexpr const char* kDpoLog = "dpo_log.csv";
inline constexpr const char* kSamplesDpo = "samples_dpo.jsonl";
inline constexpr const char* kScoredDpo = "scored_dpo.jsonl";
inline constexpr const char* kMetricsSft = "metrics_sft.json";
inline constexpr const char* kMetricsDpo = "metrics_dpo.json";
inline constexpr const char* kBaseline = "baseline.jsonl";
inline constexpr const char* kScoredBaseline = "scored_baseline.jsonl";
inline constexpr const char* kAnalysis = "analysis";
}  // namespace files

// Loaded tables, temperature grid and oracle shared by every stage.
struct Context {
  RunConfig cfg;
  chem::ElementTable elements;
  chem::RoleTable roles;
  std::vector<double> grid;
  std::shared_ptr<const phase::PhaseOracle> oracle;

  std::filesystem::path out(const std::string& name) const { return cfg.out_dir / name; }
};

// Validates the config, loads the tables, builds the oracle (wrapped in a
// disk cache when oracle_cache is set) and creates out_dir.
Context make_context(const RunConfig& cfg);

// One generated or baseline sample: the raw text plus the parsed triple, or
// the parse error.
struct SampleRecord {
  std::string text;
  std::optional<chem::CandidateTriple> triple;
  std::string error;
};

std::string format_samples_jsonl(const std::vector<SampleRecord>& samples);
std::vector<SampleRecord> read_samples_jsonl(const std::filesystem::path& path, const chem::ElementTable& table);

// One line of a scored file; `scored` is empty for unparseable or failed samples.
struct ScoredRecord {
  std::string text;
  std::optional<reward::ScoredCandidate> scored;
  std::optional<chem::CandidateTriple> triple;
  std::string error;

  double reward() const { return scored ? scored->reward : reward::kWorstReward; }
};

std::string format_scored_jsonl(const std::vector<ScoredRecord>& records);
std::vector<ScoredRecord> read_scored_jsonl(const std::filesystem::path& path, const chem::ElementTable& table);

// Stages. Each reads and writes only files; missing inputs raise MissingInput,
// anything else escaping a stage is reported as StageFailure by the CLI.
void stage_gen_pools(const Context& ctx, const std::filesystem::path& out);
void stage_gen_sft(const Context& ctx, const std::filesystem::path& pools, const std::filesystem::path& out);
void stage_train_sft(const Context& ctx, const std::filesystem::path& sft, const std::filesystem::path& policy_out,
                     const std::filesystem::path& log_out);
// Every policy sampled with the same seed shares its random stream, so
// index-paired comparisons use common random numbers.
void stage_sample(const Context& ctx, const std::filesystem::path& policy, const std::filesystem::path& out);
void stage_score(const Context& ctx, const std::filesystem::path& samples, const std::filesystem::path& out);
void stage_build_dpo(const Context& ctx, const std::filesystem::path& scored, const std::filesystem::path& out);
void stage_train_dpo(const Context& ctx, const std::filesystem::path& sft_policy, const std::filesystem::path& pairs,
                     const std::filesystem::path& policy_out, const std::filesystem::path& log_out);
// Coverage reference: the pool cross product. Novelty reference: the pool compositions.
void stage_eval(const Context& ctx, const std::filesystem::path& scored, const std::filesystem::path& pools,
                const std::filesystem::path& out);
void stage_baseline(const Context& ctx, const std::filesystem::path& out);

struct KlInputs {
  std::filesystem::path a_sft, a_dpo, b_sft, b_dpo;
};

// Compares `after` against `before` (paired by index) and profiles `after`.
// With KL inputs, also writes kl_compare.csv from teacher-forced `before` texts.
void stage_analyze(const Context& ctx, const std::filesystem::path& before, const std::filesystem::path& after,
                   const std::filesystem::path& out_dir, const std::optional<KlInputs>& kl = std::nullopt);

// Every stage in order with the default file names.
void run_pipeline(const Context& ctx);

}  // namespace alloydpo::cli
