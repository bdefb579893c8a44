#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/phase.hpp"
#include "alloydpo/reward.hpp"
#include "alloydpo/rng.hpp"
#include "alloydpo/roles.hpp"

namespace alloydpo::data {

// Instruction shared by every SFT example and preference pair (version 1).
inline constexpr std::string_view kPromptTemplate =
    "Propose a BCC/B2 superalloy candidate. Answer with one BCC composition, one B2 composition "
    "and the B2 volume percent, formatted as BCC|B2|volume%.";

inline constexpr std::array<double, 7> kDefaultConcentrations = {0.20, 0.25, 0.33, 0.40, 0.50, 0.67, 0.75};

// Grid values within 0.005 of k/3 are snapped to k/3 so that 0.33 and 0.67
// combine to exactly 1.
std::vector<double> snap_concentrations(std::span<const double> concentrations);

// All compositions of 1..max_elements BCC formers whose fractions are drawn
// from `concentrations` and sum to 1; pure elements are always included.
// Deduplicated by canonical formula, in enumeration order. Throws EmptyRoleTable.
std::vector<chem::Composition> enumerate_bcc_pool(const chem::RoleTable& roles, std::span<const double> concentrations,
                                                  int max_elements = 4);

// A-site total 0.5 and B-site total 0.5, each site holding one element at 0.50
// or two at 0.25; no element sits on both sites. Throws EmptyRoleTable.
std::vector<chem::Composition> enumerate_b2_pool(const chem::RoleTable& roles);

// Keeps compositions that reach `min_frac` of `target` at some grid temperature.
// min_frac must be in (0, 1].
std::vector<chem::Composition> filter_single_phase(std::span<const chem::Composition> pool,
                                                   const phase::PhaseOracle& oracle, std::span<const double> grid,
                                                   phase::PhaseClass target, double min_frac = 0.99);

struct PoolEntry {
  chem::Composition composition;
  std::string provenance;
};

struct CompositionPool {
  std::vector<PoolEntry> bcc;
  std::vector<PoolEntry> b2;
};

// CSV header `formula,role,provenance`, role is `bcc` or `b2`.
std::string format_pool_csv(const CompositionPool& pool);
CompositionPool read_pool_csv(const std::filesystem::path& path, const chem::ElementTable& table);

struct VolumeSampler {
  enum class Kind { ClampedNormal, Uniform };
  Kind kind = Kind::ClampedNormal;
  double mean = 0.45;
  double sd = 0.15;

  // Result lies in [0.20, 0.70]; the normal variant clamps (not resamples).
  double draw(Rng& rng) const;
};

struct SftExample {
  std::string prompt;
  std::string completion;
  chem::CandidateTriple triple;
};

// Every (bcc, b2) pair in the pool cross product, each with `volumes_per_pair`
// independent volume draws. Volumes are rounded to the serialized precision.
std::vector<SftExample> build_sft_dataset(const CompositionPool& pool, int volumes_per_pair,
                                          const VolumeSampler& sampler, std::uint64_t seed);

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  double chosen_reward = 0.0;
  double rejected_reward = 0.0;
};

// Ranks by reward (stable, ties by input order), takes the top ceil(top_frac * N)
// as chosen and pairs each with `rejected_per_chosen` distinct candidates of
// strictly lower reward ranked below it. Throws InsufficientRejectPool.
std::vector<PreferencePair> build_dpo_pairs(std::span<const reward::ScoredCandidate> scored, double top_frac,
                                            int rejected_per_chosen, std::uint64_t seed);

// Any completion text with its reward, e.g. an unparseable generation at the
// worst reward, which can then only ever appear as a rejected completion.
struct RankedCompletion {
  std::string text;
  double reward = 0.0;
};

std::vector<PreferencePair> build_dpo_pairs(std::span<const RankedCompletion> ranked, double top_frac,
                                            int rejected_per_chosen, std::uint64_t seed);

std::string format_sft_jsonl(std::span<const SftExample> examples);
std::string format_pairs_jsonl(std::span<const PreferencePair> pairs);
std::vector<SftExample> read_sft_jsonl(const std::filesystem::path& path, const chem::ElementTable& table);
std::vector<PreferencePair> read_pairs_jsonl(const std::filesystem::path& path);

}  // namespace alloydpo::data
