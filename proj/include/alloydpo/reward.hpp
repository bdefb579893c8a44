#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/phase.hpp"

namespace alloydpo::reward {

inline constexpr double kOtherPhaseLimit = 0.10;
inline constexpr double kMismatchClampAngstrom = 1.0;
inline constexpr double kWorstReward = -1111.0;

struct CriteriaResult {
  bool bcc_b2_exist = false;
  bool bcc_forms_first = false;
  bool b2_room_temp = false;
  bool others_exceed_10pct = false;
  // Present iff BCC and B2 coexist in the solid state somewhere on the grid.
  std::optional<double> min_lattice_mismatch;

  bool operator==(const CriteriaResult&) const = default;
};

// Evaluates the four synthesis rules on a phase table:
//  1. some fully-solid temperature has both BCC and B2 present;
//  2. BCC's highest presence temperature is strictly above B2's;
//  3. B2 is present at the lowest grid temperature;
//  4. (a failure flag) OTHER phases exceed 10% at some fully-solid temperature.
// Throws MissingLattice when a coexistence temperature lacks a lattice parameter.
CriteriaResult evaluate_criteria(const phase::PhaseTable& table, double eps = phase::kPresenceEpsilon);

// -1000 [!exist] - 100 [!first] - 10 [!room] - 1 [others] - min(mismatch, 1 A).
// The mismatch term is zero when no coexistence exists.
double reward_of(const CriteriaResult& criteria);

struct ScoredCandidate {
  chem::CandidateTriple triple;
  chem::Composition master;
  CriteriaResult criteria;
  double reward = kWorstReward;
};

ScoredCandidate score_candidate(const chem::CandidateTriple& triple, const phase::PhaseOracle& oracle,
                                std::span<const double> grid, double eps = phase::kPresenceEpsilon);

struct ScoreOutcome {
  std::optional<ScoredCandidate> scored;
  std::string error;  // set when scoring failed; message names the candidate

  bool ok() const { return scored.has_value(); }
};

// Scores in parallel over `workers` threads; results are in input order and a
// failing candidate does not stop the batch.
std::vector<ScoreOutcome> score_batch(std::span<const chem::CandidateTriple> triples, const phase::PhaseOracle& oracle,
                                      std::span<const double> grid, unsigned workers = 1,
                                      double eps = phase::kPresenceEpsilon);

nlohmann::ordered_json criteria_to_json(const CriteriaResult& c);
CriteriaResult criteria_from_json(const nlohmann::json& j);
// {"bcc","b2","b2_vol","reward","criteria":{...}}
nlohmann::ordered_json to_json(const ScoredCandidate& s);
ScoredCandidate scored_from_json(const nlohmann::json& j, const chem::ElementTable& table);

}  // namespace alloydpo::reward
