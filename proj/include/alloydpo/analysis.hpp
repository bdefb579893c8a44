#pragma once

#include <array>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/reward.hpp"

namespace alloydpo::analysis {

struct ComparisonResult {
  double win_pct = 0.0;
  double draw_pct = 0.0;
  double loss_pct = 0.0;
  std::size_t n = 0;

  bool operator==(const ComparisonResult&) const = default;
};

// Index-paired comparison: win when a - b > tie_eps, loss when < -tie_eps.
// Throws LengthMismatch, EmptyInput.
ComparisonResult win_draw_loss(std::span<const double> a, std::span<const double> b, double tie_eps = 1e-9);
ComparisonResult win_draw_loss(std::span<const reward::ScoredCandidate> a, std::span<const reward::ScoredCandidate> b,
                               double tie_eps = 1e-9);

inline constexpr std::array<std::string_view, 4> kCriterionNames = {"bcc_b2_exist", "bcc_forms_first",
                                                                     "b2_room_temp", "others_within_limit"};

// Fraction of candidates meeting each criterion, in kCriterionNames order.
// The fourth criterion is met when OTHER phases stay within the limit.
// Throws EmptyInput.
std::array<double, 4> objective_satisfaction(std::span<const reward::CriteriaResult> criteria);
std::array<double, 4> objective_satisfaction(std::span<const reward::ScoredCandidate> scored);

// 100 (after - before) / before; nullopt when before == 0.
std::optional<double> relative_change(double before, double after);

struct ObjectiveDelta {
  std::string criterion;
  double rate_before = 0.0;
  double rate_after = 0.0;
  std::optional<double> pct_change;

  bool operator==(const ObjectiveDelta&) const = default;
};

std::vector<ObjectiveDelta> objective_delta(const std::array<double, 4>& before, const std::array<double, 4>& after);

enum class Which { Bcc, B2, Both };

struct ElementFrequency {
  std::string element;
  double frequency = 0.0;

  bool operator==(const ElementFrequency&) const = default;
};

// Presence counts normalized by the total number of occurrences; sorted by
// frequency descending, then symbol. Throws EmptyInput.
std::vector<ElementFrequency> element_frequency(std::span<const chem::CandidateTriple> triples, Which which);

struct Combination {
  std::vector<std::string> elements;  // sorted
  std::size_t count = 0;
  double percent = 0.0;

  bool operator==(const Combination&) const = default;
};

struct TopCombinations {
  std::vector<Combination> top;
  std::vector<std::string> query;       // sorted, possibly empty
  std::optional<double> subset_percent; // percent of candidates whose BCC elements are all in `query`

  bool operator==(const TopCombinations&) const = default;
};

// BCC element sets as unordered sets, ranked by count then lexicographically.
// Throws EmptyInput, InvalidArgument (k < 1).
TopCombinations top_combinations(std::span<const chem::CandidateTriple> triples, int k,
                                 std::span<const std::string> query = {});

struct AnalysisReport {
  std::optional<ComparisonResult> wdl;
  std::vector<ObjectiveDelta> objectives;
  std::vector<ElementFrequency> element_freq;
  std::optional<TopCombinations> top_combos;

  bool empty() const { return !wdl && objectives.empty() && element_freq.empty() && !top_combos; }
  bool operator==(const AnalysisReport&) const = default;
};

nlohmann::ordered_json to_json(const AnalysisReport& r);
AnalysisReport report_from_json(const nlohmann::json& j);

// Writes analysis.json, summary.txt and the plot-ready CSVs (wdl.csv,
// objectives.csv, element_freq.csv, top_combos.csv) for the parts present.
// The directory must already exist. Throws InvalidArgument (empty report), IoError.
void emit_report(const AnalysisReport& r, const std::filesystem::path& dir);
AnalysisReport read_report(const std::filesystem::path& dir);

}  // namespace alloydpo::analysis
