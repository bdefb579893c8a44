#pragma once

#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/elements.hpp"

namespace alloydpo::metrics {

inline constexpr int kFeaturizerVersion = 1;
inline constexpr std::array<std::string_view, 8> kPropertyNames = {
    "electronegativity", "radius_pm", "z", "mass", "melt_K", "valence", "group", "period"};
inline constexpr std::array<std::string_view, 5> kStatNames = {"mean", "std", "min", "max", "range"};
inline constexpr std::size_t kFeatureDim = kPropertyNames.size() * kStatNames.size();

using FeatureVector = std::vector<double>;

// For each property, in kPropertyNames order: mole-fraction weighted mean,
// weighted std, min, max and range. Throws MissingProperty when an element
// (or one of its property values) is absent from `table`.
FeatureVector featurize(const chem::Composition& c, const chem::ElementTable& table);
// concat(featurize(bcc), featurize(b2)); the volume is not a feature.
FeatureVector pair_features(const chem::CandidateTriple& t, const chem::ElementTable& table);

// Per-dimension z-score fitted on a reference set. Constant dimensions keep
// scale 1 so they contribute nothing after centering.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Normalizer fit(std::span<const FeatureVector> reference);
  FeatureVector apply(const FeatureVector& v) const;
  std::vector<FeatureVector> apply(std::span<const FeatureVector> vs) const;
};

double distance(const FeatureVector& a, const FeatureVector& b);

// All-metal compositions and single elements are valid. Otherwise the
// formula is integerized (denominator <= 1000) and some assignment of
// allowed oxidation states must be charge neutral with every negative-state
// element at least as electronegative as every positive-state element.
// Throws IntegerizationFailure, MissingProperty.
bool validity(const chem::Composition& c, const chem::ElementTable& table);

// Smallest denominator d <= max_den with every |x d - round(x d)| <= d * tol
// and every count >= 1. Throws IntegerizationFailure.
std::vector<long long> integerize(const chem::Composition& c, int max_den = 1000, double tol = 1e-4);

struct Coverage {
  double recall = 0.0;
  double precision = 0.0;
};

// Inputs are already normalized. Throws EmptyInput, InvalidArgument (delta < 0).
Coverage coverage(std::span<const FeatureVector> generated, std::span<const FeatureVector> reference, double delta);

// `percentile` (linear interpolation) of nearest-neighbour distances inside
// `reference`, ignoring zero distances. At most `max_queries` evenly strided
// points are used as queries; neighbours come from the full set.
double nn_distance_percentile(std::span<const FeatureVector> reference, double percentile = 0.05,
                              std::size_t max_queries = 2000);

struct Novelty {
  double mean_min_distance = 0.0;
  double fraction_beyond = 0.0;
  bool operator==(const Novelty&) const = default;
};

// Throws EmptyInput when either list is empty.
Novelty novelty(std::span<const FeatureVector> generated, std::span<const FeatureVector> known, double delta);

// Distinct (bcc, b2) canonical pairs among the first n, divided by n.
// Throws TooFewSamples, InvalidArgument (n < 1).
double unique_pairs(std::span<const chem::CandidateTriple> samples, int n = 100);

struct MetricConfig {
  std::optional<double> coverage_delta;  // default: 5th percentile of reference NN distances
  std::optional<double> novelty_delta;   // default: same rule on the known set
  int unique_n = 100;
};

struct MetricReport {
  double validity_rate = 0.0;
  double coverage_recall = 0.0;
  double coverage_precision = 0.0;
  Novelty novelty;
  std::optional<double> unique_pairs_at_n;  // null when fewer than n samples parsed
  double mean_reward = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_parsed = 0;
  std::size_t n_scored = 0;
  double coverage_delta = 0.0;
  double novelty_delta = 0.0;
  int unique_n = 100;
  int featurizer_version = kFeaturizerVersion;

  bool operator==(const MetricReport&) const = default;
};

// samples[i] is nullopt when the generation did not parse; rewards[i] is
// nullopt when scoring failed (or there was nothing to score) and counts as
// the worst reward. Validity is per sample: both compositions valid, with
// unparseable samples invalid. Coverage uses pair features against
// `reference`; novelty uses master compositions against `known`.
MetricReport metric_report(std::span<const std::optional<chem::CandidateTriple>> samples,
                           std::span<const std::optional<double>> rewards,
                           std::span<const chem::CandidateTriple> reference, std::span<const chem::Composition> known,
                           const chem::ElementTable& table, const MetricConfig& config = {});

nlohmann::ordered_json to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);

}  // namespace alloydpo::metrics
