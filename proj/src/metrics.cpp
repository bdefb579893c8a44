#include "alloydpo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "alloydpo/error.hpp"
#include "alloydpo/reward.hpp"

namespace alloydpo::metrics {

namespace {

std::array<double, kPropertyNames.size()> properties_of(const chem::Element& e) {
  return {e.electronegativity,         e.radius_pm, static_cast<double>(e.z),      e.mass,
          e.melt_k,                    static_cast<double>(e.valence), static_cast<double>(e.group),
          static_cast<double>(e.period)};
}

const chem::Element& element_or_throw(const chem::ElementTable& table, const std::string& symbol) {
  const auto* e = table.find(symbol);
  if (!e) throw Error(ErrorCode::MissingProperty, "no property data for element " + symbol);
  return *e;
}

double min_distance(const FeatureVector& q, std::span<const FeatureVector> set, std::size_t skip, bool skip_zero) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i == skip) continue;
    double sq = 0.0;
    const auto& s = set[i];
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double d = q[k] - s[k];
      sq += d * d;
      if (sq >= best * best) break;
    }
    if (skip_zero && sq == 0.0) continue;
    best = std::min(best, std::sqrt(sq));
  }
  return best;
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool search_neutral(const std::vector<const chem::Element*>& els, const std::vector<long long>& counts,
                    std::vector<int>& states, std::size_t i, long long charge) {
  if (i == els.size()) {
    if (charge != 0) return false;
    double min_neg = std::numeric_limits<double>::infinity();
    double max_pos = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < els.size(); ++k) {
      if (states[k] < 0) min_neg = std::min(min_neg, els[k]->electronegativity);
      if (states[k] > 0) max_pos = std::max(max_pos, els[k]->electronegativity);
    }
    return min_neg >= max_pos;
  }
  for (int s : els[i]->oxidation_states) {
    states[i] = s;
    if (search_neutral(els, counts, states, i + 1, charge + counts[i] * s)) return true;
  }
  return false;
}

}  // namespace

FeatureVector featurize(const chem::Composition& c, const chem::ElementTable& table) {
  if (c.empty()) throw Error(ErrorCode::EmptyFormula, "cannot featurize an empty composition");
  constexpr std::size_t P = kPropertyNames.size();
  std::array<double, P> mean{}, mn, mx;
  mn.fill(std::numeric_limits<double>::infinity());
  mx.fill(-std::numeric_limits<double>::infinity());
  for (const auto& [sym, x] : c.entries()) {
    const auto props = properties_of(element_or_throw(table, sym));
    for (std::size_t p = 0; p < P; ++p) {
      if (!std::isfinite(props[p])) {
        throw Error(ErrorCode::MissingProperty, sym + " lacks " + std::string(kPropertyNames[p]));
      }
      mean[p] += x * props[p];
      mn[p] = std::min(mn[p], props[p]);
      mx[p] = std::max(mx[p], props[p]);
    }
  }
  std::array<double, P> var{};
  for (const auto& [sym, x] : c.entries()) {
    const auto props = properties_of(table.at(sym));
    for (std::size_t p = 0; p < P; ++p) var[p] += x * (props[p] - mean[p]) * (props[p] - mean[p]);
  }
  FeatureVector f;
  f.reserve(kFeatureDim);
  for (std::size_t p = 0; p < P; ++p) {
    f.push_back(mean[p]);
    f.push_back(c.size() == 1 ? 0.0 : std::sqrt(var[p]));
    f.push_back(mn[p]);
    f.push_back(mx[p]);
    f.push_back(mx[p] - mn[p]);
  }
  return f;
}

FeatureVector pair_features(const chem::CandidateTriple& t, const chem::ElementTable& table) {
  auto f = featurize(t.bcc, table);
  const auto g = featurize(t.b2, table);
  f.insert(f.end(), g.begin(), g.end());
  return f;
}

Normalizer Normalizer::fit(std::span<const FeatureVector> reference) {
  if (reference.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit a normalizer on an empty set");
  const std::size_t dim = reference.front().size();
  const double n = static_cast<double>(reference.size());
  Normalizer out{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& v : reference) {
    if (v.size() != dim) throw Error(ErrorCode::LengthMismatch, "feature vectors differ in length");
    for (std::size_t k = 0; k < dim; ++k) out.mean[k] += v[k] / n;
  }
  for (const auto& v : reference) {
    for (std::size_t k = 0; k < dim; ++k) out.scale[k] += (v[k] - out.mean[k]) * (v[k] - out.mean[k]) / n;
  }
  for (auto& s : out.scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  return out;
}

FeatureVector Normalizer::apply(const FeatureVector& v) const {
  if (v.size() != mean.size()) throw Error(ErrorCode::LengthMismatch, "feature vector length does not match normalizer");
  FeatureVector out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = (v[k] - mean[k]) / scale[k];
  return out;
}

std::vector<FeatureVector> Normalizer::apply(std::span<const FeatureVector> vs) const {
  std::vector<FeatureVector> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(apply(v));
  return out;
}

double distance(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "feature vectors differ in length");
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sq);
}

std::vector<long long> integerize(const chem::Composition& c, int max_den, double tol) {
  for (int d = 1; d <= max_den; ++d) {
    std::vector<long long> counts;
    bool ok = true;
    for (const auto& [sym, x] : c.entries()) {
      const double scaled = x * d;
      const double r = std::round(scaled);
      if (std::abs(scaled - r) > d * tol || r < 1) {
        ok = false;
        break;
      }
      counts.push_back(static_cast<long long>(r));
    }
    if (ok) return counts;
  }
  throw Error(ErrorCode::IntegerizationFailure, "no integer formula with denominator <= " + std::to_string(max_den));
}

bool validity(const chem::Composition& c, const chem::ElementTable& table) {
  if (c.empty()) throw Error(ErrorCode::EmptyFormula, "empty composition");
  std::vector<const chem::Element*> els;
  bool all_metal = true;
  for (const auto& [sym, x] : c.entries()) {
    els.push_back(&element_or_throw(table, sym));
    all_metal = all_metal && els.back()->is_metal;
  }
  if (all_metal || els.size() == 1) return true;
  const auto counts = integerize(c);
  std::vector<int> states(els.size(), 0);
  return search_neutral(els, counts, states, 0, 0);
}

Coverage coverage(std::span<const FeatureVector> generated, std::span<const FeatureVector> reference, double delta) {
  if (generated.empty() || reference.empty()) throw Error(ErrorCode::EmptyInput, "coverage needs two non-empty sets");
  if (!(delta >= 0)) throw Error(ErrorCode::InvalidArgument, "coverage threshold must be >= 0");
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::size_t hit_ref = 0;
  for (const auto& r : reference) hit_ref += min_distance(r, generated, none, false) <= delta;
  std::size_t hit_gen = 0;
  for (const auto& g : generated) hit_gen += min_distance(g, reference, none, false) <= delta;
  return {static_cast<double>(hit_ref) / static_cast<double>(reference.size()),
          static_cast<double>(hit_gen) / static_cast<double>(generated.size())};
}

double nn_distance_percentile(std::span<const FeatureVector> reference, double pct, std::size_t max_queries) {
  if (reference.size() < 2) throw Error(ErrorCode::EmptyInput, "need at least two reference points");
  if (!(pct >= 0 && pct <= 1)) throw Error(ErrorCode::InvalidArgument, "percentile must be in [0, 1]");
  const std::size_t n = reference.size();
  const std::size_t queries = std::max<std::size_t>(1, std::min(n, max_queries));
  std::vector<double> nn;
  nn.reserve(queries);
  for (std::size_t k = 0; k < queries; ++k) {
    const std::size_t i = k * n / queries;
    const double d = min_distance(reference[i], reference, i, true);
    if (std::isfinite(d)) nn.push_back(d);
  }
  if (nn.empty()) return 0.0;  // every point identical
  return percentile(std::move(nn), pct);
}

Novelty novelty(std::span<const FeatureVector> generated, std::span<const FeatureVector> known, double delta) {
  if (generated.empty() || known.empty()) throw Error(ErrorCode::EmptyInput, "novelty needs two non-empty sets");
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  double sum = 0.0;
  std::size_t beyond = 0;
  for (const auto& g : generated) {
    const double d = min_distance(g, known, none, false);
    sum += d;
    beyond += d > delta;
  }
  const double n = static_cast<double>(generated.size());
  return {sum / n, static_cast<double>(beyond) / n};
}

double unique_pairs(std::span<const chem::CandidateTriple> samples, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "unique_pairs needs n >= 1");
  if (samples.size() < static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::TooFewSamples,
                "unique_pairs needs " + std::to_string(n) + " samples, got " + std::to_string(samples.size()));
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (int i = 0; i < n; ++i) {
    seen.emplace(chem::format_composition(samples[static_cast<std::size_t>(i)].bcc),
                 chem::format_composition(samples[static_cast<std::size_t>(i)].b2));
  }
  return static_cast<double>(seen.size()) / static_cast<double>(n);
}

MetricReport metric_report(std::span<const std::optional<chem::CandidateTriple>> samples,
                           std::span<const std::optional<double>> rewards,
                           std::span<const chem::CandidateTriple> reference, std::span<const chem::Composition> known,
                           const chem::ElementTable& table, const MetricConfig& config) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no generated samples");
  if (rewards.size() != samples.size()) throw Error(ErrorCode::LengthMismatch, "rewards do not match samples");
  if (reference.empty() || known.empty()) throw Error(ErrorCode::EmptyInput, "reference and known sets are required");

  MetricReport r;
  r.n_samples = samples.size();
  r.unique_n = config.unique_n;

  std::vector<chem::CandidateTriple> parsed;
  std::size_t valid = 0;
  double reward_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (rewards[i]) ++r.n_scored;
    reward_sum += rewards[i].value_or(reward::kWorstReward);
    if (!samples[i]) continue;
    parsed.push_back(*samples[i]);
    try {
      valid += validity(samples[i]->bcc, table) && validity(samples[i]->b2, table);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IntegerizationFailure) throw;
    }
  }
  r.n_parsed = parsed.size();
  r.validity_rate = static_cast<double>(valid) / static_cast<double>(r.n_samples);
  r.mean_reward = reward_sum / static_cast<double>(r.n_samples);

  std::vector<FeatureVector> ref_raw;
  ref_raw.reserve(reference.size());
  for (const auto& t : reference) ref_raw.push_back(pair_features(t, table));
  const auto ref_norm = Normalizer::fit(ref_raw);
  const auto ref_feat = ref_norm.apply(ref_raw);
  r.coverage_delta = config.coverage_delta ? *config.coverage_delta : nn_distance_percentile(ref_feat);

  std::vector<FeatureVector> known_raw;
  known_raw.reserve(known.size());
  for (const auto& c : known) known_raw.push_back(featurize(c, table));
  const auto known_norm = Normalizer::fit(known_raw);
  const auto known_feat = known_norm.apply(known_raw);
  if (config.novelty_delta) {
    r.novelty_delta = *config.novelty_delta;
  } else {
    r.novelty_delta = known_feat.size() >= 2 ? nn_distance_percentile(known_feat) : 0.0;
  }

  if (!parsed.empty()) {
    std::vector<FeatureVector> gen_pair;
    std::vector<FeatureVector> gen_master;
    for (const auto& t : parsed) {
      gen_pair.push_back(ref_norm.apply(pair_features(t, table)));
      gen_master.push_back(known_norm.apply(featurize(chem::combine_master(t.bcc, t.b2, t.b2_vol), table)));
    }
    const auto cov = coverage(gen_pair, ref_feat, r.coverage_delta);
    r.coverage_recall = cov.recall;
    r.coverage_precision = cov.precision;
    r.novelty = novelty(gen_master, known_feat, r.novelty_delta);
    if (parsed.size() >= static_cast<std::size_t>(config.unique_n)) {
      r.unique_pairs_at_n = unique_pairs(parsed, config.unique_n);
    }
  }
  return r;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["validity_rate"] = r.validity_rate;
  j["coverage_recall"] = r.coverage_recall;
  j["coverage_precision"] = r.coverage_precision;
  j["novelty"] = {{"mean_min_distance", r.novelty.mean_min_distance},
                  {"fraction_beyond_delta", r.novelty.fraction_beyond}};
  j["unique_pairs_at_n"] = r.unique_pairs_at_n ? nlohmann::ordered_json(*r.unique_pairs_at_n) : nlohmann::ordered_json(nullptr);
  j["mean_reward"] = r.mean_reward;
  j["counts"] = {{"samples", r.n_samples}, {"parsed", r.n_parsed}, {"scored", r.n_scored}};
  j["config"] = {{"coverage_delta", r.coverage_delta},
                 {"novelty_delta", r.novelty_delta},
                 {"unique_n", r.unique_n},
                 {"featurizer_version", r.featurizer_version}};
  return j;
}

MetricReport report_from_json(const nlohmann::json& j) {
  try {
    MetricReport r;
    r.validity_rate = j.at("validity_rate").get<double>();
    r.coverage_recall = j.at("coverage_recall").get<double>();
    r.coverage_precision = j.at("coverage_precision").get<double>();
    r.novelty.mean_min_distance = j.at("novelty").at("mean_min_distance").get<double>();
    r.novelty.fraction_beyond = j.at("novelty").at("fraction_beyond_delta").get<double>();
    if (!j.at("unique_pairs_at_n").is_null()) r.unique_pairs_at_n = j.at("unique_pairs_at_n").get<double>();
    r.mean_reward = j.at("mean_reward").get<double>();
    r.n_samples = j.at("counts").at("samples").get<std::size_t>();
    r.n_parsed = j.at("counts").at("parsed").get<std::size_t>();
    r.n_scored = j.at("counts").at("scored").get<std::size_t>();
    r.coverage_delta = j.at("config").at("coverage_delta").get<double>();
    r.novelty_delta = j.at("config").at("novelty_delta").get<double>();
    r.unique_n = j.at("config").at("unique_n").get<int>();
    r.featurizer_version = j.at("config").at("featurizer_version").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("metric report: ") + e.what());
  }
}

}  // namespace alloydpo::metrics
