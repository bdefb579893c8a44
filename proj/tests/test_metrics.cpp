#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "alloydpo/error.hpp"
#include "alloydpo/metrics.hpp"
#include "alloydpo/reward.hpp"
#include "test_support.hpp"

using namespace alloydpo;
using namespace alloydpo::metrics;
using chem::Composition;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

Composition comp(const std::string& formula) { return chem::parse_formula(formula, test::elements()); }

double prop(const chem::Element& e, std::size_t k) {
  switch (k) {
    case 0: return e.electronegativity;
    case 1: return e.radius_pm;
    case 2: return e.z;
    case 3: return e.mass;
    case 4: return e.melt_k;
    case 5: return e.valence;
    case 6: return e.group;
    default: return e.period;
  }
}

double euclid(const FeatureVector& a, const FeatureVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Exhaustive per-element oxidation-state search on explicit integer counts.
bool oracle_valid(const std::vector<std::pair<std::string, int>>& counts) {
  std::vector<const chem::Element*> els;
  bool metals = true;
  for (const auto& [s, n] : counts) {
    els.push_back(&test::elements().at(s));
    metals = metals && els.back()->is_metal;
  }
  if (metals || els.size() == 1) return true;
  std::vector<std::size_t> idx(els.size(), 0);
  while (true) {
    long charge = 0;
    double max_pos = -1e9, min_neg = 1e9;
    for (std::size_t i = 0; i < els.size(); ++i) {
      const int q = els[i]->oxidation_states[idx[i]];
      charge += static_cast<long>(q) * counts[i].second;
      if (q > 0) max_pos = std::max(max_pos, els[i]->electronegativity);
      if (q < 0) min_neg = std::min(min_neg, els[i]->electronegativity);
    }
    if (charge == 0 && min_neg >= max_pos) return true;
    std::size_t i = 0;
    while (i < els.size() && ++idx[i] == els[i]->oxidation_states.size()) idx[i++] = 0;
    if (i == els.size()) return false;
  }
}

chem::CandidateTriple triple(const std::string& s) { return chem::parse_triple(s, test::elements()); }

}  // namespace

TEST(Featurize, SingleElementIsDegenerate) {
  const auto f = featurize(Composition::pure("Nb"), test::elements());
  ASSERT_EQ(f.size(), kFeatureDim);
  const auto& nb = test::elements().at("Nb");
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_DOUBLE_EQ(f[5 * k + 0], prop(nb, k));
    EXPECT_DOUBLE_EQ(f[5 * k + 1], 0.0);
    EXPECT_DOUBLE_EQ(f[5 * k + 2], prop(nb, k));
    EXPECT_DOUBLE_EQ(f[5 * k + 3], prop(nb, k));
    EXPECT_DOUBLE_EQ(f[5 * k + 4], 0.0);
  }
}

TEST(Featurize, EqualBinaryMeanIsMidpoint) {
  const auto f = featurize(comp("Mo0.5W0.5"), test::elements());
  EXPECT_NEAR(f[0], (2.16 + 2.36) / 2, 1e-12);
  EXPECT_NEAR(f[1], 0.10, 1e-12);  // half the electronegativity gap
}

TEST(Featurize, ThreeElementFixtureMatchesHandTable) {
  const auto c = comp("Mo0.5Nb0.3Al0.2");
  const auto f = featurize(c, test::elements());
  const std::vector<std::pair<std::string, double>> w{{"Mo", 0.5}, {"Nb", 0.3}, {"Al", 0.2}};
  for (std::size_t k = 0; k < 8; ++k) {
    double mean = 0, lo = 1e300, hi = -1e300;
    for (const auto& [s, x] : w) {
      const double v = prop(test::elements().at(s), k);
      mean += x * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double var = 0;
    for (const auto& [s, x] : w) var += x * std::pow(prop(test::elements().at(s), k) - mean, 2);
    EXPECT_NEAR(f[5 * k + 0], mean, 1e-9 * std::abs(mean)) << kPropertyNames[k];
    EXPECT_NEAR(f[5 * k + 1], std::sqrt(var), 1e-9 * (1 + std::sqrt(var))) << kPropertyNames[k];
    EXPECT_EQ(f[5 * k + 2], lo);
    EXPECT_EQ(f[5 * k + 3], hi);
    EXPECT_EQ(f[5 * k + 4], hi - lo);
  }
  // hand values for electronegativity
  EXPECT_NEAR(f[0], 0.5 * 2.16 + 0.3 * 1.60 + 0.2 * 1.61, 1e-12);
}

TEST(Featurize, MissingElement) {
  const auto small = test::elements().restrict_to(std::vector<std::string>{"Mo"});
  EXPECT_EQ(code_of([&] { featurize(comp("Mo0.5Nb0.5"), small); }), ErrorCode::MissingProperty);
}

TEST(Normalizer, ZScoreAndConstantDims) {
  const std::vector<FeatureVector> ref{{1, 5}, {3, 5}};
  const auto n = Normalizer::fit(ref);
  EXPECT_EQ(n.apply(FeatureVector{2, 5}), (FeatureVector{0, 0}));
  EXPECT_EQ(n.apply(FeatureVector{3, 7}), (FeatureVector{1, 2}));
}

TEST(Validity, Examples) {
  const auto& t = test::elements();
  EXPECT_TRUE(validity(comp("Mo0.5Nb0.5"), t));
  EXPECT_TRUE(validity(comp("Si"), t));
  EXPECT_TRUE(validity(comp("Al0.5N0.5"), t));   // Al3+ N3-
  EXPECT_FALSE(validity(comp("Mo0.5N0.5"), t));  // no neutral assignment
  // Si5N4 is only neutral with N positive and Si negative, against electronegativity order
  EXPECT_FALSE(validity(comp("Si5N4"), t));
  EXPECT_TRUE(validity(comp("Si3N4"), t));
}

TEST(Validity, IntegerizeAndFailure) {
  EXPECT_EQ(integerize(comp("Mo2Nb")), (std::vector<long long>{2, 1}));
  EXPECT_EQ(integerize(comp("Al0.3334Si0.6666")), (std::vector<long long>{1, 2}));
  const auto odd = Composition::from_amounts({{"Al", 1.0}, {"Si", std::sqrt(2.0) * 1000}});
  EXPECT_EQ(code_of([&] { integerize(odd); }), ErrorCode::IntegerizationFailure);
}

TEST(Validity, MatchesExhaustiveOracleProperty) {
  const std::vector<std::string> pool{"Al", "B", "C", "N", "Si", "Mo", "Ti", "Y", "Fe", "Nb"};
  Rng rng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t k = 2 + rng.below(2);
    std::vector<std::string> syms = pool;
    std::vector<std::pair<std::string, int>> counts;
    std::map<std::string, double> amounts;
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(syms[j], syms[j + rng.below(syms.size() - j)]);
      const int n = 1 + static_cast<int>(rng.below(5));
      counts.push_back({syms[j], n});
      amounts[syms[j]] = n;
    }
    // reduce to lowest terms so the oracle sees the same integer formula
    int g = 0;
    for (const auto& [s, n] : counts) g = std::gcd(g, n);
    for (auto& [s, n] : counts) n /= g;
    ASSERT_EQ(validity(Composition::from_amounts(amounts), test::elements()), oracle_valid(counts))
        << chem::format_composition(Composition::from_amounts(amounts));
  }
}

TEST(Coverage, IdentityAndDisjoint) {
  const std::vector<FeatureVector> a{{0, 0}, {1, 0}, {0, 2}};
  EXPECT_EQ(coverage(a, a, 1e-9).recall, 1.0);
  EXPECT_EQ(coverage(a, a, 1e-9).precision, 1.0);
  const std::vector<FeatureVector> far{{10, 10}, {11, 10}};
  EXPECT_EQ(coverage(far, a, 1.0).recall, 0.0);
  EXPECT_EQ(coverage(far, a, 1.0).precision, 0.0);
  EXPECT_EQ(code_of([&] { coverage({}, a, 1.0); }), ErrorCode::EmptyInput);
}

TEST(Coverage, MatchesBruteForceAndMonotoneInDelta) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FeatureVector> gen, ref;
    for (int i = 0; i < 3 + static_cast<int>(rng.below(10)); ++i) gen.push_back({rng.uniform() * 3, rng.uniform() * 3});
    for (int i = 0; i < 3 + static_cast<int>(rng.below(10)); ++i) ref.push_back({rng.uniform() * 3, rng.uniform() * 3});
    double last_r = 0, last_p = 0;
    for (double delta : {0.1, 0.3, 0.6, 1.0, 2.0}) {
      std::size_t hr = 0, hg = 0;
      for (const auto& r : ref) {
        double m = 1e300;
        for (const auto& g : gen) m = std::min(m, euclid(r, g));
        hr += m <= delta;
      }
      for (const auto& g : gen) {
        double m = 1e300;
        for (const auto& r : ref) m = std::min(m, euclid(r, g));
        hg += m <= delta;
      }
      const auto c = coverage(gen, ref, delta);
      ASSERT_DOUBLE_EQ(c.recall, double(hr) / ref.size());
      ASSERT_DOUBLE_EQ(c.precision, double(hg) / gen.size());
      ASSERT_GE(c.recall, last_r);
      ASSERT_GE(c.precision, last_p);
      last_r = c.recall;
      last_p = c.precision;
    }
  }
}

TEST(NnPercentile, SmallFixture) {
  // zero distances between the duplicates are skipped, so the nearest
  // neighbour distances are 1, 1, 2, 2, 2
  const std::vector<FeatureVector> pts{{0}, {1}, {3}, {5}, {5}};
  EXPECT_NEAR(nn_distance_percentile(pts, 0.05), 1.0, 1e-12);
  EXPECT_NEAR(nn_distance_percentile(pts, 1.0), 2.0, 1e-12);
  EXPECT_NEAR(nn_distance_percentile(pts, 0.5), 2.0, 1e-12);
}

TEST(Novelty, Examples) {
  const std::vector<FeatureVector> known{{0, 0}, {1, 1}, {2, 0}};
  const auto inside = novelty(std::vector<FeatureVector>{{1, 1}, {0, 0}}, known, 0.5);
  EXPECT_EQ(inside.mean_min_distance, 0.0);
  EXPECT_EQ(inside.fraction_beyond, 0.0);
  const auto far = novelty(std::vector<FeatureVector>{{5, 4}}, known, 0.5);
  EXPECT_NEAR(far.mean_min_distance, 5.0, 1e-12);
  EXPECT_EQ(far.fraction_beyond, 1.0);
  // permutation invariance
  const std::vector<FeatureVector> gen{{0.3, 0.2}, {4, 4}, {1, 2}};
  auto gen_r = gen;
  std::reverse(gen_r.begin(), gen_r.end());
  auto known_r = known;
  std::reverse(known_r.begin(), known_r.end());
  EXPECT_NEAR(novelty(gen, known, 1.0).mean_min_distance, novelty(gen_r, known_r, 1.0).mean_min_distance, 1e-12);
  EXPECT_EQ(novelty(gen, known, 1.0).fraction_beyond, novelty(gen_r, known_r, 1.0).fraction_beyond);
  EXPECT_EQ(code_of([&] { novelty(gen, {}, 1.0); }), ErrorCode::EmptyInput);
}

TEST(UniquePairs, Examples) {
  std::vector<chem::CandidateTriple> distinct, same, doubled;
  const auto pool = [](int i) {
    return triple("Mo" + std::to_string(1 + i % 10) + "Nb" + std::to_string(1 + i / 10) + "|Al0.5000Ni0.5000|40.0%");
  };
  for (int i = 0; i < 100; ++i) {
    distinct.push_back(pool(i));
    same.push_back(pool(0));
    doubled.push_back(pool(i / 2));
  }
  // canonical formatting merges some Mo:Nb ratios, so count distinct strings independently
  std::set<std::string> keys;
  for (const auto& t : distinct) keys.insert(chem::format_composition(t.bcc));
  EXPECT_DOUBLE_EQ(unique_pairs(distinct), keys.size() / 100.0);
  EXPECT_DOUBLE_EQ(unique_pairs(same), 0.01);
  std::vector<chem::CandidateTriple> fifty;
  for (int i = 0; i < 100; ++i)
    fifty.push_back(triple("Mo1.0000|Al0.5000Ni0.5000|" + std::to_string(20 + i % 50) + ".0%"));
  EXPECT_DOUBLE_EQ(unique_pairs(fifty), 0.01);  // volume is ignored
  std::vector<chem::CandidateTriple> half;
  const std::vector<std::string> bcc{"Mo", "Nb", "W", "Ta", "V"};
  const std::vector<std::string> b2{"Al0.5Ni0.5", "Al0.5Co0.5", "Ti0.5Ru0.5", "Hf0.5Pd0.5", "Zr0.5Ir0.5",
                                    "Al0.5Pt0.5", "Y0.5Cu0.5", "Ti0.5Ni0.5", "Hf0.5Ru0.5", "Al0.5Ru0.5"};
  for (int i = 0; i < 100; ++i) {
    const int p = i % 50;
    half.push_back(chem::CandidateTriple::make(Composition::pure(bcc[p % 5]), comp(b2[p / 5]), 0.45));
  }
  EXPECT_DOUBLE_EQ(unique_pairs(half), 0.5);
  EXPECT_EQ(code_of([&] { unique_pairs(std::span(half).first(99)); }), ErrorCode::TooFewSamples);
}

TEST(MetricReport, MatchesComponentRecomputation) {
  const auto& t = test::elements();
  std::vector<chem::CandidateTriple> reference;
  std::vector<Composition> known;
  for (const auto* b : {"Mo", "Nb", "W", "Mo0.5Nb0.5", "Ta0.5W0.5"})
    for (const auto* c : {"Al0.5Ni0.5", "Ti0.5Ru0.5", "Hf0.5Co0.5"}) {
      reference.push_back(chem::CandidateTriple::make(comp(b), comp(c), 0.45));
      known.push_back(comp(b));
      known.push_back(comp(c));
    }
  std::vector<std::optional<chem::CandidateTriple>> samples{
      triple("Mo1.0000|Al0.5000Ni0.5000|30.0%"), std::nullopt, triple("Cr0.5000V0.5000|Ti0.5000Ni0.5000|50.0%"),
      triple("Mo0.5000N0.5000|Al0.5000Ni0.5000|50.0%"), triple("Mo1.0000|Al0.5000Ni0.5000|60.0%")};
  std::vector<std::optional<double>> rewards{-0.5, std::nullopt, -110.2, std::nullopt, -10.0};
  MetricConfig cfg;
  cfg.coverage_delta = 1.0;
  cfg.novelty_delta = 0.5;
  cfg.unique_n = 3;
  const auto r = metric_report(samples, rewards, reference, known, t, cfg);

  EXPECT_EQ(r.n_samples, 5u);
  EXPECT_EQ(r.n_parsed, 4u);
  EXPECT_EQ(r.n_scored, 3u);
  EXPECT_DOUBLE_EQ(r.validity_rate, 3.0 / 5.0);
  EXPECT_NEAR(r.mean_reward, (-0.5 - 1111 - 110.2 - 1111 - 10.0) / 5, 1e-12);
  EXPECT_NEAR(*r.unique_pairs_at_n, 1.0, 1e-12);

  std::vector<FeatureVector> ref_raw, known_raw, gen_pair, gen_master;
  for (const auto& x : reference) ref_raw.push_back(pair_features(x, t));
  for (const auto& x : known) known_raw.push_back(featurize(x, t));
  const auto rn = Normalizer::fit(ref_raw);
  const auto kn = Normalizer::fit(known_raw);
  for (const auto& s : samples)
    if (s) {
      gen_pair.push_back(rn.apply(pair_features(*s, t)));
      gen_master.push_back(kn.apply(featurize(chem::combine_master(s->bcc, s->b2, s->b2_vol), t)));
    }
  const auto cov = coverage(gen_pair, rn.apply(ref_raw), 1.0);
  const auto nov = novelty(gen_master, kn.apply(known_raw), 0.5);
  EXPECT_EQ(r.coverage_recall, cov.recall);
  EXPECT_EQ(r.coverage_precision, cov.precision);
  EXPECT_EQ(r.novelty.mean_min_distance, nov.mean_min_distance);
  EXPECT_EQ(r.novelty.fraction_beyond, nov.fraction_beyond);
  for (double v : {r.validity_rate, r.coverage_recall, r.coverage_precision, r.novelty.fraction_beyond}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }

  // unique pairs is null when fewer than n samples parsed
  cfg.unique_n = 5;
  EXPECT_FALSE(metric_report(samples, rewards, reference, known, t, cfg).unique_pairs_at_n.has_value());

  // default deltas come from the reference sets
  const auto d = metric_report(samples, rewards, reference, known, t);
  EXPECT_EQ(d.coverage_delta, nn_distance_percentile(rn.apply(ref_raw)));
  EXPECT_EQ(d.novelty_delta, nn_distance_percentile(kn.apply(known_raw)));

  EXPECT_EQ(report_from_json(nlohmann::json::parse(to_json(r).dump())), r);
  EXPECT_EQ(report_from_json(nlohmann::json::parse(to_json(d).dump())), d);
  EXPECT_EQ(code_of([&] { metric_report({}, {}, reference, known, t); }), ErrorCode::EmptyInput);
}
