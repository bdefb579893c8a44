#include <gtest/gtest.h>

#include <cmath>

#include "alloydpo/error.hpp"
#include "alloydpo/reward.hpp"
#include "test_support.hpp"

using namespace alloydpo;
using reward::CriteriaResult;

namespace {

// BCC from 1800 K down, B2 from 1400 K down to the grid floor, liquid above.
std::vector<test::Row> two_phase_rows(double t) {
  if (t > 1800) return {{"LIQUID", 1.0, std::nullopt}};
  if (t > 1400) return {{"BCC_B2", 1.0, 3.20}};
  return {{"BCC_B2", 0.6, 3.20}, {"BCC_B2#2", 0.4, 3.18}};
}

class TableOracle final : public phase::PhaseOracle {
 public:
  explicit TableOracle(std::function<std::vector<test::Row>(double)> rows) : rows_(std::move(rows)) {}
  phase::PhaseTable equilibrium(const chem::Composition& master, std::span<const double> grid) const override {
    if (master.fraction("Si") > 0) throw Error(ErrorCode::OracleFailure, "backend refused");
    auto t = test::make_table(std::vector<double>(grid.begin(), grid.end()), rows_);
    t.master = master;
    return t;
  }

 private:
  std::function<std::vector<test::Row>(double)> rows_;
};

// Position of the highest-priority failed criterion; 4 when none fails.
int tier(const CriteriaResult& c) {
  if (!c.bcc_b2_exist) return 0;
  if (!c.bcc_forms_first) return 1;
  if (!c.b2_room_temp) return 2;
  if (c.others_exceed_10pct) return 3;
  return 4;
}

CriteriaResult random_criteria(Rng& rng) {
  CriteriaResult c;
  c.bcc_b2_exist = rng.below(2);
  c.bcc_forms_first = rng.below(2);
  c.b2_room_temp = rng.below(2);
  c.others_exceed_10pct = rng.below(2);
  // present iff coexistence holds; continuous draw so exact ties have zero probability
  if (c.bcc_b2_exist) c.min_lattice_mismatch = rng.uniform() * (rng.below(10) == 0 ? 3.0 : 1.0);
  return c;
}

}  // namespace

TEST(Criteria, TwoPhaseFixturePassesAll) {
  const auto t = test::make_table(phase::standard_grid(), two_phase_rows);
  const auto c = reward::evaluate_criteria(t);
  EXPECT_TRUE(c.bcc_b2_exist);
  EXPECT_TRUE(c.bcc_forms_first);
  EXPECT_TRUE(c.b2_room_temp);
  EXPECT_FALSE(c.others_exceed_10pct);
  ASSERT_TRUE(c.min_lattice_mismatch.has_value());
  EXPECT_NEAR(*c.min_lattice_mismatch, 0.02, 1e-12);
  EXPECT_NEAR(reward::reward_of(c), -0.02, 1e-12);
}

TEST(Criteria, OtherAboveTenPercentAtOneSolidTemperature) {
  const auto t = test::make_table(phase::standard_grid(), [](double temp) -> std::vector<test::Row> {
    if (temp == 1023) return {{"BCC_B2", 0.45, 3.20}, {"BCC_B2#2", 0.4, 3.18}, {"SIGMA", 0.15, std::nullopt}};
    return two_phase_rows(temp);
  });
  const auto c = reward::evaluate_criteria(t);
  EXPECT_TRUE(c.others_exceed_10pct);
  EXPECT_TRUE(c.bcc_b2_exist);
}

TEST(Criteria, OtherInsideLiquidRegionIsIgnored) {
  const auto t = test::make_table(phase::standard_grid(), [](double temp) -> std::vector<test::Row> {
    if (temp > 1800) return {{"LIQUID", 0.5, std::nullopt}, {"SIGMA", 0.5, std::nullopt}};
    return two_phase_rows(temp);
  });
  EXPECT_FALSE(reward::evaluate_criteria(t).others_exceed_10pct);
}

TEST(Criteria, NoB2MeansNoCoexistenceAndNoMismatch) {
  const auto t = test::make_table(phase::standard_grid(), [](double temp) -> std::vector<test::Row> {
    if (temp > 1800) return {{"LIQUID", 1.0, std::nullopt}};
    return {{"BCC_B2", 1.0, 3.2}};
  });
  const auto c = reward::evaluate_criteria(t);
  EXPECT_FALSE(c.bcc_b2_exist);
  EXPECT_FALSE(c.bcc_forms_first);
  EXPECT_FALSE(c.b2_room_temp);
  EXPECT_FALSE(c.min_lattice_mismatch.has_value());
  EXPECT_DOUBLE_EQ(reward::reward_of(c), -1110.0);
}

TEST(Criteria, B2FirstFailsOrdering) {
  const auto t = test::make_table(phase::standard_grid(), [](double temp) -> std::vector<test::Row> {
    if (temp > 1800) return {{"LIQUID", 1.0, std::nullopt}};
    if (temp > 1400) return {{"BCC_B2#2", 1.0, 3.18}};
    return {{"BCC_B2", 0.5, 3.25}, {"BCC_B2#2", 0.5, 3.18}};
  });
  const auto c = reward::evaluate_criteria(t);
  EXPECT_TRUE(c.bcc_b2_exist);
  EXPECT_FALSE(c.bcc_forms_first);
  EXPECT_NEAR(*c.min_lattice_mismatch, 0.07, 1e-12);
}

TEST(Criteria, MissingLatticeAtCoexistence) {
  const auto t = test::make_table(phase::standard_grid(), [](double temp) -> std::vector<test::Row> {
    if (temp > 1400) return {{"BCC_B2", 1.0, 3.2}};
    return {{"BCC_B2", 0.5, 3.2}, {"BCC_B2#2", 0.5, std::nullopt}};
  });
  try {
    reward::evaluate_criteria(t);
    FAIL() << "expected MissingLattice";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLattice);
  }
}

TEST(RewardOf, Examples) {
  EXPECT_EQ(reward::reward_of(CriteriaResult{false, false, false, true, std::nullopt}), -1111.0);
  EXPECT_NEAR(reward::reward_of(CriteriaResult{true, true, true, false, 0.02}), -0.02, 1e-15);
  EXPECT_NEAR(reward::reward_of(CriteriaResult{true, true, false, false, 0.05}), -10.05, 1e-12);
  EXPECT_EQ(reward::reward_of(CriteriaResult{true, true, true, false, 0.0}), 0.0);
  // mismatch is clamped at 1 Angstrom
  EXPECT_EQ(reward::reward_of(CriteriaResult{true, true, true, false, 7.5}), -1.0);
}

TEST(RewardOf, TierSeparationProperty) {
  Rng rng(2024);
  std::vector<CriteriaResult> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(random_criteria(rng));
  int violations = 0;
  for (std::size_t i = 0; i + 1 < draws.size(); ++i) {
    const auto& a = draws[i];
    const auto& b = draws[i + 1];
    const double ra = reward::reward_of(a);
    const double rb = reward::reward_of(b);
    ASSERT_GE(ra, -1111.0);
    ASSERT_LE(ra, 0.0);
    if (tier(a) < tier(b) && !(ra < rb)) ++violations;
    if (tier(b) < tier(a) && !(rb < ra)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(RewardOf, ClampBoundaryTie) {
  // The single configuration where separation is only non-strict: a perfect
  // candidate at the clamp ties with an others-only failure with zero mismatch.
  EXPECT_EQ(reward::reward_of(CriteriaResult{true, true, true, false, 1.0}),
            reward::reward_of(CriteriaResult{true, true, true, true, 0.0}));
}

TEST(RewardOf, MonotoneInMismatch) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    auto c = random_criteria(rng);
    c.bcc_b2_exist = true;
    const double m1 = rng.uniform() * 2;
    const double m2 = m1 + rng.uniform();
    c.min_lattice_mismatch = m1;
    const double r1 = reward::reward_of(c);
    c.min_lattice_mismatch = m2;
    ASSERT_LE(reward::reward_of(c), r1);
  }
}

TEST(ScoreCandidate, AttachesMasterCriteriaAndReward) {
  TableOracle oracle(two_phase_rows);
  const auto triple = chem::CandidateTriple::make(chem::Composition::pure("Mo"),
                                                  chem::Composition::from_amounts({{"Al", 1}, {"Ni", 1}}), 0.45);
  const auto s = reward::score_candidate(triple, oracle, phase::standard_grid());
  EXPECT_NEAR(s.master.fraction("Mo"), 0.55, 1e-12);
  EXPECT_NEAR(s.reward, -0.02, 1e-12);
  const auto j = reward::to_json(s);
  const auto back = reward::scored_from_json(nlohmann::json::parse(j.dump()), test::elements());
  EXPECT_EQ(back.criteria, s.criteria);
  EXPECT_EQ(back.reward, s.reward);
  EXPECT_EQ(chem::format_triple(back.triple), chem::format_triple(s.triple));
}

TEST(ScoreBatch, OrderPreservedAndFailuresIsolated) {
  TableOracle oracle(two_phase_rows);
  const auto b2 = chem::Composition::from_amounts({{"Al", 1}, {"Ni", 1}});
  std::vector<chem::CandidateTriple> triples;
  const std::vector<std::string> bccs{"Mo", "Nb", "Si", "W", "Ta", "V", "Cr"};
  for (std::size_t i = 0; i < bccs.size(); ++i)
    triples.push_back(chem::CandidateTriple::make(chem::Composition::pure(bccs[i]), b2, 0.2 + 0.05 * i));
  for (unsigned workers : {1u, 3u}) {
    const auto out = reward::score_batch(triples, oracle, phase::standard_grid(), workers);
    ASSERT_EQ(out.size(), triples.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (bccs[i] == "Si") {
        EXPECT_FALSE(out[i].ok());
        EXPECT_NE(out[i].error.find("backend refused"), std::string::npos);
      } else {
        ASSERT_TRUE(out[i].ok());
        EXPECT_EQ(out[i].scored->triple.bcc, triples[i].bcc);
        EXPECT_DOUBLE_EQ(out[i].scored->triple.b2_vol, triples[i].b2_vol);
      }
    }
  }
}
