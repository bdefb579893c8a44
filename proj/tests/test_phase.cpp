#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "alloydpo/error.hpp"
#include "alloydpo/phase.hpp"
#include "alloydpo/surrogate.hpp"
#include "alloydpo/textio.hpp"
#include "test_support.hpp"

using namespace alloydpo;
using phase::PhaseClass;

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

phase::SurrogateOracle surrogate() {
  return phase::SurrogateOracle(test::elements(), chem::RoleTable::standard());
}

}  // namespace

TEST(Classifier, DefaultRules) {
  EXPECT_EQ(phase::classify_phase("BCC_B2"), PhaseClass::BCC);
  EXPECT_EQ(phase::classify_phase("BCC_B2#2"), PhaseClass::B2);
  EXPECT_EQ(phase::classify_phase("BCC_B2#2 (ordered)"), PhaseClass::B2);
  EXPECT_EQ(phase::classify_phase("B2_BCC"), PhaseClass::B2);
  EXPECT_EQ(phase::classify_phase("BCC_A2"), PhaseClass::BCC);
  EXPECT_EQ(phase::classify_phase("LIQUID"), PhaseClass::Liquid);
  EXPECT_EQ(phase::classify_phase("SIGMA"), PhaseClass::Other);
  EXPECT_EQ(phase::classify_phase("FCC_A1"), PhaseClass::Other);
}

TEST(Classifier, RulesFromFile) {
  const auto c = phase::PhaseClassifier::load_csv(test::data_path("phase_rules.csv"));
  EXPECT_EQ(c.classify("BCC_B2#2 (ordered)"), PhaseClass::B2);
  EXPECT_EQ(c.classify("BCC_B2"), PhaseClass::BCC);
  EXPECT_EQ(c.classify("LIQUID"), PhaseClass::Liquid);
  EXPECT_EQ(c.classify("HCP_A3"), PhaseClass::Other);
}

TEST(Grid, StandardGridHas77Points) {
  const auto g = phase::standard_grid();
  ASSERT_EQ(g.size(), 77u);
  EXPECT_DOUBLE_EQ(g.front(), 373.0);
  EXPECT_DOUBLE_EQ(g.back(), 2273.0);
  const auto coarse = phase::standard_grid(400.0);
  EXPECT_DOUBLE_EQ(coarse.back(), 2273.0);
  EXPECT_NE(phase::grid_key(g), phase::grid_key(coarse));
}

TEST(ParsePhaseTable, GroupsByTemperature) {
  std::istringstream in(
      "temperature_K,phase,mole_fraction,lattice_param_A\n"
      "1000,BCC_B2,0.6,3.1\n"
      "373,BCC_B2,1.0,3.0\n"
      "1000,LIQUID,0.4,\n"
      "373,LIQUID,0,\n");
  const auto t = phase::parse_phase_table(in);
  EXPECT_EQ(t.record_count(), 4u);
  ASSERT_EQ(t.grid.size(), 2u);
  EXPECT_DOUBLE_EQ(t.grid[0], 373.0);
  EXPECT_DOUBLE_EQ(t.fraction(1, PhaseClass::BCC), 0.6);
  EXPECT_DOUBLE_EQ(t.fraction(1, PhaseClass::Liquid), 0.4);
  EXPECT_DOUBLE_EQ(t.lattice(0, PhaseClass::BCC).value(), 3.0);
  EXPECT_FALSE(t.lattice(1, PhaseClass::Liquid).has_value());
}

TEST(ParsePhaseTable, Errors) {
  std::istringstream unnormalized(
      "temperature_K,phase,mole_fraction,lattice_param_A\n1000,BCC_B2,0.7,3.1\n1000,LIQUID,0.4,\n");
  EXPECT_EQ(code_of([&] { phase::parse_phase_table(unnormalized); }), ErrorCode::NormalizationError);
  std::istringstream empty("temperature_K,phase,mole_fraction,lattice_param_A\n");
  EXPECT_EQ(code_of([&] { phase::parse_phase_table(empty); }), ErrorCode::EmptyTable);
  std::istringstream header("T,phase,x\n1000,BCC_B2,1\n");
  EXPECT_EQ(code_of([&] { phase::parse_phase_table(header); }), ErrorCode::SchemaError);
  std::istringstream number("temperature_K,phase,mole_fraction,lattice_param_A\n1000,BCC_B2,abc,3.1\n");
  EXPECT_EQ(code_of([&] { phase::parse_phase_table(number); }), ErrorCode::SchemaError);
}

TEST(ParsePhaseTable, FormatRoundTrip) {
  const auto oracle = surrogate();
  const auto master = chem::Composition::from_amounts({{"Mo", 0.5}, {"Al", 0.25}, {"Ni", 0.25}});
  const auto t = oracle.equilibrium(master, phase::standard_grid());
  const auto text = phase::format_phase_table(t);
  std::istringstream in(text);
  const auto back = phase::parse_phase_table(in, master);
  EXPECT_EQ(phase::format_phase_table(back), text);
}

TEST(Surrogate, Deterministic) {
  const auto a = surrogate();
  const auto b = surrogate();
  const auto master = chem::Composition::from_amounts({{"Nb", 0.6}, {"Ti", 0.2}, {"Ru", 0.2}});
  const auto grid = phase::standard_grid();
  EXPECT_EQ(phase::format_phase_table(a.equilibrium(master, grid)),
            phase::format_phase_table(b.equilibrium(master, grid)));
}

TEST(Surrogate, PureMolybdenumIsSingleBccWithReferenceLattice) {
  const auto t = surrogate().equilibrium(chem::Composition::pure("Mo"), phase::standard_grid());
  EXPECT_DOUBLE_EQ(t.fraction(0, PhaseClass::BCC), 1.0);
  EXPECT_NEAR(t.lattice(0, PhaseClass::BCC).value(), 3.147, 1e-12);
  EXPECT_DOUBLE_EQ(t.fraction(0, PhaseClass::B2), 0.0);
  // Mo melts well above the grid
  EXPECT_DOUBLE_EQ(t.fraction(t.grid.size() - 1, PhaseClass::Liquid), 0.0);
}

TEST(Surrogate, NoBSiteMeansNoB2) {
  const auto t = surrogate().equilibrium(chem::Composition::from_amounts({{"Mo", 0.5}, {"Al", 0.5}}),
                                         phase::standard_grid());
  for (std::size_t i = 0; i < t.grid.size(); ++i) EXPECT_EQ(t.fraction(i, PhaseClass::B2), 0.0);
}

TEST(Surrogate, TablesAreNormalizedProperty) {
  const auto oracle = surrogate();
  const auto grid = phase::standard_grid();
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    const auto master = test::random_composition(rng, 6);
    const auto t = oracle.equilibrium(master, grid);
    ASSERT_NO_THROW(t.check_normalized(1e-9)) << chem::format_composition(master);
    ASSERT_NO_THROW(t.check_standard_span());
    for (const auto& row : t.by_temperature)
      for (const auto& r : row) {
        ASSERT_GE(r.mole_fraction, 0.0);
        ASSERT_LE(r.mole_fraction, 1.0 + 1e-12);
      }
  }
}
