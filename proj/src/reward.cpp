#include "alloydpo/reward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::reward {

using phase::PhaseClass;

CriteriaResult evaluate_criteria(const phase::PhaseTable& table, double eps) {
  const std::size_t n = table.grid.size();
  if (n == 0 || table.by_temperature.size() != n) {
    throw Error(ErrorCode::EmptyTable, "criteria need a non-empty phase table");
  }
  CriteriaResult out;
  std::optional<double> bcc_top;
  std::optional<double> b2_top;
  double best_mismatch = std::numeric_limits<double>::infinity();

  for (std::size_t t = 0; t < n; ++t) {
    const double temp = table.grid[t];
    const bool bcc = table.fraction(t, PhaseClass::BCC) >= eps;
    const bool b2 = table.fraction(t, PhaseClass::B2) >= eps;
    const bool solid = table.fraction(t, PhaseClass::Liquid) < eps;
    if (bcc && (!bcc_top || temp > *bcc_top)) bcc_top = temp;
    if (b2 && (!b2_top || temp > *b2_top)) b2_top = temp;
    if (solid && table.fraction(t, PhaseClass::Other) > kOtherPhaseLimit) out.others_exceed_10pct = true;
    if (bcc && b2 && solid) {
      out.bcc_b2_exist = true;
      const auto a_bcc = table.lattice(t, PhaseClass::BCC, eps);
      const auto a_b2 = table.lattice(t, PhaseClass::B2, eps);
      if (!a_bcc || !a_b2) {
        throw Error(ErrorCode::MissingLattice,
                    "no lattice parameter for coexisting phases at " + textio::format_double(temp) + " K");
      }
      best_mismatch = std::min(best_mismatch, std::abs(*a_bcc - *a_b2));
    }
  }
  // Equal first-appearance temperatures count as failure.
  out.bcc_forms_first = bcc_top && b2_top && *bcc_top > *b2_top;
  const std::size_t coldest =
      static_cast<std::size_t>(std::min_element(table.grid.begin(), table.grid.end()) - table.grid.begin());
  out.b2_room_temp = table.fraction(coldest, PhaseClass::B2) >= eps;
  if (out.bcc_b2_exist) out.min_lattice_mismatch = best_mismatch;
  return out;
}

double reward_of(const CriteriaResult& c) {
  double r = 0.0;
  if (!c.bcc_b2_exist) r -= 1000.0;
  if (!c.bcc_forms_first) r -= 100.0;
  if (!c.b2_room_temp) r -= 10.0;
  if (c.others_exceed_10pct) r -= 1.0;
  if (c.min_lattice_mismatch) r -= std::min(std::max(*c.min_lattice_mismatch, 0.0), kMismatchClampAngstrom);
  return r;
}

ScoredCandidate score_candidate(const chem::CandidateTriple& triple, const phase::PhaseOracle& oracle,
                                std::span<const double> grid, double eps) {
  try {
    ScoredCandidate s;
    s.triple = triple;
    s.master = chem::combine_master(triple.bcc, triple.b2, triple.b2_vol);
    s.criteria = evaluate_criteria(oracle.equilibrium(s.master, grid), eps);
    s.reward = reward_of(s.criteria);
    return s;
  } catch (const Error& e) {
    throw Error(e.code(), "candidate " + chem::format_triple(triple) + ": " + e.what());
  }
}

std::vector<ScoreOutcome> score_batch(std::span<const chem::CandidateTriple> triples, const phase::PhaseOracle& oracle,
                                      std::span<const double> grid, unsigned workers, double eps) {
  std::vector<ScoreOutcome> out(triples.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < triples.size(); i = next++) {
      try {
        out[i].scored = score_candidate(triples[i], oracle, grid, eps);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, triples.size()))));
  if (workers == 1) {
    work();
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  return out;
}

nlohmann::ordered_json criteria_to_json(const CriteriaResult& c) {
  nlohmann::ordered_json j;
  j["bcc_b2_exist"] = c.bcc_b2_exist;
  j["bcc_forms_first"] = c.bcc_forms_first;
  j["b2_room_temp"] = c.b2_room_temp;
  j["others_exceed_10pct"] = c.others_exceed_10pct;
  if (c.min_lattice_mismatch) {
    j["min_lattice_mismatch"] = *c.min_lattice_mismatch;
  } else {
    j["min_lattice_mismatch"] = nullptr;
  }
  return j;
}

CriteriaResult criteria_from_json(const nlohmann::json& j) {
  CriteriaResult c;
  c.bcc_b2_exist = j.at("bcc_b2_exist").get<bool>();
  c.bcc_forms_first = j.at("bcc_forms_first").get<bool>();
  c.b2_room_temp = j.at("b2_room_temp").get<bool>();
  c.others_exceed_10pct = j.at("others_exceed_10pct").get<bool>();
  if (j.contains("min_lattice_mismatch") && !j.at("min_lattice_mismatch").is_null()) {
    c.min_lattice_mismatch = j.at("min_lattice_mismatch").get<double>();
  }
  return c;
}

nlohmann::ordered_json to_json(const ScoredCandidate& s) {
  nlohmann::ordered_json j;
  j["bcc"] = chem::format_composition(s.triple.bcc);
  j["b2"] = chem::format_composition(s.triple.b2);
  j["b2_vol"] = s.triple.b2_vol;
  j["reward"] = s.reward;
  j["criteria"] = criteria_to_json(s.criteria);
  return j;
}

ScoredCandidate scored_from_json(const nlohmann::json& j, const chem::ElementTable& table) {
  try {
    ScoredCandidate s;
    s.triple = chem::CandidateTriple::make(chem::parse_formula(j.at("bcc").get<std::string>(), table),
                                           chem::parse_formula(j.at("b2").get<std::string>(), table),
                                           j.at("b2_vol").get<double>());
    s.master = chem::combine_master(s.triple.bcc, s.triple.b2, s.triple.b2_vol);
    s.criteria = criteria_from_json(j.at("criteria"));
    s.reward = j.at("reward").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("scored record: ") + e.what());
  }
}

}  // namespace alloydpo::reward
