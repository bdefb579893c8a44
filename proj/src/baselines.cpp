#include "alloydpo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "alloydpo/error.hpp"
#include "alloydpo/rng.hpp"

namespace alloydpo::baselines {

std::vector<chem::CandidateTriple> random_search(const chem::RoleTable& roles, int n, std::uint64_t seed,
                                                 std::span<const double> concentrations) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "random_search needs n >= 1");
  const auto formers = roles.bcc_formers();
  const auto a_site = roles.a_site();
  const auto b_site = roles.b_site();
  if (formers.empty() || a_site.empty() || b_site.empty()) {
    throw Error(ErrorCode::DegenerateRoles, "random search needs BCC formers and both B2 sites");
  }
  if (a_site.size() == 1 && b_site.size() == 1 && a_site[0] == b_site[0]) {
    throw Error(ErrorCode::DegenerateRoles, "no B2 pair with distinct A and B elements");
  }
  const auto grid = data::snap_concentrations(concentrations);
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty concentration grid");
  const std::size_t max_k = std::min<std::size_t>(4, formers.size());

  Rng rng(seed);
  std::vector<chem::CandidateTriple> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<std::string> pick = formers;
  for (int i = 0; i < n; ++i) {
    const std::size_t k = 1 + rng.below(max_k);
    for (std::size_t j = 0; j < k; ++j) std::swap(pick[j], pick[j + rng.below(pick.size() - j)]);
    std::map<std::string, double> amounts;
    for (std::size_t j = 0; j < k; ++j) amounts[pick[j]] = grid[rng.below(grid.size())];

    std::string a, b;
    do {
      a = a_site[rng.below(a_site.size())];
      b = b_site[rng.below(b_site.size())];
    } while (a == b);

    const double v = std::round(rng.uniform(chem::kMinB2Volume, chem::kMaxB2Volume) * 1000.0) / 1000.0;
    out.push_back(chem::CandidateTriple::make(chem::Composition::from_amounts(amounts),
                                              chem::Composition::from_amounts({{a, 0.5}, {b, 0.5}}), v));
  }
  return out;
}

}  // namespace alloydpo::baselines
