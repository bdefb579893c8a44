#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/datasets.hpp"
#include "alloydpo/roles.hpp"

namespace alloydpo::baselines {

// Random parametric sweep. Each candidate gets
//   BCC: k ~ U{1..4} distinct BCC formers, each fraction drawn from the
//        concentration grid, then normalized;
//   B2:  one A-site and one different B-site element at 0.5 each, uniform
//        over the admissible (A, B) cross product;
//   volume ~ U[0.20, 0.70], rounded to 0.001.
// Throws InvalidArgument (n < 1) and DegenerateRoles.
std::vector<chem::CandidateTriple> random_search(
    const chem::RoleTable& roles, int n, std::uint64_t seed,
    std::span<const double> concentrations = data::kDefaultConcentrations);

}  // namespace alloydpo::baselines
