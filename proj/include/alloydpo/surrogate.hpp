#pragma once

#include <map>
#include <string>

#include "alloydpo/elements.hpp"
#include "alloydpo/phase.hpp"
#include "alloydpo/roles.hpp"

namespace alloydpo::phase {

// Tunables of the surrogate equilibrium model. The model is a deterministic
// stand-in for a CALPHAD backend with plausible structure (a liquidus, an
// ordering transition, an intermetallic penalty); it is not thermodynamics.
struct SurrogateConfig {
  // Solid fraction ramps linearly from 0 at the liquidus to 1 this far below it.
  double freezing_range_k = 100.0;
  // B2 ordering temperature as a fraction of the liquidus:
  // T_order = T_liq * (order_ratio + order_boost * f_B2).
  double order_ratio = 0.60;
  double order_boost = 0.60;
  // Ordered fraction ramps in over this many kelvin below T_order.
  double ordering_range_k = 150.0;
  // A/B sublattice imbalance destabilizes B2 below
  // T_low = dissolve_ratio * imbalance * T_liq; dissolved B2 becomes OTHER.
  double dissolve_ratio = 1.0;
  // Electronegativity spread (weighted std) of the disordered remainder above
  // en_threshold pushes material into OTHER with slope en_slope.
  double en_threshold = 0.15;
  double en_slope = 2.0;
  // BCC propensity (mean stabilizer score) at which the remainder is fully BCC.
  double propensity_saturation = 0.6;
  double bcc_former_stabilizer = 1.0;
  double metal_stabilizer = 0.35;
  double nonmetal_stabilizer = 0.0;
  std::map<std::string, double> stabilizer_overrides;
  // Half-width of the composition-hash offset added to the B2 lattice, Angstrom.
  double b2_lattice_offset = 0.05;

  std::string liquid_label = "LIQUID";
  std::string bcc_label = "BCC_B2";
  std::string b2_label = "BCC_B2#2";
  std::string other_label = "SIGMA";
};

class SurrogateOracle final : public PhaseOracle {
 public:
  SurrogateOracle(chem::ElementTable elements, chem::RoleTable roles, SurrogateConfig config = {});

  PhaseTable equilibrium(const chem::Composition& master, std::span<const double> grid) const override;

  const SurrogateConfig& config() const { return config_; }

 private:
  double stabilizer(const chem::Element& e) const;

  chem::ElementTable elements_;
  chem::RoleTable roles_;
  SurrogateConfig config_;
};

}  // namespace alloydpo::phase
