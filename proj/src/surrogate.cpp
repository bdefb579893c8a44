#include "alloydpo/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::phase {

namespace {

constexpr double kTiny = 1e-12;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Vegard-style linear mixing of reference lattice constants over `amounts`
// (need not be normalized).
double vegard(const chem::ElementTable& table, const std::map<std::string, double>& amounts) {
  double total = 0.0;
  double acc = 0.0;
  for (const auto& [sym, x] : amounts) {
    if (x <= 0.0) continue;
    total += x;
    acc += x * table.at(sym).lattice_reference();
  }
  return total > 0.0 ? acc / total : 0.0;
}

}  // namespace

SurrogateOracle::SurrogateOracle(chem::ElementTable elements, chem::RoleTable roles, SurrogateConfig config)
    : elements_(std::move(elements)), roles_(std::move(roles)), config_(std::move(config)) {}

double SurrogateOracle::stabilizer(const chem::Element& e) const {
  if (auto it = config_.stabilizer_overrides.find(e.symbol); it != config_.stabilizer_overrides.end()) {
    return it->second;
  }
  if (roles_.is_bcc_former(e.symbol)) return config_.bcc_former_stabilizer;
  return e.is_metal ? config_.metal_stabilizer : config_.nonmetal_stabilizer;
}

PhaseTable SurrogateOracle::equilibrium(const chem::Composition& master, std::span<const double> grid) const {
  if (master.empty()) throw Error(ErrorCode::EmptyFormula, "surrogate called with empty composition");
  master.check_whitelist(elements_);
  const auto& x = master.entries();

  double t_liq = 0.0;
  for (const auto& [sym, xi] : x) t_liq += xi * elements_.at(sym).melt_k;

  // Sublattice capacity; dual-role elements split evenly between sites.
  std::map<std::string, double> on_a;
  std::map<std::string, double> on_b;
  double a_total = 0.0;
  double b_total = 0.0;
  for (const auto& [sym, xi] : x) {
    const bool a = roles_.is_a_site(sym);
    const bool b = roles_.is_b_site(sym);
    const double share = (a && b) ? 0.5 : 1.0;
    if (a) a_total += on_a[sym] = xi * share;
    if (b) b_total += on_b[sym] = xi * share;
  }
  const double paired = std::min(a_total, b_total);
  const double f2 = paired > kTiny ? 2.0 * paired : 0.0;

  std::map<std::string, double> b2_atoms;
  if (f2 > 0.0) {
    for (const auto& [sym, c] : on_a) b2_atoms[sym] += c * paired / a_total;
    for (const auto& [sym, c] : on_b) b2_atoms[sym] += c * paired / b_total;
  }
  std::map<std::string, double> remainder;
  double remainder_total = 0.0;
  for (const auto& [sym, xi] : x) {
    auto it = b2_atoms.find(sym);
    const double r = std::max(0.0, xi - (it == b2_atoms.end() ? 0.0 : it->second));
    if (r > kTiny) {
      remainder[sym] = r;
      remainder_total += r;
    }
  }

  double bcc_share = 0.0;
  if (remainder_total > kTiny) {
    double propensity = 0.0;
    double en_mean = 0.0;
    for (const auto& [sym, r] : remainder) {
      const auto& e = elements_.at(sym);
      propensity += r / remainder_total * stabilizer(e);
      en_mean += r / remainder_total * e.electronegativity;
    }
    double en_var = 0.0;
    for (const auto& [sym, r] : remainder) {
      const double d = elements_.at(sym).electronegativity - en_mean;
      en_var += r / remainder_total * d * d;
    }
    const double en_penalty = clamp01(config_.en_slope * std::max(0.0, std::sqrt(en_var) - config_.en_threshold));
    const double propensity_share = std::min(1.0, propensity / config_.propensity_saturation);
    bcc_share = (1.0 - en_penalty) * propensity_share;
  }
  const double rem_fraction = remainder_total > kTiny ? 1.0 - f2 : 0.0;

  const double t_order = t_liq * (config_.order_ratio + config_.order_boost * f2);
  const double imbalance = (a_total + b_total) > kTiny ? std::abs(a_total - b_total) / (a_total + b_total) : 0.0;
  const double t_dissolve = config_.dissolve_ratio * imbalance * t_liq;

  const double a_bcc = remainder_total > kTiny ? vegard(elements_, remainder) : vegard(elements_, b2_atoms);
  double a_b2 = 0.0;
  if (f2 > 0.0) {
    const std::uint64_t h = textio::fnv1a64(chem::format_composition(master));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    a_b2 = vegard(elements_, b2_atoms) + (2.0 * u - 1.0) * config_.b2_lattice_offset;
  }

  PhaseTable table;
  table.master = master;
  table.grid.assign(grid.begin(), grid.end());
  table.by_temperature.reserve(grid.size());
  for (double temp : grid) {
    const double solid = clamp01((t_liq - temp) / config_.freezing_range_k);
    const bool b2_stable = f2 > 0.0 && temp >= t_dissolve;
    const double ordered = b2_stable ? clamp01((t_order - temp) / config_.ordering_range_k) : 0.0;

    const double bcc = solid * (rem_fraction * bcc_share + (b2_stable ? f2 * (1.0 - ordered) : 0.0));
    const double b2 = solid * f2 * ordered;
    const double other = solid * (rem_fraction * (1.0 - bcc_share) + (f2 > 0.0 && !b2_stable ? f2 : 0.0));
    const double liquid = 1.0 - solid;

    std::vector<PhaseRecord> rows;
    if (bcc > 0.0) rows.push_back({temp, config_.bcc_label, PhaseClass::BCC, bcc, a_bcc});
    if (b2 > 0.0) rows.push_back({temp, config_.b2_label, PhaseClass::B2, b2, a_b2});
    if (liquid > 0.0) rows.push_back({temp, config_.liquid_label, PhaseClass::Liquid, liquid, std::nullopt});
    if (other > 0.0) rows.push_back({temp, config_.other_label, PhaseClass::Other, other, std::nullopt});
    std::sort(rows.begin(), rows.end(), [](const PhaseRecord& a, const PhaseRecord& b) { return a.label < b.label; });
    table.by_temperature.push_back(std::move(rows));
  }
  return table;
}

}  // namespace alloydpo::phase
