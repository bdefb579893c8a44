#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "alloydpo/composition.hpp"

namespace alloydpo::phase {

enum class PhaseClass { BCC, B2, Liquid, Other };

std::string_view to_string(PhaseClass c);
PhaseClass phase_class_from_string(std::string_view s);

inline constexpr double kMinTemperatureK = 373.0;
inline constexpr double kMaxTemperatureK = 2273.0;
inline constexpr double kDefaultGridStepK = 25.0;
// Below this mole fraction a phase counts as absent.
inline constexpr double kPresenceEpsilon = 1e-6;

struct PhaseRecord {
  double temperature_k = 0.0;
  std::string label;
  PhaseClass phase_class = PhaseClass::Other;
  double mole_fraction = 0.0;
  std::optional<double> lattice_param;  // Angstrom
};

// Ordered (pattern, class) rules; first match wins, no match is Other.
class PhaseClassifier {
 public:
  PhaseClassifier();  // default Thermo-Calc style rules
  explicit PhaseClassifier(std::vector<std::pair<std::string, PhaseClass>> rules);

  // CSV header `pattern,class`; class is one of BCC, B2, LIQUID, OTHER.
  static PhaseClassifier load_csv(const std::filesystem::path& path);

  PhaseClass classify(std::string_view label) const;

 private:
  std::vector<std::pair<std::regex, PhaseClass>> rules_;
};

PhaseClass classify_phase(std::string_view label);

// 373 K .. 2273 K inclusive at `step_k`; the upper end is always included.
std::vector<double> standard_grid(double step_k = kDefaultGridStepK);
std::string grid_key(std::span<const double> grid);

struct PhaseTable {
  chem::Composition master;
  std::vector<double> grid;
  // One entry per grid temperature, records sorted by label.
  std::vector<std::vector<PhaseRecord>> by_temperature;

  std::size_t record_count() const;
  std::vector<PhaseRecord> records() const;

  double fraction(std::size_t t, PhaseClass c) const;
  // Fraction-weighted lattice parameter over the present records of class `c`;
  // nullopt when any present record of that class lacks one or none is present.
  std::optional<double> lattice(std::size_t t, PhaseClass c, double eps = kPresenceEpsilon) const;

  // Per-temperature fractions sum to 1 within `tol` (NormalizationError).
  void check_normalized(double tol) const;
  // Grid spans [373, 2273] K (SchemaError).
  void check_standard_span() const;
};

inline constexpr std::string_view kPhaseTableHeader = "temperature_K,phase,mole_fraction,lattice_param_A";

// Groups and sorts by temperature. Errors: SchemaError, NormalizationError
// (a temperature's fractions off by more than 1e-3), EmptyTable.
PhaseTable parse_phase_table(std::istream& in, const chem::Composition& master = {},
                             const PhaseClassifier& classifier = PhaseClassifier());
PhaseTable read_phase_table(const std::filesystem::path& path, const chem::Composition& master = {},
                            const PhaseClassifier& classifier = PhaseClassifier());
std::string format_phase_table(const PhaseTable& table);

// Phase-equilibrium backend. Implementations must be deterministic and safe to
// call concurrently.
class PhaseOracle {
 public:
  virtual ~PhaseOracle() = default;
  virtual PhaseTable equilibrium(const chem::Composition& master, std::span<const double> grid) const = 0;
};

}  // namespace alloydpo::phase
