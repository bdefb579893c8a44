#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace alloydpo::chem {

struct Element {
  std::string symbol;
  double electronegativity = 0.0;  // Pauling
  double radius_pm = 0.0;          // metallic radius
  int z = 0;
  double mass = 0.0;               // amu
  double melt_k = 0.0;
  int valence = 0;
  int group = 0;
  int period = 0;
  std::vector<int> oxidation_states;
  bool is_metal = false;
  std::optional<double> bcc_a;     // reference BCC lattice constant, Angstrom

  // Reference constant used for Vegard mixing. Elements without a tabulated
  // BCC constant fall back to the hard-sphere BCC estimate a = 4r / sqrt(3).
  double lattice_reference() const;
};

// Immutable after construction; safe to share across threads.
class ElementTable {
 public:
  ElementTable() = default;
  explicit ElementTable(std::vector<Element> elements);

  // CSV header: symbol,electronegativity,radius_pm,z,mass,melt_K,valence,
  // group,period,oxidation_states,is_metal,bcc_a_angstrom
  static ElementTable parse_csv(std::istream& in);
  static ElementTable load_csv(const std::filesystem::path& path);
  // Table shipped in the data directory.
  static const ElementTable& standard();

  // Keeps only `symbols`; every one of them must exist in this table.
  ElementTable restrict_to(std::span<const std::string> symbols) const;

  const Element* find(std::string_view symbol) const;
  const Element& at(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return find(symbol) != nullptr; }

  std::span<const Element> elements() const { return elements_; }
  std::vector<std::string> symbols() const;
  std::size_t size() const { return elements_.size(); }

 private:
  std::vector<Element> elements_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::filesystem::path default_data_dir();

}  // namespace alloydpo::chem
