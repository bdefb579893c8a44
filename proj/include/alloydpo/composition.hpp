#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "alloydpo/elements.hpp"

namespace alloydpo::chem {

// Normalized element -> mole fraction map. Fractions are strictly positive and
// sum to 1 within 1e-9. Entries are kept sorted by symbol.
class Composition {
 public:
  Composition() = default;

  // Normalizes positive amounts to fractions. Throws EmptyFormula when
  // `amounts` is empty and InvalidArgument on a non-positive or non-finite amount.
  static Composition from_amounts(const std::map<std::string, double>& amounts);
  static Composition pure(std::string symbol);

  const std::map<std::string, double>& entries() const { return entries_; }
  double fraction(std::string_view symbol) const;
  std::vector<std::string> elements() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Throws UnknownElement if any symbol is outside `table`.
  void check_whitelist(const ElementTable& table) const;

  bool approx_equal(const Composition& other, double tol) const;
  bool operator==(const Composition&) const = default;

 private:
  std::map<std::string, double> entries_;
};

// Accepts e.g. "Mo0.5Nb0.5", "AlNi", "Mo2Nb". Repeated symbols accumulate.
Composition parse_formula(std::string_view text, const ElementTable& table);

// Canonical form: descending fraction, then alphabetical; exactly four
// decimals. Rendered fractions always sum to exactly 1.0000 so that
// format(parse(format(c))) == format(c).
std::string format_composition(const Composition& c);

// Linear molar mixing x = (1 - v) x_bcc + v x_b2.
Composition combine_master(const Composition& bcc, const Composition& b2, double b2_fraction);

inline constexpr double kMinB2Volume = 0.20;
inline constexpr double kMaxB2Volume = 0.70;

struct CandidateTriple {
  Composition bcc;
  Composition b2;
  double b2_vol = 0.45;

  // Throws InvalidArgument when b2_vol is outside [0.20, 0.70].
  static CandidateTriple make(Composition bcc, Composition b2, double b2_vol);
};

// Serialized triple: "<bcc>|<b2>|<percent>%" with the volume percent rendered
// to one decimal, e.g. "Mo0.5000Nb0.5000|Al0.5000Ni0.5000|45.0%".
std::string format_triple(const CandidateTriple& t);
// Throws MalformedTriple on structural problems; composition errors propagate.
CandidateTriple parse_triple(std::string_view text, const ElementTable& table);

}  // namespace alloydpo::chem
