#include "alloydpo/composition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::chem {

namespace {

constexpr long kUnits = 10000;  // 4 decimal places

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_numeric(char c) { return (c >= '0' && c <= '9') || c == '.'; }

}  // namespace

Composition Composition::from_amounts(const std::map<std::string, double>& amounts) {
  if (amounts.empty()) throw Error(ErrorCode::EmptyFormula, "composition has no elements");
  double total = 0.0;
  for (const auto& [sym, amount] : amounts) {
    if (!(amount > 0.0) || !std::isfinite(amount)) {
      throw Error(ErrorCode::InvalidArgument, "non-positive amount for " + sym);
    }
    total += amount;
  }
  Composition c;
  for (const auto& [sym, amount] : amounts) c.entries_.emplace(sym, amount / total);
  return c;
}

Composition Composition::pure(std::string symbol) {
  Composition c;
  c.entries_.emplace(std::move(symbol), 1.0);
  return c;
}

double Composition::fraction(std::string_view symbol) const {
  auto it = entries_.find(std::string(symbol));
  return it == entries_.end() ? 0.0 : it->second;
}

std::vector<std::string> Composition::elements() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [sym, x] : entries_) out.push_back(sym);
  return out;
}

void Composition::check_whitelist(const ElementTable& table) const {
  for (const auto& [sym, x] : entries_) {
    if (!table.contains(sym)) throw Error(ErrorCode::UnknownElement, sym);
  }
}

bool Composition::approx_equal(const Composition& other, double tol) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || std::abs(a->second - b->second) > tol) return false;
  }
  return true;
}

Composition parse_formula(std::string_view text, const ElementTable& table) {
  text = textio::trim(text);
  if (text.empty()) throw Error(ErrorCode::EmptyFormula, "empty formula");
  std::map<std::string, double> counts;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_numeric(c)) {
      throw Error(ErrorCode::MalformedNumber, "count without element in '" + std::string(text) + "'");
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      throw Error(ErrorCode::UnknownElement, "unexpected character in '" + std::string(text) + "'");
    }
    std::size_t j = i + 1;
    if (j < text.size() && is_lower(text[j])) ++j;
    const std::string symbol(text.substr(i, j - i));
    if (!is_upper(c) || !table.contains(symbol)) throw Error(ErrorCode::UnknownElement, symbol);
    std::size_t k = j;
    while (k < text.size() && is_numeric(text[k])) ++k;
    double count = 1.0;
    if (k > j) {
      const std::string_view digits = text.substr(j, k - j);
      auto v = textio::parse_double(digits);
      if (!v || *v <= 0.0 || digits.find('e') != std::string_view::npos) {
        throw Error(ErrorCode::MalformedNumber, "bad count '" + std::string(digits) + "' for " + symbol);
      }
      count = *v;
    }
    counts[symbol] += count;
    i = k;
  }
  return Composition::from_amounts(counts);
}

std::string format_composition(const Composition& c) {
  struct Slot {
    std::string symbol;
    long units;
    double remainder;
  };
  std::vector<Slot> slots;
  long assigned = 0;
  for (const auto& [sym, x] : c.entries()) {
    const double scaled = x * kUnits;
    const long floor_units = static_cast<long>(std::floor(scaled));
    slots.push_back({sym, floor_units, scaled - static_cast<double>(floor_units)});
    assigned += floor_units;
  }
  // Largest-remainder apportionment so the rendered values sum to 1.0000.
  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return slots[a].remainder > slots[b].remainder; });
  for (std::size_t k = 0; assigned < kUnits && k < order.size(); ++k, ++assigned) ++slots[order[k]].units;
  // Every present element keeps at least one unit.
  for (auto& s : slots) {
    if (s.units > 0) continue;
    auto donor = std::max_element(slots.begin(), slots.end(),
                                  [](const Slot& a, const Slot& b) { return a.units < b.units; });
    --donor->units;
    s.units = 1;
  }
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.units != b.units) return a.units > b.units;
    return a.symbol < b.symbol;
  });
  std::string out;
  for (const auto& s : slots) {
    out += s.symbol;
    out += std::to_string(s.units / kUnits);
    out += '.';
    std::string frac = std::to_string(s.units % kUnits);
    out.append(4 - frac.size(), '0');
    out += frac;
  }
  return out;
}

Composition combine_master(const Composition& bcc, const Composition& b2, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mixing fraction outside [0,1]");
  if (v == 0.0) return bcc;
  if (v == 1.0) return b2;
  std::map<std::string, double> mixed;
  for (const auto& [sym, x] : bcc.entries()) mixed[sym] += (1.0 - v) * x;
  for (const auto& [sym, x] : b2.entries()) mixed[sym] += v * x;
  return Composition::from_amounts(mixed);
}

CandidateTriple CandidateTriple::make(Composition bcc, Composition b2, double b2_vol) {
  if (!(b2_vol >= kMinB2Volume - 1e-12 && b2_vol <= kMaxB2Volume + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "B2 volume fraction " + textio::format_double(b2_vol) +
                                                " outside [0.20, 0.70]");
  }
  if (bcc.empty() || b2.empty()) throw Error(ErrorCode::EmptyFormula, "triple with empty composition");
  return CandidateTriple{std::move(bcc), std::move(b2), b2_vol};
}

std::string format_triple(const CandidateTriple& t) {
  return format_composition(t.bcc) + "|" + format_composition(t.b2) + "|" +
         textio::format_fixed(t.b2_vol * 100.0, 1) + "%";
}

CandidateTriple parse_triple(std::string_view text, const ElementTable& table) {
  const auto fields = textio::split(textio::trim(text), '|');
  if (fields.size() != 3) throw Error(ErrorCode::MalformedTriple, "expected bcc|b2|vol%: '" + std::string(text) + "'");
  std::string_view vol = textio::trim(fields[2]);
  if (vol.empty() || vol.back() != '%') throw Error(ErrorCode::MalformedTriple, "volume lacks '%'");
  vol.remove_suffix(1);
  auto pct = textio::parse_double(vol);
  if (!pct || vol.find_first_not_of("0123456789.") != std::string_view::npos) {
    throw Error(ErrorCode::MalformedNumber, "bad volume percent '" + std::string(vol) + "'");
  }
  const double v = *pct / 100.0;
  if (!(v >= kMinB2Volume - 1e-12 && v <= kMaxB2Volume + 1e-12)) {
    throw Error(ErrorCode::MalformedTriple, "volume percent out of range: " + std::string(vol));
  }
  return CandidateTriple{parse_formula(fields[0], table), parse_formula(fields[1], table), v};
}

}  // namespace alloydpo::chem
