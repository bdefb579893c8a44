#include "alloydpo/elements.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::chem {

namespace {

constexpr const char* kHeader =
    "symbol,electronegativity,radius_pm,z,mass,melt_K,valence,group,period,oxidation_states,is_metal,"
    "bcc_a_angstrom";

double positive_field(const std::string& text, const std::string& name, const std::string& symbol) {
  auto v = textio::parse_double(text);
  if (!v || *v <= 0.0) {
    throw Error(ErrorCode::SchemaError, "element " + symbol + ": bad " + name + " '" + text + "'");
  }
  return *v;
}

int int_field(const std::string& text, const std::string& name, const std::string& symbol) {
  auto v = textio::parse_int(text);
  if (!v || *v <= 0) {
    throw Error(ErrorCode::SchemaError, "element " + symbol + ": bad " + name + " '" + text + "'");
  }
  return static_cast<int>(*v);
}

}  // namespace

double Element::lattice_reference() const {
  if (bcc_a) return *bcc_a;
  return 4.0 * radius_pm / (std::sqrt(3.0) * 100.0);
}

ElementTable::ElementTable(std::vector<Element> elements) : elements_(std::move(elements)) {
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (!index_.emplace(elements_[i].symbol, i).second) {
      throw Error(ErrorCode::SchemaError, "duplicate element symbol " + elements_[i].symbol);
    }
  }
}

ElementTable ElementTable::parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "element table is empty");
  if (std::string(textio::trim(line)) != kHeader) {
    throw Error(ErrorCode::SchemaError, "unexpected element table header: " + line);
  }
  std::vector<Element> elements;
  while (std::getline(in, line)) {
    if (textio::trim(line).empty()) continue;
    const auto f = textio::split(textio::trim(line), ',');
    if (f.size() != 12) throw Error(ErrorCode::SchemaError, "element row needs 12 fields: " + line);
    Element e;
    e.symbol = f[0];
    if (e.symbol.empty() || e.symbol.size() > 2) throw Error(ErrorCode::SchemaError, "bad symbol: " + line);
    e.electronegativity = positive_field(f[1], "electronegativity", e.symbol);
    e.radius_pm = positive_field(f[2], "radius_pm", e.symbol);
    e.z = int_field(f[3], "z", e.symbol);
    e.mass = positive_field(f[4], "mass", e.symbol);
    e.melt_k = positive_field(f[5], "melt_K", e.symbol);
    e.valence = int_field(f[6], "valence", e.symbol);
    e.group = int_field(f[7], "group", e.symbol);
    e.period = int_field(f[8], "period", e.symbol);
    for (const auto& s : textio::split(f[9], ';')) {
      auto q = textio::parse_int(s);
      if (!q || *q == 0) throw Error(ErrorCode::SchemaError, "element " + e.symbol + ": bad oxidation state");
      e.oxidation_states.push_back(static_cast<int>(*q));
    }
    if (f[10] != "0" && f[10] != "1") throw Error(ErrorCode::SchemaError, "element " + e.symbol + ": is_metal");
    e.is_metal = f[10] == "1";
    if (!textio::trim(f[11]).empty()) e.bcc_a = positive_field(f[11], "bcc_a_angstrom", e.symbol);
    elements.push_back(std::move(e));
  }
  return ElementTable(std::move(elements));
}

ElementTable ElementTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open element table " + path.string());
  return parse_csv(in);
}

const ElementTable& ElementTable::standard() {
  static const ElementTable table = load_csv(default_data_dir() / "elements.csv");
  return table;
}

ElementTable ElementTable::restrict_to(std::span<const std::string> symbols) const {
  std::vector<Element> kept;
  for (const auto& s : symbols) kept.push_back(at(s));
  return ElementTable(std::move(kept));
}

const Element* ElementTable::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? nullptr : &elements_[it->second];
}

const Element& ElementTable::at(std::string_view symbol) const {
  const Element* e = find(symbol);
  if (!e) throw Error(ErrorCode::UnknownElement, std::string(symbol));
  return *e;
}

std::vector<std::string> ElementTable::symbols() const {
  std::vector<std::string> out;
  out.reserve(elements_.size());
  for (const auto& e : elements_) out.push_back(e.symbol);
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("ALLOYDPO_DATA_DIR"); env && *env) return env;
  return ALLOYDPO_DATA_DIR;
}

}  // namespace alloydpo::chem
