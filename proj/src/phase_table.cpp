#include "alloydpo/phase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::phase {

std::string_view to_string(PhaseClass c) {
  switch (c) {
    case PhaseClass::BCC: return "BCC";
    case PhaseClass::B2: return "B2";
    case PhaseClass::Liquid: return "LIQUID";
    case PhaseClass::Other: return "OTHER";
  }
  return "OTHER";
}

PhaseClass phase_class_from_string(std::string_view s) {
  s = textio::trim(s);
  if (s == "BCC") return PhaseClass::BCC;
  if (s == "B2") return PhaseClass::B2;
  if (s == "LIQUID") return PhaseClass::Liquid;
  if (s == "OTHER") return PhaseClass::Other;
  throw Error(ErrorCode::SchemaError, "unknown phase class '" + std::string(s) + "'");
}

PhaseClassifier::PhaseClassifier()
    : PhaseClassifier({
          {"LIQ", PhaseClass::Liquid},
          {"DISORD", PhaseClass::BCC},
          {"B2#[2-9]|ORDERED|^B2($|[_#])", PhaseClass::B2},
          {"^BCC", PhaseClass::BCC},
      }) {}

PhaseClassifier::PhaseClassifier(std::vector<std::pair<std::string, PhaseClass>> rules) {
  for (auto& [pattern, cls] : rules) {
    try {
      rules_.emplace_back(std::regex(pattern, std::regex::ECMAScript | std::regex::icase), cls);
    } catch (const std::regex_error&) {
      throw Error(ErrorCode::SchemaError, "bad phase rule pattern '" + pattern + "'");
    }
  }
}

PhaseClassifier PhaseClassifier::load_csv(const std::filesystem::path& path) {
  const auto lines = textio::read_lines(path);
  if (lines.empty() || textio::trim(lines[0]) != "pattern,class") {
    throw Error(ErrorCode::SchemaError, "phase rule file needs header pattern,class");
  }
  std::vector<std::pair<std::string, PhaseClass>> rules;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = textio::trim(lines[i]);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string_view::npos) throw Error(ErrorCode::SchemaError, "bad rule row: " + std::string(line));
    rules.emplace_back(std::string(line.substr(0, comma)), phase_class_from_string(line.substr(comma + 1)));
  }
  return PhaseClassifier(std::move(rules));
}

PhaseClass PhaseClassifier::classify(std::string_view label) const {
  const std::string s(label);
  for (const auto& [re, cls] : rules_) {
    if (std::regex_search(s, re)) return cls;
  }
  return PhaseClass::Other;
}

PhaseClass classify_phase(std::string_view label) {
  static const PhaseClassifier classifier;
  return classifier.classify(label);
}

std::vector<double> standard_grid(double step_k) {
  if (!(step_k > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid step must be positive");
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double t = kMinTemperatureK + k * step_k;
    if (t > kMaxTemperatureK + 1e-9) break;
    grid.push_back(t);
  }
  if (grid.back() < kMaxTemperatureK - 1e-9) grid.push_back(kMaxTemperatureK);
  return grid;
}

std::string grid_key(std::span<const double> grid) {
  std::string joined;
  for (double t : grid) {
    joined += textio::format_double(t);
    joined += ',';
  }
  return textio::hex64(textio::fnv1a64(joined));
}

std::size_t PhaseTable::record_count() const {
  std::size_t n = 0;
  for (const auto& row : by_temperature) n += row.size();
  return n;
}

std::vector<PhaseRecord> PhaseTable::records() const {
  std::vector<PhaseRecord> out;
  for (const auto& row : by_temperature) out.insert(out.end(), row.begin(), row.end());
  return out;
}

double PhaseTable::fraction(std::size_t t, PhaseClass c) const {
  double sum = 0.0;
  for (const auto& r : by_temperature.at(t)) {
    if (r.phase_class == c) sum += r.mole_fraction;
  }
  return sum;
}

std::optional<double> PhaseTable::lattice(std::size_t t, PhaseClass c, double eps) const {
  double weight = 0.0;
  double acc = 0.0;
  for (const auto& r : by_temperature.at(t)) {
    if (r.phase_class != c || r.mole_fraction < eps) continue;
    if (!r.lattice_param) return std::nullopt;
    weight += r.mole_fraction;
    acc += r.mole_fraction * *r.lattice_param;
  }
  if (weight <= 0.0) return std::nullopt;
  return acc / weight;
}

void PhaseTable::check_normalized(double tol) const {
  for (std::size_t t = 0; t < by_temperature.size(); ++t) {
    double sum = 0.0;
    for (const auto& r : by_temperature[t]) sum += r.mole_fraction;
    if (std::abs(sum - 1.0) > tol) {
      throw Error(ErrorCode::NormalizationError, "phase fractions at " + textio::format_double(grid.at(t)) +
                                                     " K sum to " + textio::format_double(sum));
    }
  }
}

void PhaseTable::check_standard_span() const {
  if (grid.empty() || grid.front() != kMinTemperatureK || grid.back() != kMaxTemperatureK) {
    throw Error(ErrorCode::SchemaError, "temperature grid must span 373 K to 2273 K");
  }
}

PhaseTable parse_phase_table(std::istream& in, const chem::Composition& master, const PhaseClassifier& classifier) {
  std::string line;
  if (!std::getline(in, line) || textio::trim(line).empty()) throw Error(ErrorCode::EmptyTable, "phase table is empty");
  const auto header = textio::split(textio::trim(line), ',');
  auto column = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::SchemaError, "missing column " + std::string(name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_temp = column("temperature_K");
  const std::size_t c_phase = column("phase");
  const std::size_t c_frac = column("mole_fraction");
  const std::size_t c_lat = column("lattice_param_A");

  std::map<double, std::vector<PhaseRecord>> grouped;
  while (std::getline(in, line)) {
    const auto trimmed = textio::trim(line);
    if (trimmed.empty()) continue;
    const auto f = textio::split(trimmed, ',');
    if (f.size() != header.size()) throw Error(ErrorCode::SchemaError, "row has wrong field count: " + line);
    PhaseRecord r;
    auto temp = textio::parse_double(f[c_temp]);
    auto frac = textio::parse_double(f[c_frac]);
    if (!temp || !frac) throw Error(ErrorCode::SchemaError, "non-numeric field in row: " + line);
    if (*temp < kMinTemperatureK - 1e-9 || *temp > kMaxTemperatureK + 1e-9) {
      throw Error(ErrorCode::SchemaError, "temperature outside [373, 2273] K: " + line);
    }
    if (*frac < 0.0 || *frac > 1.0 + 1e-9) throw Error(ErrorCode::SchemaError, "mole fraction outside [0,1]: " + line);
    r.temperature_k = *temp;
    r.mole_fraction = *frac;
    r.label = std::string(textio::trim(f[c_phase]));
    if (r.label.empty()) throw Error(ErrorCode::SchemaError, "empty phase label: " + line);
    r.phase_class = classifier.classify(r.label);
    if (!textio::trim(f[c_lat]).empty()) {
      auto a = textio::parse_double(f[c_lat]);
      if (!a || *a <= 0.0) throw Error(ErrorCode::SchemaError, "bad lattice parameter: " + line);
      r.lattice_param = *a;
    }
    grouped[r.temperature_k].push_back(std::move(r));
  }
  if (grouped.empty()) throw Error(ErrorCode::EmptyTable, "phase table has no rows");

  PhaseTable table;
  table.master = master;
  for (auto& [temp, rows] : grouped) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const PhaseRecord& a, const PhaseRecord& b) { return a.label < b.label; });
    table.grid.push_back(temp);
    table.by_temperature.push_back(std::move(rows));
  }
  table.check_normalized(1e-3);
  return table;
}

PhaseTable read_phase_table(const std::filesystem::path& path, const chem::Composition& master,
                            const PhaseClassifier& classifier) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open phase table " + path.string());
  return parse_phase_table(in, master, classifier);
}

std::string format_phase_table(const PhaseTable& table) {
  std::string out(kPhaseTableHeader);
  out += '\n';
  for (std::size_t t = 0; t < table.by_temperature.size(); ++t) {
    auto rows = table.by_temperature[t];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const PhaseRecord& a, const PhaseRecord& b) { return a.label < b.label; });
    for (const auto& r : rows) {
      out += textio::format_double(table.grid[t]);
      out += ',';
      out += r.label;
      out += ',';
      out += textio::format_double(r.mole_fraction);
      out += ',';
      if (r.lattice_param) out += textio::format_double(*r.lattice_param);
      out += '\n';
    }
  }
  return out;
}

}  // namespace alloydpo::phase
