#include "alloydpo/roles.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::chem {

namespace {

bool flag(const std::string& text, const std::string& line) {
  const auto t = textio::trim(text);
  if (t == "1") return true;
  if (t == "0") return false;
  throw Error(ErrorCode::SchemaError, "role flag must be 0 or 1: " + line);
}

std::vector<std::string> sorted_where(const std::vector<ElementRole>& roles, bool ElementRole::*member) {
  std::vector<std::string> out;
  for (const auto& r : roles) {
    if (r.*member) out.push_back(r.symbol);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

RoleTable::RoleTable(std::vector<ElementRole> roles) : roles_(std::move(roles)) {
  std::set<std::string> seen;
  for (const auto& r : roles_) {
    if (!seen.insert(r.symbol).second) throw Error(ErrorCode::SchemaError, "duplicate role row " + r.symbol);
  }
}

RoleTable RoleTable::parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyRoleTable, "role table file is empty");
  if (textio::trim(line) != "symbol,bcc,a_site,b_site") {
    throw Error(ErrorCode::SchemaError, "unexpected role table header: " + line);
  }
  std::vector<ElementRole> roles;
  while (std::getline(in, line)) {
    if (textio::trim(line).empty()) continue;
    const auto f = textio::split(textio::trim(line), ',');
    if (f.size() != 4) throw Error(ErrorCode::SchemaError, "role row needs 4 fields: " + line);
    roles.push_back({std::string(textio::trim(f[0])), flag(f[1], line), flag(f[2], line), flag(f[3], line)});
  }
  return RoleTable(std::move(roles));
}

RoleTable RoleTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open role table " + path.string());
  return parse_csv(in);
}

const RoleTable& RoleTable::standard() {
  static const RoleTable table = load_csv(default_data_dir() / "roles.csv");
  return table;
}

void RoleTable::check_whitelist(const ElementTable& table) const {
  for (const auto& r : roles_) {
    if (!table.contains(r.symbol)) throw Error(ErrorCode::UnknownElement, "role table names " + r.symbol);
  }
}

std::vector<std::string> RoleTable::bcc_formers() const { return sorted_where(roles_, &ElementRole::bcc_former); }
std::vector<std::string> RoleTable::a_site() const { return sorted_where(roles_, &ElementRole::a_site); }
std::vector<std::string> RoleTable::b_site() const { return sorted_where(roles_, &ElementRole::b_site); }

const ElementRole* RoleTable::find(std::string_view symbol) const {
  for (const auto& r : roles_) {
    if (r.symbol == symbol) return &r;
  }
  return nullptr;
}

bool RoleTable::is_bcc_former(std::string_view symbol) const {
  const auto* r = find(symbol);
  return r && r->bcc_former;
}
bool RoleTable::is_a_site(std::string_view symbol) const {
  const auto* r = find(symbol);
  return r && r->a_site;
}
bool RoleTable::is_b_site(std::string_view symbol) const {
  const auto* r = find(symbol);
  return r && r->b_site;
}

}  // namespace alloydpo::chem
