#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "alloydpo/elements.hpp"

namespace alloydpo::chem {

struct ElementRole {
  std::string symbol;
  bool bcc_former = false;
  bool a_site = false;
  bool b_site = false;
};

// Which elements form BCC solid solutions and which occupy the A/B
// sublattices of a B2 compound. CSV header: symbol,bcc,a_site,b_site
class RoleTable {
 public:
  RoleTable() = default;
  explicit RoleTable(std::vector<ElementRole> roles);

  static RoleTable parse_csv(std::istream& in);
  static RoleTable load_csv(const std::filesystem::path& path);
  static const RoleTable& standard();

  // Throws UnknownElement when a role names an element missing from `table`.
  void check_whitelist(const ElementTable& table) const;

  std::vector<std::string> bcc_formers() const;
  std::vector<std::string> a_site() const;
  std::vector<std::string> b_site() const;

  bool is_bcc_former(std::string_view symbol) const;
  bool is_a_site(std::string_view symbol) const;
  bool is_b_site(std::string_view symbol) const;

  const std::vector<ElementRole>& roles() const { return roles_; }

 private:
  const ElementRole* find(std::string_view symbol) const;

  std::vector<ElementRole> roles_;
};

}  // namespace alloydpo::chem
