#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alloydpo/composition.hpp"
#include "alloydpo/elements.hpp"
#include "alloydpo/phase.hpp"
#include "alloydpo/policy.hpp"
#include "alloydpo/rng.hpp"

namespace alloydpo::test {

std::filesystem::path data_path(const std::string& name);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

const chem::ElementTable& elements();

// 1..max_elements distinct symbols with random positive amounts.
chem::Composition random_composition(Rng& rng, std::size_t max_elements = 5);

// Table over `grid` where each temperature holds the given (label, fraction, lattice) rows.
struct Row {
  std::string label;
  double fraction;
  std::optional<double> lattice;
};
phase::PhaseTable make_table(const std::vector<double>& grid,
                             const std::function<std::vector<Row>(double)>& rows_at);

// Specials plus the plain tokens A, B, C.
policy::Vocab tiny_vocab();

// Every parameter, output layer included, ~ N(0, scale^2).
policy::PolicyParams random_params(const policy::Vocab& vocab, policy::PolicyShape shape, double scale,
                                   std::uint64_t seed);

}  // namespace alloydpo::test
