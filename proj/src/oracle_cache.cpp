#include <sstream>

#include "alloydpo/error.hpp"
#include "alloydpo/oracle.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::phase {

namespace {

std::string cache_key(const chem::Composition& master, std::span<const double> grid) {
  return chem::format_composition(master) + "@" + grid_key(grid);
}

}  // namespace

CachedOracle::CachedOracle(std::shared_ptr<const PhaseOracle> inner, std::filesystem::path store,
                           PhaseClassifier classifier)
    : inner_(std::move(inner)), store_(std::move(store)), classifier_(std::move(classifier)) {
  std::error_code ec;
  std::filesystem::create_directories(store_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create oracle cache " + store_.string());
}

std::filesystem::path CachedOracle::entry_path(const chem::Composition& master, std::span<const double> grid) const {
  return store_ / (textio::hex64(textio::fnv1a64(cache_key(master, grid))) + ".csv");
}

std::mutex& CachedOracle::key_mutex(const std::string& key) const {
  std::lock_guard lock(map_mutex_);
  auto& slot = key_mutexes_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

PhaseTable CachedOracle::equilibrium(const chem::Composition& master, std::span<const double> grid) const {
  const std::string key = cache_key(master, grid);
  const std::string marker = "# key=" + key;
  const auto path = entry_path(master, grid);
  std::lock_guard lock(key_mutex(key));

  if (std::filesystem::exists(path)) {
    try {
      const std::string text = textio::read_file(path);
      const auto newline = text.find('\n');
      if (newline == std::string::npos || text.substr(0, newline) != marker) {
        throw Error(ErrorCode::StoreCorrupt, "key mismatch");
      }
      std::istringstream body(text.substr(newline + 1));
      PhaseTable table = parse_phase_table(body, master, classifier_);
      if (table.grid.size() != grid.size()) throw Error(ErrorCode::StoreCorrupt, "grid mismatch");
      ++hits_;
      return table;
    } catch (const Error& e) {
      throw Error(ErrorCode::StoreCorrupt, "cache entry " + path.string() + ": " + e.what());
    }
  }

  ++misses_;
  const std::string csv = format_phase_table(inner_->equilibrium(master, grid));
  textio::write_file_atomic(path, marker + "\n" + csv);
  // Hand back the re-parsed table so hits and misses are indistinguishable.
  std::istringstream body(csv);
  return parse_phase_table(body, master, classifier_);
}

}  // namespace alloydpo::phase
