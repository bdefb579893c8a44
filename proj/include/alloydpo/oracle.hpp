#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "alloydpo/phase.hpp"

namespace alloydpo::phase {

// Memoizes an inner oracle on disk, keyed by the canonical composition string
// plus a hash of the temperature grid. Writes are serialized per key and land
// via rename, so readers never observe partial entries.
class CachedOracle final : public PhaseOracle {
 public:
  CachedOracle(std::shared_ptr<const PhaseOracle> inner, std::filesystem::path store,
               PhaseClassifier classifier = PhaseClassifier());

  // Throws StoreCorrupt when an existing entry cannot be read back.
  PhaseTable equilibrium(const chem::Composition& master, std::span<const double> grid) const override;

  std::filesystem::path entry_path(const chem::Composition& master, std::span<const double> grid) const;
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::mutex& key_mutex(const std::string& key) const;

  std::shared_ptr<const PhaseOracle> inner_;
  std::filesystem::path store_;
  PhaseClassifier classifier_;
  mutable std::mutex map_mutex_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>> key_mutexes_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

// Client side of the file-exchange protocol used by external equilibrium
// backends. Each query writes `<request_dir>/<id>.jsonl` holding one line
//   {"id": str, "master": {"El": frac, ...}, "grid_K": [...]}
// and waits for `<response_dir>/<id>.csv` (a phase table) or `<id>.err`.
class FileBridgeOracle final : public PhaseOracle {
 public:
  struct Options {
    std::filesystem::path request_dir;
    std::filesystem::path response_dir;
    std::chrono::milliseconds poll_interval{200};
    std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  };

  explicit FileBridgeOracle(Options options, PhaseClassifier classifier = PhaseClassifier());

  // Throws OracleFailure with the backend message on `<id>.err` or timeout.
  PhaseTable equilibrium(const chem::Composition& master, std::span<const double> grid) const override;

  static std::string request_id(const chem::Composition& master, std::span<const double> grid);
  static std::string request_line(const std::string& id, const chem::Composition& master,
                                  std::span<const double> grid);

 private:
  Options options_;
  PhaseClassifier classifier_;
};

}  // namespace alloydpo::phase
