#include <nlohmann/json.hpp>
#include <thread>

#include "alloydpo/error.hpp"
#include "alloydpo/oracle.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::phase {

FileBridgeOracle::FileBridgeOracle(Options options, PhaseClassifier classifier)
    : options_(std::move(options)), classifier_(std::move(classifier)) {
  std::error_code ec;
  std::filesystem::create_directories(options_.request_dir, ec);
  std::filesystem::create_directories(options_.response_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create bridge directories");
}

std::string FileBridgeOracle::request_id(const chem::Composition& master, std::span<const double> grid) {
  return textio::hex64(textio::fnv1a64(chem::format_composition(master) + "@" + grid_key(grid)));
}

std::string FileBridgeOracle::request_line(const std::string& id, const chem::Composition& master,
                                           std::span<const double> grid) {
  nlohmann::ordered_json j;
  j["id"] = id;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [sym, x] : master.entries()) m[sym] = x;
  j["master"] = std::move(m);
  j["grid_K"] = std::vector<double>(grid.begin(), grid.end());
  return j.dump();
}

PhaseTable FileBridgeOracle::equilibrium(const chem::Composition& master, std::span<const double> grid) const {
  const std::string id = request_id(master, grid);
  const auto csv = options_.response_dir / (id + ".csv");
  const auto err = options_.response_dir / (id + ".err");

  if (!std::filesystem::exists(csv) && !std::filesystem::exists(err)) {
    textio::write_file_atomic(options_.request_dir / (id + ".jsonl"), request_line(id, master, grid) + "\n");
  }
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  while (true) {
    if (std::filesystem::exists(err)) {
      throw Error(ErrorCode::OracleFailure, "bridge request " + id + ": " +
                                                std::string(textio::trim(textio::read_file(err))));
    }
    if (std::filesystem::exists(csv)) {
      PhaseTable table = read_phase_table(csv, master, classifier_);
      if (table.grid.size() != grid.size()) {
        throw Error(ErrorCode::OracleFailure, "bridge response " + id + " does not cover the requested grid");
      }
      return table;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw Error(ErrorCode::OracleFailure, "bridge request " + id + " timed out");
    }
    std::this_thread::sleep_for(options_.poll_interval);
  }
}

}  // namespace alloydpo::phase
