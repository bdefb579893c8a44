#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alloydpo::cli {

struct RunConfig {
  // paths
  std::filesystem::path element_table;
  std::filesystem::path role_table;
  std::filesystem::path out_dir = "run";
  std::filesystem::path pools;         // empty: <out_dir>/pools.csv
  std::filesystem::path oracle_cache;  // empty: no cache

  // oracle
  std::string oracle = "surrogate";  // surrogate | file-bridge
  std::filesystem::path bridge_request_dir = "bridge/requests";
  std::filesystem::path bridge_response_dir = "bridge/responses";
  int bridge_timeout_s = 600;
  std::filesystem::path phase_rules;  // empty: built-in phase name rules
  int grid_step_k = 25;

  // pools
  int max_bcc_elements = 4;
  double single_phase_min = 0.99;
  int max_bcc_pool = 207;  // 0 keeps every filtered composition
  int max_b2_pool = 88;

  // SFT data
  int volumes_per_pair = 3;
  std::string volume_sampler = "normal";  // normal | uniform
  double volume_mean = 0.45;
  double volume_sd = 0.15;

  // policy
  int window = 40;
  int embed = 6;
  int hidden = 32;
  double init_scale = 0.1;
  int sft_examples = 2000;  // 0 trains on the whole SFT file
  double sft_lr = 0.5;
  int sft_epochs = 16;
  int sft_batch = 32;
  double sft_momentum = 0.9;

  // sampling
  int n_samples = 500;
  double temperature = 1.0;
  int max_len = 96;

  // DPO
  double beta = 0.5;
  double top_frac = 0.25;
  int rejected_per_chosen = 100;
  double dpo_lr = 0.005;
  int dpo_steps = 100;
  int dpo_batch = 32;
  double dpo_momentum = 0.9;

  // evaluation and analysis
  std::optional<double> coverage_delta;
  std::optional<double> novelty_delta;
  int unique_n = 100;
  int baseline_n = 500;
  int top_k = 5;
  std::string query_set = "Mo,Nb,W";

  std::uint64_t seed = 0;
  unsigned workers = 1;

  std::filesystem::path pools_path() const { return pools.empty() ? out_dir / "pools.csv" : pools; }
};

// Defaults with the element and role tables taken from the data directory.
RunConfig default_config();

// Keys accepted by set_value, in show-config order.
std::vector<std::string> config_keys();

// Throws ConfigError for unknown keys or unparseable values.
void set_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& cfg, const std::string& key);

// `key = value` lines; blank lines and '#' comments are ignored.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
// ALLOYDPO_<KEY> (upper case) overrides, looked up through `getenv`.
void apply_env(RunConfig& cfg, const std::function<const char*(const char*)>& getenv);

// Range checks and existence of the element and role tables. Throws ConfigError.
void validate(const RunConfig& cfg);

// Every key = value, one per line, in config_keys() order.
std::string show_config(const RunConfig& cfg);

}  // namespace alloydpo::cli
