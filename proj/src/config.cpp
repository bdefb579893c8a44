#include "alloydpo/config.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "alloydpo/elements.hpp"
#include "alloydpo/error.hpp"
#include "alloydpo/textio.hpp"

namespace alloydpo::cli {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::ConfigError, "invalid value for " + key + ": '" + value + "'");
}

int to_int(const std::string& key, const std::string& v) {
  const auto n = textio::parse_int(textio::trim(v));
  if (!n || *n < std::numeric_limits<int>::min() || *n > std::numeric_limits<int>::max()) bad_value(key, v);
  return static_cast<int>(*n);
}

double to_double(const std::string& key, const std::string& v) {
  const auto d = textio::parse_double(textio::trim(v));
  if (!d) bad_value(key, v);
  return *d;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const auto s = textio::trim(v);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) bad_value(key, v);
  try {
    return std::stoull(std::string(s));
  } catch (const std::exception&) {
    bad_value(key, v);
  }
}

std::string opt_str(const std::optional<double>& v) { return v ? textio::format_double(*v) : ""; }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ALLOYDPO_INT(name)                                                              \
  Field {                                                                               \
    #name, [](RunConfig& c, const std::string& v) { c.name = to_int(#name, v); },       \
        [](const RunConfig& c) { return std::to_string(c.name); }                       \
  }
#define ALLOYDPO_DOUBLE(name)                                                           \
  Field {                                                                               \
    #name, [](RunConfig& c, const std::string& v) { c.name = to_double(#name, v); },    \
        [](const RunConfig& c) { return textio::format_double(c.name); }                \
  }
#define ALLOYDPO_STRING(name)                                                           \
  Field {                                                                               \
    #name, [](RunConfig& c, const std::string& v) { c.name = std::string(textio::trim(v)); }, \
        [](const RunConfig& c) { return std::string(c.name); }                          \
  }
#define ALLOYDPO_OPT_DOUBLE(name)                                                       \
  Field {                                                                               \
    #name,                                                                              \
        [](RunConfig& c, const std::string& v) {                                        \
          if (textio::trim(v).empty()) c.name.reset();                                  \
          else c.name = to_double(#name, v);                                            \
        },                                                                              \
        [](const RunConfig& c) { return opt_str(c.name); }                              \
  }
#define ALLOYDPO_PATH(name)                                                             \
  Field {                                                                               \
    #name, [](RunConfig& c, const std::string& v) { c.name = std::string(textio::trim(v)); }, \
        [](const RunConfig& c) { return c.name.string(); }                              \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      ALLOYDPO_PATH(element_table),
      ALLOYDPO_PATH(role_table),
      ALLOYDPO_PATH(out_dir),
      ALLOYDPO_PATH(pools),
      ALLOYDPO_PATH(oracle_cache),
      ALLOYDPO_STRING(oracle),
      ALLOYDPO_PATH(bridge_request_dir),
      ALLOYDPO_PATH(bridge_response_dir),
      ALLOYDPO_INT(bridge_timeout_s),
      ALLOYDPO_PATH(phase_rules),
      ALLOYDPO_INT(grid_step_k),
      ALLOYDPO_INT(max_bcc_elements),
      ALLOYDPO_DOUBLE(single_phase_min),
      ALLOYDPO_INT(max_bcc_pool),
      ALLOYDPO_INT(max_b2_pool),
      ALLOYDPO_INT(volumes_per_pair),
      ALLOYDPO_STRING(volume_sampler),
      ALLOYDPO_DOUBLE(volume_mean),
      ALLOYDPO_DOUBLE(volume_sd),
      ALLOYDPO_INT(window),
      ALLOYDPO_INT(embed),
      ALLOYDPO_INT(hidden),
      ALLOYDPO_DOUBLE(init_scale),
      ALLOYDPO_INT(sft_examples),
      ALLOYDPO_DOUBLE(sft_lr),
      ALLOYDPO_INT(sft_epochs),
      ALLOYDPO_INT(sft_batch),
      ALLOYDPO_DOUBLE(sft_momentum),
      ALLOYDPO_INT(n_samples),
      ALLOYDPO_DOUBLE(temperature),
      ALLOYDPO_INT(max_len),
      ALLOYDPO_DOUBLE(beta),
      ALLOYDPO_DOUBLE(top_frac),
      ALLOYDPO_INT(rejected_per_chosen),
      ALLOYDPO_DOUBLE(dpo_lr),
      ALLOYDPO_INT(dpo_steps),
      ALLOYDPO_INT(dpo_batch),
      ALLOYDPO_DOUBLE(dpo_momentum),
      ALLOYDPO_OPT_DOUBLE(coverage_delta),
      ALLOYDPO_OPT_DOUBLE(novelty_delta),
      ALLOYDPO_INT(unique_n),
      ALLOYDPO_INT(baseline_n),
      ALLOYDPO_INT(top_k),
      ALLOYDPO_STRING(query_set),
      Field{"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      Field{"workers",
            [](RunConfig& c, const std::string& v) {
              const int n = to_int("workers", v);
              if (n < 1) bad_value("workers", v);
              c.workers = static_cast<unsigned>(n);
            },
            [](const RunConfig& c) { return std::to_string(c.workers); }},
  };
  return f;
}

#undef ALLOYDPO_INT
#undef ALLOYDPO_DOUBLE
#undef ALLOYDPO_STRING
#undef ALLOYDPO_OPT_DOUBLE
#undef ALLOYDPO_PATH

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown config key: " + key);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.element_table = chem::default_data_dir() / "elements.csv";
  c.role_table = chem::default_data_dir() / "roles.csv";
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) { field(key).set(cfg, value); }

std::string get_value(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  int lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = textio::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    set_value(cfg, std::string(textio::trim(line.substr(0, eq))), std::string(textio::trim(line.substr(eq + 1))));
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::ConfigError, "config file not found: " + path.string());
  apply_config_text(cfg, textio::read_file(path), path.string());
}

void apply_env(RunConfig& cfg, const std::function<const char*(const char*)>& getenv) {
  for (const auto& f : fields()) {
    std::string name = "ALLOYDPO_";
    for (char ch : f.key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = getenv(name.c_str())) f.set(cfg, v);
  }
}

void validate(const RunConfig& cfg) {
  require(std::filesystem::is_regular_file(cfg.element_table),
          "element table not found: " + cfg.element_table.string());
  require(std::filesystem::is_regular_file(cfg.role_table), "role table not found: " + cfg.role_table.string());
  require(cfg.oracle == "surrogate" || cfg.oracle == "file-bridge", "oracle must be surrogate or file-bridge");
  require(cfg.volume_sampler == "normal" || cfg.volume_sampler == "uniform",
          "volume_sampler must be normal or uniform");
  require(cfg.beta > 0, "beta must be > 0");
  require(cfg.top_frac > 0 && cfg.top_frac < 1, "top_frac must be in (0, 1)");
  require(cfg.rejected_per_chosen >= 1, "rejected_per_chosen must be >= 1");
  require(cfg.grid_step_k > 0, "grid_step_k must be > 0");
  require(cfg.bridge_timeout_s > 0, "bridge_timeout_s must be > 0");
  require(cfg.max_bcc_elements >= 1, "max_bcc_elements must be >= 1");
  require(cfg.single_phase_min > 0 && cfg.single_phase_min <= 1, "single_phase_min must be in (0, 1]");
  require(cfg.max_bcc_pool >= 0 && cfg.max_b2_pool >= 0, "pool caps must be >= 0");
  require(cfg.volumes_per_pair >= 1, "volumes_per_pair must be >= 1");
  require(cfg.volume_sd >= 0, "volume_sd must be >= 0");
  require(cfg.window >= 1 && cfg.embed >= 1 && cfg.hidden >= 1, "policy dimensions must be >= 1");
  require(cfg.init_scale >= 0, "init_scale must be >= 0");
  require(cfg.sft_examples >= 0, "sft_examples must be >= 0");
  require(cfg.sft_lr > 0 && cfg.dpo_lr > 0, "learning rates must be > 0");
  require(cfg.sft_epochs >= 0 && cfg.dpo_steps >= 0, "epochs/steps must be >= 0");
  require(cfg.sft_batch >= 1 && cfg.dpo_batch >= 1, "batch sizes must be >= 1");
  require(cfg.sft_momentum >= 0 && cfg.sft_momentum < 1 && cfg.dpo_momentum >= 0 && cfg.dpo_momentum < 1,
          "momentum must be in [0, 1)");
  require(cfg.n_samples >= 1, "n_samples must be >= 1");
  require(cfg.temperature > 0, "temperature must be > 0");
  require(cfg.max_len >= 1, "max_len must be >= 1");
  require(!cfg.coverage_delta || *cfg.coverage_delta >= 0, "coverage_delta must be >= 0");
  require(!cfg.novelty_delta || *cfg.novelty_delta >= 0, "novelty_delta must be >= 0");
  require(cfg.unique_n >= 1, "unique_n must be >= 1");
  require(cfg.baseline_n >= 1, "baseline_n must be >= 1");
  require(cfg.top_k >= 1, "top_k must be >= 1");
}

std::string show_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace alloydpo::cli
